"""Underwater entangled-photon ghost imaging: simulation and sparse recovery.

Pipeline: scene -> water channel -> DMD patterns -> coincidence counts ->
sparse recovery -> quality metrics, with a deterministic experiment harness
for quantum-vs-classical and resolution sweeps.
"""

from .acquisition import (AcquisitionConfig, MeasurementVector, acquire,
                          expected_rate, poisson_draw, signal_scale)
from .dmd import (PatternSet, as_matrix, dump_patterns, generate_patterns,
                  load_patterns, open_fraction)
from .harness import ExperimentSpec, export_conditioning, run_experiment, spec_from_json
from .optics import SourceModel, WaterChannel, effective_background, preset, transmittance
from .quality import (CellLabel, ComparisonSummary, QualityReport, compare_cells,
                      median_filter3, mse, psnr, ssim, threshold)
from .recovery import (Dictionary, Reconstruction, RecoveryConfig,
                       build_dictionary, dct2_forward, dct2_inverse,
                       exhaustive_support_oracle, ista_solve, mp_solve,
                       omp_solve, reconstruct)
from .scene import SceneImage, load_pgm, make_synthetic, resample_nearest, save_pgm

__version__ = "0.1.0"
