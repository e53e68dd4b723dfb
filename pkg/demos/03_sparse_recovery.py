"""Sparse recovery from compressive coincidence data.

Acquires 30 percent of the Nyquist measurement count at R=32 and compares
the three solvers on the same data, with and without shot noise.
"""

import numpy as np

from aquaghost import acquisition, dmd, optics, quality, recovery, scene

R = 32
M = round(0.30 * R * R)

truth = scene.make_synthetic("card", R)
patterns = dmd.generate_patterns("bernoulli01", M, R, seed=3)
channel = optics.preset("shallow")
source = optics.SourceModel(kind="quantum", photon_pair_rate=1e6,
                            detector_efficiency=0.15)

dictionary = recovery.build_dictionary(dmd.as_matrix(patterns), "dct2")
lipschitz = recovery.estimate_lipschitz(dictionary)

for noiseless in (True, False):
    cfg = acquisition.AcquisitionConfig(exposure_per_pattern=1.0, seed=1,
                                        noiseless=noiseless)
    mv = acquisition.acquire(truth, patterns, channel, source, cfg)
    tag = "noiseless" if noiseless else "poisson"
    print(f"--- {tag} ({M} measurements, {R * R} pixels) ---")

    for solver in ("mp", "omp", "bp_ista"):
        if solver == "bp_ista":
            s_scale = acquisition.signal_scale(channel, source)
            y_norm = mv.y / (1.0 * s_scale / (R * R))
            corr = dictionary.matrix.T @ y_norm
            rc = recovery.RecoveryConfig(solver="bp_ista",
                                         lambda_reg=1e-5 * np.abs(corr).max(),
                                         max_iterations=60, residual_tol=1e-6)
        else:
            rc = recovery.RecoveryConfig(solver=solver, sparsity_k=96,
                                         max_iterations=960, residual_tol=1e-9)
        rec = recovery.reconstruct(mv, patterns, rc, dictionary=dictionary,
                                   lipschitz=lipschitz)
        img = rec.image_clipped
        print(f"{solver:8s} psnr {quality.psnr(truth.pixels, img):6.2f} dB  "
              f"ssim {quality.ssim(truth.pixels, img):.3f}  "
              f"iters {rec.iterations:4d}  atoms {len(rec.support)}")
    print()
