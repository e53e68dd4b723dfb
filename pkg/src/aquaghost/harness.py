"""Experiment orchestration: sweeps over source kind, resolution and solver.

A run enumerates cells in a fixed order (resolution, seed, source, solver),
derives every RNG stream from the master seed with purpose tags, and writes a
deterministic output tree: per-cell reconstruction PGMs, results.csv,
summary.csv, errors.csv, a conditioning-export directory, and aggregate.json.
Wall-clock timing lives in run.meta only, so the rest of the tree is
byte-identical between repeat runs.
"""

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acquisition, dmd, optics, quality, recovery, scene
from .errors import AquaGhostError
from .rng import TAG_NOISE, TAG_PATTERNS, derive_seed

_SOURCE_ID = {"quantum": 0, "classical": 1}


@dataclass(frozen=True)
class ExperimentSpec:
    scene: dict = field(default_factory=lambda: {"kind": "card"})
    channel: object = "shallow"          # preset name or WaterChannel params
    photon_pair_rate: float = 1e6
    detector_efficiency: float = 0.15
    coincidence_window: float = 1e-9
    quantum_gating: float = 0.02
    pattern_kind: str = "bernoulli01"
    m_ratio: float = 0.30
    resolutions: tuple = (80, 180)
    sources: tuple = ("quantum", "classical")
    solvers: tuple = ("omp", "bp_ista")
    num_seeds: int = 10
    master_seed: int = 0
    exposure: float = 1.0
    subtract_accidentals: bool = True
    noiseless: bool = False
    transform: str = "dct2"
    sparsity_k: int = 96
    lambda_rel: float = 1e-5
    ista_max_iterations: int = 60
    ista_tol: float = 1e-6
    greedy_residual_tol: float = 1e-9
    postprocess: str = "none"            # or "median3"
    record_timing: bool = False
    out_dir: str = "aquaghost_out"

    def __post_init__(self):
        for res in self.resolutions:
            if max(1, round(self.m_ratio * res * res)) < 1:
                raise ValueError("m_ratio too small for the resolutions")
        if not 0 < self.m_ratio <= 1:
            raise ValueError("m_ratio must lie in (0, 1]")
        if self.postprocess not in ("none", "median3"):
            raise ValueError(f"unknown postprocess {self.postprocess!r}")
        for s in self.sources:
            if s not in _SOURCE_ID:
                raise ValueError(f"unknown source kind {s!r}")


def spec_from_json(path=None, overrides=None):
    """Build an ExperimentSpec from a JSON file plus CLI-style overrides."""
    data = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    valid = set(ExperimentSpec.__dataclass_fields__)
    unknown = set(data) - valid
    if unknown:
        raise ValueError(f"unknown spec fields: {sorted(unknown)}")
    for key in ("resolutions", "sources", "solvers"):
        if key in data:
            data[key] = tuple(data[key])
    return ExperimentSpec(**data)


def _build_channel(spec):
    if isinstance(spec.channel, str):
        return optics.preset(spec.channel)
    return optics.WaterChannel(**spec.channel)


def _build_source(spec, kind):
    gating = spec.quantum_gating if kind == "quantum" else 1.0
    return optics.SourceModel(kind=kind, photon_pair_rate=spec.photon_pair_rate,
                              detector_efficiency=spec.detector_efficiency,
                              coincidence_window=spec.coincidence_window,
                              gating_suppression=gating)


def _build_scene(spec, resolution):
    cfg = dict(spec.scene)
    if "path" in cfg:
        img = scene.load_pgm(cfg["path"])
        if img.width != resolution or img.height != resolution:
            img = scene.resample_nearest(img, resolution)
        return img
    return scene.make_synthetic(cfg.get("kind", "card"), resolution,
                                sparsity=cfg.get("sparsity", 1),
                                seed=cfg.get("seed", spec.master_seed))


def _recovery_config(spec, solver, lambda_reg=None):
    if solver == "bp_ista":
        return recovery.RecoveryConfig(
            solver="bp_ista", lambda_reg=lambda_reg, transform=spec.transform,
            max_iterations=spec.ista_max_iterations, residual_tol=spec.ista_tol)
    return recovery.RecoveryConfig(
        solver=solver, sparsity_k=spec.sparsity_k, transform=spec.transform,
        max_iterations=10 * spec.sparsity_k, residual_tol=spec.greedy_residual_tol)


def export_conditioning(reconstruction, label, path_stem):
    """Write the clipped reconstruction plus a parameter sidecar.

    This pair is the input contract for any external generative model that
    consumes the imaging result; nothing downstream is implemented here.
    """
    r = reconstruction.image_clipped.shape[0]
    img = scene.SceneImage(width=reconstruction.image_clipped.shape[1],
                           height=r, pixels=reconstruction.image_clipped)
    scene.save_pgm(img, str(path_stem) + ".pgm")
    sidecar = (f"source={label.source}\nresolution={label.resolution}\n"
               f"solver={label.solver}\nseed={label.seed}\n")
    with open(str(path_stem) + ".txt", "w", newline="\n") as fh:
        fh.write(sidecar)


@dataclass(frozen=True)
class CellResult:
    cell_id: str
    label: quality.CellLabel
    report: quality.QualityReport
    iterations: int
    residual: float
    wall_ms: float


@dataclass(frozen=True)
class ExperimentReport:
    results: tuple
    errors: tuple
    summary: object          # ComparisonSummary or None
    out_dir: str

    @property
    def ok(self):
        return not self.errors


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{v:.9g}"


def _enumerate_cells(spec):
    for r in spec.resolutions:
        for seed_idx in range(spec.num_seeds):
            for source in spec.sources:
                for solver in spec.solvers:
                    yield r, seed_idx, source, solver


def run_experiment(spec):
    out = Path(spec.out_dir)
    cells_dir = out / "cells"
    cond_dir = out / "conditioning"
    for d in (out, cells_dir, cond_dir):
        d.mkdir(parents=True, exist_ok=True)

    channel = _build_channel(spec)
    sources = {kind: _build_source(spec, kind) for kind in spec.sources}

    scenes = {}
    pattern_cache = {}   # one slot: (R, seed_idx) -> PatternSet
    dict_cache = {}      # one slot: (R, seed_idx) -> (Dictionary, lipschitz)
    meas_cache = {}      # one slot: (R, seed_idx, source) -> MeasurementVector

    results = []
    errors = []
    timing = {}
    t_start = time.time()

    for r, seed_idx, source_kind, solver in _enumerate_cells(spec):
        cell_id = f"{source_kind}_r{r}_{solver}_s{seed_idx:03d}"
        label = quality.CellLabel(source=source_kind, resolution=r,
                                  solver=solver, seed=seed_idx)
        t0 = time.perf_counter()
        try:
            if r not in scenes:
                scenes[r] = _build_scene(spec, r)
            truth = scenes[r]

            pkey = (r, seed_idx)
            if pkey not in pattern_cache:
                pattern_cache.clear()
                dict_cache.clear()
                meas_cache.clear()
                pseed = derive_seed(spec.master_seed, TAG_PATTERNS, r, seed_idx)
                m = max(1, round(spec.m_ratio * r * r))
                pattern_cache[pkey] = dmd.generate_patterns(
                    spec.pattern_kind, m, r, pseed)
            patterns = pattern_cache[pkey]

            mkey = (r, seed_idx, source_kind)
            if mkey not in meas_cache:
                nseed = derive_seed(spec.master_seed, TAG_NOISE, r, seed_idx,
                                    _SOURCE_ID[source_kind])
                cfg = acquisition.AcquisitionConfig(
                    exposure_per_pattern=spec.exposure, seed=nseed,
                    subtract_accidentals=spec.subtract_accidentals,
                    noiseless=spec.noiseless)
                meas_cache[mkey] = acquisition.acquire(
                    truth, patterns, channel, sources[source_kind], cfg)
            measurements = meas_cache[mkey]

            if pkey not in dict_cache:
                dictionary = recovery.build_dictionary(
                    dmd.as_matrix(patterns), spec.transform)
                lip = (recovery.estimate_lipschitz(dictionary)
                       if "bp_ista" in spec.solvers else None)
                dict_cache[pkey] = (dictionary, lip)
            dictionary, lipschitz = dict_cache[pkey]

            lambda_reg = None
            if solver == "bp_ista":
                s_scale = acquisition.signal_scale(channel, sources[source_kind])
                y_norm = measurements.y / (spec.exposure * s_scale / (r * r))
                corr = dictionary.matrix.T @ y_norm.astype(
                    dictionary.matrix.dtype, copy=False)
                lambda_reg = spec.lambda_rel * float(np.max(np.abs(corr)))
                lambda_reg = max(lambda_reg, 1e-12)
            cfg = _recovery_config(spec, solver, lambda_reg)
            recon = recovery.reconstruct(measurements, patterns, cfg,
                                         dictionary=dictionary,
                                         lipschitz=lipschitz)

            image = recon.image_clipped
            if spec.postprocess == "median3":
                image = quality.median_filter3(image)
            mse_v = quality.mse(truth.pixels, image)
            psnr_v = quality.psnr(truth.pixels, image)
            ssim_v = (quality.ssim(truth.pixels, image)
                      if min(image.shape) >= quality.SSIM_WINDOW else float("nan"))
            report = quality.QualityReport(mse=mse_v, psnr=psnr_v, ssim=ssim_v,
                                           label=label)

            img = scene.SceneImage(width=image.shape[1], height=image.shape[0],
                                   pixels=image)
            scene.save_pgm(img, cells_dir / f"{cell_id}.pgm")
            export_conditioning(recon, label, cond_dir / cell_id)

            wall = (time.perf_counter() - t0) * 1000.0
            timing[cell_id] = wall
            results.append(CellResult(
                cell_id=cell_id, label=label, report=report,
                iterations=recon.iterations, residual=recon.residual_norm,
                wall_ms=wall if spec.record_timing else 0.0))
        except AquaGhostError as exc:
            timing[cell_id] = (time.perf_counter() - t0) * 1000.0
            errors.append((cell_id, type(exc).__name__, str(exc)))

    _write_results_csv(out / "results.csv", results)
    _write_errors_csv(out / "errors.csv", errors)

    summary = None
    if set(spec.sources) == {"quantum", "classical"} and results:
        complete = _complete_pairs(results)
        if complete:
            summary = quality.compare_cells([c.report for c in complete])
            _write_summary_csv(out / "summary.csv", summary)
            _write_aggregate(out / "aggregate.json", summary)
        else:
            _write_summary_csv(out / "summary.csv", None)
    else:
        _write_summary_csv(out / "summary.csv", None)

    meta = {"started_unix": t_start, "finished_unix": time.time(),
            "cell_wall_ms": timing}
    with open(out / "run.meta", "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return ExperimentReport(results=tuple(results), errors=tuple(errors),
                            summary=summary, out_dir=str(out))


def _complete_pairs(results):
    """Drop cells whose quantum/classical partner errored out."""
    by_key = {}
    for c in results:
        by_key.setdefault(c.label.paired_key(), {})[c.label.source] = c
    keep = []
    for c in results:
        if len(by_key[c.label.paired_key()]) == 2:
            keep.append(c)
    return keep


def _write_results_csv(path, results):
    with open(path, "w", newline="\n") as fh:
        fh.write("cell_id,source,resolution,solver,seed,mse,psnr,ssim,"
                 "iterations,residual,wall_ms\n")
        for c in results:
            rep = c.report
            fh.write(f"{c.cell_id},{c.label.source},{c.label.resolution},"
                     f"{c.label.solver},{c.label.seed},{_fmt(rep.mse)},"
                     f"{_fmt(rep.psnr)},{_fmt(rep.ssim)},{c.iterations},"
                     f"{_fmt(c.residual)},{_fmt(c.wall_ms)}\n")


def _write_errors_csv(path, errors):
    with open(path, "w", newline="\n") as fh:
        fh.write("cell_id,error,message\n")
        for cell_id, name, msg in errors:
            msg = msg.replace("\n", " ").replace(",", ";")
            fh.write(f"{cell_id},{name},{msg}\n")


def _write_summary_csv(path, summary):
    with open(path, "w", newline="\n") as fh:
        fh.write("resolution,solver,seed,psnr_quantum,psnr_classical,psnr_delta,"
                 "ssim_quantum,ssim_classical,ssim_delta\n")
        if summary is None:
            return
        for p in summary.pairs:
            fh.write(f"{p.resolution},{p.solver},{p.seed},"
                     f"{_fmt(p.psnr_quantum)},{_fmt(p.psnr_classical)},"
                     f"{_fmt(p.psnr_delta)},{_fmt(p.ssim_quantum)},"
                     f"{_fmt(p.ssim_classical)},{_fmt(p.ssim_delta)}\n")


def _json_safe(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def _write_aggregate(path, summary):
    groups = {}
    for p in summary.pairs:
        groups.setdefault((p.resolution, p.solver), []).append(p)
    payload = {"overall": _summary_dict(summary), "groups": {}}
    for (r, solver), pairs in sorted(groups.items()):
        psnr_d = [p.psnr_delta for p in pairs]
        ssim_d = [p.ssim_delta for p in pairs]
        payload["groups"][f"r{r}_{solver}"] = {
            "pairs": len(pairs),
            "psnr_win_rate": _json_safe(quality._win_rate(psnr_d)),
            "mean_psnr_delta": _json_safe(float(np.mean(psnr_d))),
            "ssim_win_rate": _json_safe(quality._win_rate(ssim_d)),
            "mean_ssim_delta": _json_safe(float(np.mean(ssim_d))),
        }
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _summary_dict(summary):
    return {"pairs": len(summary.pairs),
            "psnr_win_rate": _json_safe(summary.psnr_win_rate),
            "mean_psnr_delta": _json_safe(summary.mean_psnr_delta),
            "std_psnr_delta": _json_safe(summary.std_psnr_delta),
            "ssim_win_rate": _json_safe(summary.ssim_win_rate),
            "mean_ssim_delta": _json_safe(summary.mean_ssim_delta),
            "std_ssim_delta": _json_safe(summary.std_ssim_delta)}
