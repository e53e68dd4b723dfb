"""End-to-end acceptance suite.

Each test function checks one numbered acceptance property; run with -v to
get one pass/fail line per criterion.  Criterion 7 compares against a golden
value frozen from the first verified run.  The default-sweep fixture is
shared by the determinism and runtime criteria, so the full sweep executes
twice in total.
"""

import math
import time

import numpy as np
import pytest

from aquaghost import acquisition, dmd, harness, optics, quality, recovery, scene
from aquaghost.rng import Stream

from helpers import identity_dictionary, planted_instance

# frozen after the first verified 20-seed run of criterion 7
GOLDEN_C7_MEAN_PSNR_DELTA = 2.513160600959646
GOLDEN_C7_WIN_RATE = 1.0


def classical():
    return optics.SourceModel(kind="classical", photon_pair_rate=1e6,
                              detector_efficiency=0.5)


def test_c01_noiseless_exact_recovery():
    t0 = time.perf_counter()
    truth = scene.make_synthetic("sparse_dct", 8, 4, seed=0)
    patterns = dmd.generate_patterns("gaussian", 32, 8, 17)
    channel = optics.preset("shallow")
    mv = acquisition.acquire(truth, patterns, channel, classical(),
                             acquisition.AcquisitionConfig(exposure_per_pattern=1.0,
                                                           noiseless=True))
    cfg = recovery.RecoveryConfig(solver="omp", sparsity_k=4, transform="dct2",
                                  residual_tol=0.0, max_iterations=50)
    rec = recovery.reconstruct(mv, patterns, cfg)
    err = np.abs(rec.image - truth.pixels).max()
    elapsed = time.perf_counter() - t0
    assert err < 1e-6, f"max abs error {err}"
    assert elapsed < 1.0, f"took {elapsed:.2f} s"


def test_c02_omp_matches_oracle_support():
    t0 = time.perf_counter()
    support_misses = []
    for seed in range(100):
        y, d, _, _ = planted_instance(16, 2, 10, seed, tag=2)
        o_support, _, o_res = recovery.exhaustive_support_oracle(y, d, 2)
        cfg = recovery.RecoveryConfig(solver="omp", sparsity_k=2,
                                      transform="identity")
        rec = recovery.omp_solve(y, d, cfg, dictionary=identity_dictionary(d))
        assert rec.residual_norm >= o_res - 1e-9, f"seed {seed}: OMP beat the oracle"
        if o_res < 1e-9 and tuple(sorted(rec.support)) != o_support:
            support_misses.append(seed)
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"took {elapsed:.2f} s"
    assert not support_misses, (
        f"OMP support differs from the oracle on {len(support_misses)} of 100 "
        f"exact-fit seeds: {support_misses}")


def test_c03_solver_hierarchy():
    for seed in range(100):
        y, d, _, _ = planted_instance(64, 4, 32, seed, tag=3)
        dic = identity_dictionary(d)
        _, _, o_res = recovery.exhaustive_support_oracle(y, d, 4)
        omp = recovery.omp_solve(y, d, recovery.RecoveryConfig(
            solver="omp", sparsity_k=4, transform="identity"), dictionary=dic)
        mp = recovery.mp_solve(y, d, recovery.RecoveryConfig(
            solver="mp", sparsity_k=4, transform="identity",
            max_iterations=4), dictionary=dic)
        assert o_res <= omp.residual_norm + 1e-9, f"seed {seed}: oracle > OMP"
        assert omp.residual_norm <= mp.residual_norm + 1e-9, f"seed {seed}: OMP > MP"


def test_c04_ista_monotone_and_zero_solution():
    for seed in range(50):
        y, d, _, _ = planted_instance(36, 4, 24, seed, tag=4)
        noise = Stream(seed + 1000).gaussian_block(24) * 0.05
        y = y + noise
        dic = identity_dictionary(d)
        lam = 1e-3 * float(np.abs(d.T @ y).max())
        rec = recovery.ista_solve(y, d, recovery.RecoveryConfig(
            solver="bp_ista", lambda_reg=lam, transform="identity",
            max_iterations=200), dictionary=dic)
        trace = rec.objective_trace
        assert np.all(np.diff(trace) <= 1e-12 * np.maximum(trace[:-1], 1.0)), \
            f"seed {seed}: objective increased"
        lam_big = float(np.abs(d.T @ y).max())
        zero = recovery.ista_solve(y, d, recovery.RecoveryConfig(
            solver="bp_ista", lambda_reg=lam_big, transform="identity",
            max_iterations=20), dictionary=dic)
        assert np.all(zero.coefficients == 0.0), f"seed {seed}: nonzero at lambda_max"


def test_c05_poisson_sampler_statistics():
    n = 100_000
    for i, lam in enumerate((0.5, 4.0, 100.0)):
        st = Stream(5000 + i)
        draws = np.array([acquisition.poisson_draw(lam, st) for _ in range(n)],
                         dtype=np.float64)
        mean_sigma = math.sqrt(lam / n)
        assert abs(draws.mean() - lam) <= 3 * mean_sigma, f"mean off at lambda={lam}"
        mu4 = lam * (1.0 + 3.0 * lam)
        var_of_s2 = (mu4 - (n - 3) / (n - 1) * lam ** 2) / n
        assert abs(draws.var(ddof=1) - lam) <= 3 * math.sqrt(var_of_s2), \
            f"variance off at lambda={lam}"


def test_c06_beer_lambert_properties():
    rng = Stream(6)
    for _ in range(1000):
        c1, c2, z = (float(v) * 3.0 for v in rng.float_block(3))
        t_sum = optics.transmittance(optics.WaterChannel(c1 + c2, z, 0.0))
        t_prod = (optics.transmittance(optics.WaterChannel(c1, z, 0.0))
                  * optics.transmittance(optics.WaterChannel(c2, z, 0.0)))
        assert abs(t_sum - t_prod) <= 1e-12 * t_sum
        lo, hi = sorted((c1, c2))
        assert (optics.transmittance(optics.WaterChannel(hi, z, 0.0))
                <= optics.transmittance(optics.WaterChannel(lo, z, 0.0)))


def test_c07_quantum_beats_classical_r80(tmp_path):
    t0 = time.perf_counter()
    spec = harness.ExperimentSpec(resolutions=(80,), solvers=("omp",),
                                  num_seeds=20, out_dir=str(tmp_path / "c7"))
    report = harness.run_experiment(spec)
    elapsed = time.perf_counter() - t0
    assert report.ok, f"cell errors: {report.errors}"
    s = report.summary
    assert len(s.pairs) == 20
    assert s.psnr_win_rate >= 0.9, f"win rate {s.psnr_win_rate}"
    assert s.mean_psnr_delta > 0.0, f"mean delta {s.mean_psnr_delta}"
    assert s.mean_psnr_delta == pytest.approx(GOLDEN_C7_MEAN_PSNR_DELTA, rel=1e-9)
    assert s.psnr_win_rate == pytest.approx(GOLDEN_C7_WIN_RATE, rel=1e-12)
    assert elapsed < 300.0, f"took {elapsed:.1f} s"


def test_c08_stray_photons_grow_with_resolution():
    channel = optics.preset("shallow")
    assert channel.stray_scaling_exponent == 1.0
    sources = {"quantum": optics.SourceModel(kind="quantum", photon_pair_rate=1e6,
                                             detector_efficiency=0.15),
               "classical": optics.SourceModel(kind="classical", photon_pair_rate=1e6,
                                               detector_efficiency=0.15)}
    for kind, src in sources.items():
        for seed in range(3):
            ratios = {}
            for r in (80, 180):
                truth = scene.make_synthetic("card", r)
                m = round(0.30 * r * r)
                patterns = dmd.generate_patterns("bernoulli01", m, r, seed)
                x = truth.flat()
                s_scale = acquisition.signal_scale(channel, src)
                bg = optics.effective_background(channel, src, r)
                mat = dmd.as_matrix(patterns).astype(np.float64)
                signal = s_scale * (mat @ x) / (r * r)
                background = bg * np.mean(mat, axis=1)
                ratios[r] = float(np.mean(background / signal))
            assert ratios[180] > ratios[80], f"{kind} seed {seed}: {ratios}"


@pytest.fixture(scope="module")
def default_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep") / "run_a"
    spec = harness.ExperimentSpec(out_dir=str(out))
    t0 = time.perf_counter()
    report = harness.run_experiment(spec)
    elapsed = time.perf_counter() - t0
    return out, report, elapsed


def _tree_bytes(root, names):
    blobs = {}
    for p in sorted(root.rglob("*")):
        if p.is_file() and (p.name in names or p.suffix == ".pgm"):
            blobs[str(p.relative_to(root))] = p.read_bytes()
    return blobs


def test_c09_default_sweep_deterministic(default_sweep, tmp_path):
    out_a, report_a, _ = default_sweep
    assert report_a.ok, f"cell errors: {report_a.errors}"
    out_b = tmp_path / "run_b"
    report_b = harness.run_experiment(harness.ExperimentSpec(out_dir=str(out_b)))
    assert report_b.ok
    names = {"results.csv", "summary.csv"}
    a = _tree_bytes(out_a, names)
    b = _tree_bytes(out_b, names)
    assert set(a) == set(b)
    diff = [k for k in a if a[k] != b[k]]
    assert not diff, f"differing files: {diff}"


def test_c10_metric_sanity():
    rng = np.random.default_rng(10)
    for _ in range(20):
        a = rng.random((20, 20))
        b = rng.random((20, 20))
        assert quality.ssim(a, a) == pytest.approx(1.0, abs=1e-9)
        assert quality.psnr(a, a) == 100.0
        assert quality.mse(a, b) == quality.mse(b, a)
    reports = []
    for seed in range(5):
        pq = float(rng.uniform(10, 30))
        pc = float(rng.uniform(10, 30))
        label_q = quality.CellLabel("quantum", 80, "omp", seed)
        label_c = quality.CellLabel("classical", 80, "omp", seed)
        reports.append(quality.QualityReport(0.0, pq, 0.5, label_q))
        reports.append(quality.QualityReport(0.0, pc, 0.4, label_c))
    fwd = quality.compare_cells(reports)
    swapped = [quality.QualityReport(r.mse, r.psnr, r.ssim, quality.CellLabel(
        "classical" if r.label.source == "quantum" else "quantum",
        r.label.resolution, r.label.solver, r.label.seed)) for r in reports]
    rev = quality.compare_cells(swapped)
    assert rev.mean_psnr_delta == pytest.approx(-fwd.mean_psnr_delta, abs=1e-12)
    for pf, pr in zip(fwd.pairs, rev.pairs):
        assert pr.psnr_delta == pytest.approx(-pf.psnr_delta, abs=1e-12)


def test_c11_default_sweep_runtime(default_sweep):
    _, report, elapsed = default_sweep
    assert report.ok
    assert len(report.results) == 2 * 10 * 2 * 2
    assert elapsed < 900.0, f"default sweep took {elapsed:.0f} s"
