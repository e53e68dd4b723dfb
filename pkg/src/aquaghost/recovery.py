"""Sparse recovery: greedy pursuit, proximal-gradient l1, and a brute-force
support oracle.

All solvers work on the effective dictionary D = A * Psi^-1, where Psi is the
sparsifying transform (identity or orthonormal 2D DCT).  With the orthonormal
DCT, row i of D is simply the forward DCT of pattern row i, so D is built by
a batched transform of A's rows; no N x N matrix is ever formed.

Determinism: single-threaded, fixed summation order, lowest-index tie-breaks
in atom selection.  Large dictionaries (M*N above ~5e7 entries) are held in
float32 to fit desk-scale memory; everything else runs in float64.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .dmd import as_matrix
from .errors import (DegenerateDictionary, IllConditionedActiveSet,
                     MismatchedM, NumericalDivergence, OracleTooLarge,
                     ShapeError)

_FLOAT32_THRESHOLD = 50_000_000  # D entries beyond which float32 is used
_GRAM_JITTER = 1e-12


def dct2_forward(grid):
    """Orthonormal separable 2D type-II DCT."""
    return scipy.fft.dctn(np.asarray(grid, dtype=np.float64), norm="ortho")


def dct2_inverse(coeffs):
    return scipy.fft.idctn(np.asarray(coeffs, dtype=np.float64), norm="ortho")


@dataclass(frozen=True)
class RecoveryConfig:
    solver: str                      # "mp", "omp" or "bp_ista"
    sparsity_k: int = None           # mp/omp stopping size
    lambda_reg: float = None         # bp_ista l1 weight
    max_iterations: int = 1000
    residual_tol: float = 0.0
    transform: str = "dct2"          # "identity" or "dct2"

    def __post_init__(self):
        if self.solver not in ("mp", "omp", "bp_ista"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.transform not in ("identity", "dct2"):
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.solver in ("mp", "omp"):
            if self.sparsity_k is None or self.sparsity_k < 1:
                raise ValueError("mp/omp need sparsity_k >= 1")
        if self.solver == "bp_ista":
            if self.lambda_reg is None or self.lambda_reg <= 0:
                raise ValueError("bp_ista needs lambda_reg > 0")


@dataclass(frozen=True)
class Reconstruction:
    image: np.ndarray = field(repr=False)          # raw recovered grid
    image_clipped: np.ndarray = field(repr=False)  # clipped to [0, 1]
    coefficients: np.ndarray = field(repr=False)   # transform-domain solution
    support: tuple
    iterations: int
    residual_norm: float
    objective_trace: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class Dictionary:
    """Explicit effective dictionary D = A * Psi^-1 with column norms."""
    matrix: np.ndarray = field(repr=False)
    column_norms: np.ndarray = field(repr=False)
    transform: str
    resolution: int


def build_dictionary(a, transform="dct2", dtype=None):
    a = np.asarray(a)
    m, n = a.shape
    r = int(round(math.sqrt(n)))
    if r * r != n:
        raise ShapeError(f"pattern length {n} is not a square grid")
    if dtype is None:
        dtype = np.float32 if m * n > _FLOAT32_THRESHOLD else np.float64
    if transform == "identity":
        d = a.astype(dtype)
    else:
        d = np.empty((m, n), dtype=dtype)
        chunk = max(1, (1 << 27) // (8 * n))
        for lo in range(0, m, chunk):
            hi = min(lo + chunk, m)
            block = a[lo:hi].astype(np.float64).reshape(hi - lo, r, r)
            d[lo:hi] = scipy.fft.dctn(block, axes=(1, 2), norm="ortho").reshape(hi - lo, n)
    sq = np.zeros(n)
    row_chunk = max(1, (1 << 26) // (8 * n))
    for lo in range(0, m, row_chunk):
        block = d[lo:lo + row_chunk].astype(np.float64)
        sq += np.einsum("ij,ij->j", block, block)
    norms = np.sqrt(sq)
    return Dictionary(matrix=d, column_norms=norms, transform=transform, resolution=r)


def _coeffs_to_image(coeffs, dictionary):
    grid = coeffs.reshape(dictionary.resolution, dictionary.resolution)
    if dictionary.transform == "dct2":
        grid = dct2_inverse(grid)
    return grid


def _finish(coeffs, dictionary, support, iterations, residual_norm, trace):
    image = _coeffs_to_image(coeffs, dictionary)
    return Reconstruction(image=image, image_clipped=np.clip(image, 0.0, 1.0),
                          coefficients=coeffs, support=tuple(support),
                          iterations=iterations, residual_norm=float(residual_norm),
                          objective_trace=np.asarray(trace, dtype=np.float64))


def _prep(y, a, config, dictionary):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if dictionary is None:
        dictionary = build_dictionary(a, config.transform)
    if y.size != dictionary.matrix.shape[0]:
        raise ShapeError(f"y length {y.size} vs {dictionary.matrix.shape[0]} patterns")
    return y, dictionary


def _check_norms(dictionary):
    if np.any(dictionary.column_norms == 0.0):
        j = int(np.argmin(dictionary.column_norms))
        raise DegenerateDictionary(f"dictionary column {j} has zero norm")


def mp_solve(y, a, config, dictionary=None):
    """Matching pursuit with additive coefficient updates.

    Selection maximizes |<r, d_j>| / ||d_j||, lowest index on ties; stops at
    sparsity_k distinct atoms, relative residual <= residual_tol, or
    max_iterations.
    """
    y, dic = _prep(y, a, config, dictionary)
    _check_norms(dic)
    d = dic.matrix
    n = d.shape[1]
    s = np.zeros(n)
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        return _finish(s, dic, [], 0, 0.0, [])

    r = y.copy()
    active = []
    seen = set()
    trace = []
    it = 0
    while it < config.max_iterations:
        it += 1
        corr = (d.T @ r.astype(d.dtype, copy=False)).astype(np.float64)
        j = int(np.argmax(np.abs(corr) / dic.column_norms))
        col = d[:, j].astype(np.float64)
        c = float(col @ r) / float(dic.column_norms[j]) ** 2
        s[j] += c
        r = r - c * col
        if j not in seen:
            seen.add(j)
            active.append(j)
        rnorm = float(np.linalg.norm(r))
        trace.append(rnorm)
        if len(active) >= config.sparsity_k or rnorm / ynorm <= config.residual_tol:
            break
    return _finish(s, dic, active, it, np.linalg.norm(r), trace)


def omp_solve(y, a, config, dictionary=None):
    """Orthogonal matching pursuit: MP selection plus full active-set least
    squares (normal equations with 1e-12 diagonal jitter) every iteration."""
    y, dic = _prep(y, a, config, dictionary)
    _check_norms(dic)
    d = dic.matrix
    m, n = d.shape
    s = np.zeros(n)
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        return _finish(s, dic, [], 0, 0.0, [])

    k_max = min(config.sparsity_k, n, m)
    active = []
    cols = np.empty((m, k_max))
    gram = np.empty((k_max, k_max))
    rhs = np.empty(k_max)
    blocked = np.zeros(n, dtype=bool)
    r = y.copy()
    coef = np.empty(0)
    trace = []
    it = 0
    while it < config.max_iterations and len(active) < k_max:
        it += 1
        corr = np.abs((d.T @ r.astype(d.dtype, copy=False)).astype(np.float64))
        corr /= dic.column_norms
        corr[blocked] = -np.inf
        j = int(np.argmax(corr))
        k = len(active)
        active.append(j)
        blocked[j] = True
        cols[:, k] = d[:, j].astype(np.float64)
        cross = cols[:, :k + 1].T @ cols[:, k]
        gram[k, :k + 1] = cross
        gram[:k + 1, k] = cross
        rhs[k] = cols[:, k] @ y
        g = gram[:k + 1, :k + 1] + _GRAM_JITTER * np.eye(k + 1)
        try:
            coef = np.linalg.solve(g, rhs[:k + 1])
        except np.linalg.LinAlgError as exc:
            raise IllConditionedActiveSet(str(exc)) from exc
        if not np.all(np.isfinite(coef)):
            raise IllConditionedActiveSet("non-finite active-set solution")
        r = y - cols[:, :k + 1] @ coef
        rnorm = float(np.linalg.norm(r))
        trace.append(rnorm)
        if rnorm / ynorm <= config.residual_tol:
            break
    s[active] = coef
    return _finish(s, dic, active, it, np.linalg.norm(r), trace)


def estimate_lipschitz(dictionary, iterations=50, safety=1.05):
    """Largest eigenvalue of D^T D by power iteration from a fixed start."""
    d = dictionary.matrix
    n = d.shape[1]
    v = np.full(n, 1.0 / math.sqrt(n), dtype=d.dtype)
    lam = 1.0
    for _ in range(iterations):
        w = (d.T @ (d @ v)).astype(np.float64)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return safety
        v = (w / lam).astype(d.dtype)
    return lam * safety


def ista_solve(y, a, config, dictionary=None, lipschitz=None):
    """l1-regularized least squares by monotone proximal gradient (ISTA).

    Minimizes 0.5 * ||y - D s||^2 + lambda * ||s||_1 with step 1/L, L from 50
    power iterations times a 1.05 safety factor.  Stops on relative objective
    change <= residual_tol or max_iterations.
    """
    y, dic = _prep(y, a, config, dictionary)
    d = dic.matrix
    n = d.shape[1]
    lam = config.lambda_reg
    if lipschitz is None:
        lipschitz = estimate_lipschitz(dic)
    step = 1.0 / lipschitz

    s = np.zeros(n)
    ds = np.zeros(y.size)
    trace = []
    f_prev = None
    it = 0
    while it < config.max_iterations:
        it += 1
        grad = (d.T @ (ds - y).astype(d.dtype, copy=False)).astype(np.float64)
        z = s - step * grad
        s = np.sign(z) * np.maximum(np.abs(z) - step * lam, 0.0)
        ds = (d @ s.astype(d.dtype, copy=False)).astype(np.float64)
        f = 0.5 * float(np.sum((y - ds) ** 2)) + lam * float(np.sum(np.abs(s)))
        if not math.isfinite(f):
            raise NumericalDivergence(f"objective became {f} at iteration {it}")
        trace.append(f)
        if f_prev is not None and abs(f - f_prev) / max(f_prev, 1e-12) < config.residual_tol:
            break
        f_prev = f
    support = [int(j) for j in np.flatnonzero(s)]
    return _finish(s, dic, support, it, np.linalg.norm(y - ds), trace)


_SOLVERS = {"mp": mp_solve, "omp": omp_solve, "bp_ista": ista_solve}


def reconstruct(measurements, patterns, config, dictionary=None, lipschitz=None):
    """Full reconstruction from a MeasurementVector.

    Normalization: y_i is divided by exposure * S / N (S the unit-scene signal
    rate, N the pixel count), so the solver sees the unit-scale problem
    y_norm ~ A x.
    """
    from .acquisition import signal_scale  # local: acquisition imports dmd only

    if measurements.num_patterns != patterns.num_patterns:
        raise MismatchedM(f"{measurements.num_patterns} measurements vs "
                          f"{patterns.num_patterns} patterns")
    n = patterns.resolution ** 2
    s = signal_scale(measurements.channel, measurements.source)
    scale = measurements.config.exposure_per_pattern * s / n
    y_norm = np.asarray(measurements.y, dtype=np.float64) / scale
    solver = _SOLVERS[config.solver]
    if config.solver == "bp_ista":
        return solver(y_norm, as_matrix(patterns), config,
                      dictionary=dictionary, lipschitz=lipschitz)
    return solver(y_norm, as_matrix(patterns), config, dictionary=dictionary)


def exhaustive_support_oracle(y, d, k):
    """Global best k-support by enumerating every column subset.

    Subsets are scanned in lexicographic order; ties resolve to the first
    (lexicographically smallest) support.  Guarded at C(N, k) <= 1e6.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    d = np.asarray(d, dtype=np.float64)
    n = d.shape[1]
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside [0, {n}]")
    n_subsets = math.comb(n, k)
    if n_subsets > 1_000_000:
        raise OracleTooLarge(f"C({n},{k}) = {n_subsets} exceeds the 1e6 guard")
    ynorm2 = float(y @ y)
    if k == 0:
        return (), np.zeros(0), math.sqrt(ynorm2)

    combos = np.fromiter(itertools.chain.from_iterable(
        itertools.combinations(range(n), k)), dtype=np.int64).reshape(-1, k)
    gram = d.T @ d
    b = d.T @ y
    gs = gram[combos[:, :, None], combos[:, None, :]]
    bs = b[combos]
    try:
        cs = np.linalg.solve(gs, bs[..., None])[..., 0]
        res2 = np.maximum(ynorm2 - np.sum(bs * cs, axis=1), 0.0)
    except np.linalg.LinAlgError:
        # rare singular subsets: fall back to per-subset least squares
        res2 = np.empty(len(combos))
        for i, sub in enumerate(combos):
            c, *_ = np.linalg.lstsq(d[:, sub], y, rcond=None)
            res2[i] = float(np.sum((y - d[:, sub] @ c) ** 2))

    # the Gram shortcut loses ~1e-15 to cancellation near zero residual, so
    # re-fit every near-optimal subset directly before declaring a winner
    near = np.flatnonzero(res2 <= res2.min() + 1e-9 * (1.0 + ynorm2))
    best = None
    for i in near:
        sub = combos[i]
        c, *_ = np.linalg.lstsq(d[:, sub], y, rcond=None)
        res = float(np.linalg.norm(y - d[:, sub] @ c))
        if best is None or res < best[2]:
            best = (tuple(int(j) for j in sub), c, res)
    return best
