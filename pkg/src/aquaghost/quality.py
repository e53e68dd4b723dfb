"""Image quality metrics, post-processing filters, and the paired
quantum-vs-classical comparison."""

import math
from dataclasses import dataclass

import numpy as np
import scipy.ndimage
import scipy.signal

from .errors import ImageTooSmall, PairingError, ShapeError

PSNR_CAP_DB = 100.0
_PSNR_MSE_FLOOR = 1e-10

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _grids(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def mse(a, b):
    a, b = _grids(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b, peak=1.0):
    """10*log10(peak^2 / mse), capped at 100 dB for mse below 1e-10."""
    err = mse(a, b)
    if err < _PSNR_MSE_FLOOR:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(peak * peak / err), PSNR_CAP_DB)


def _gaussian_kernel():
    half = SSIM_WINDOW // 2
    g = np.exp(-np.arange(-half, half + 1) ** 2 / (2.0 * SSIM_SIGMA ** 2))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(a, b, dynamic_range=1.0):
    """Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5, K1/K2 standard)."""
    a, b = _grids(a, b)
    if min(a.shape) < SSIM_WINDOW:
        raise ImageTooSmall(f"ssim needs min dimension >= {SSIM_WINDOW}, got {a.shape}")
    w = _gaussian_kernel()
    mu_a = scipy.signal.correlate2d(a, w, mode="valid")
    mu_b = scipy.signal.correlate2d(b, w, mode="valid")
    var_a = scipy.signal.correlate2d(a * a, w, mode="valid") - mu_a ** 2
    var_b = scipy.signal.correlate2d(b * b, w, mode="valid") - mu_b ** 2
    cov = scipy.signal.correlate2d(a * b, w, mode="valid") - mu_a * mu_b
    c1 = (SSIM_K1 * dynamic_range) ** 2
    c2 = (SSIM_K2 * dynamic_range) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def median_filter3(grid):
    """3x3 median with edge replication."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("empty grid")
    return scipy.ndimage.median_filter(grid, size=3, mode="nearest")


def threshold(grid, t):
    if not 0.0 <= t <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    return (np.asarray(grid, dtype=np.float64) >= t).astype(np.float64)


@dataclass(frozen=True)
class CellLabel:
    source: str
    resolution: int
    solver: str
    seed: int

    def paired_key(self):
        return (self.resolution, self.solver, self.seed)


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr: float
    ssim: float  # nan when the image is below the SSIM window
    label: CellLabel


@dataclass(frozen=True)
class PairDelta:
    resolution: int
    solver: str
    seed: int
    psnr_quantum: float
    psnr_classical: float
    psnr_delta: float
    ssim_quantum: float
    ssim_classical: float
    ssim_delta: float


@dataclass(frozen=True)
class ComparisonSummary:
    pairs: tuple
    psnr_win_rate: float       # quantum wins, ties split evenly
    mean_psnr_delta: float
    std_psnr_delta: float      # sample std (0 for a single pair)
    ssim_win_rate: float
    mean_ssim_delta: float
    std_ssim_delta: float


def _win_rate(deltas):
    deltas = np.asarray(deltas)
    if np.any(np.isnan(deltas)):
        return float("nan")
    return float((np.sum(deltas > 0) + 0.5 * np.sum(deltas == 0)) / len(deltas))


def _stats(deltas):
    deltas = np.asarray(deltas, dtype=np.float64)
    mean = float(np.mean(deltas))
    std = float(np.std(deltas, ddof=1)) if len(deltas) > 1 else 0.0
    return mean, std


def compare_cells(reports):
    """Pair quantum and classical reports cell-for-cell and summarize deltas.

    Every quantum cell must have exactly one classical partner sharing
    (resolution, solver, seed), and vice versa.
    """
    quantum = {}
    classical = {}
    for rep in reports:
        bucket = quantum if rep.label.source == "quantum" else classical
        key = rep.label.paired_key()
        if key in bucket:
            raise PairingError(f"duplicate {rep.label.source} cell {key}")
        bucket[key] = rep
    if set(quantum) != set(classical):
        odd = set(quantum) ^ set(classical)
        raise PairingError(f"unpaired cells: {sorted(odd)}")
    if not quantum:
        raise PairingError("no cells to compare")

    pairs = []
    for key in sorted(quantum):
        q, c = quantum[key], classical[key]
        pairs.append(PairDelta(
            resolution=key[0], solver=key[1], seed=key[2],
            psnr_quantum=q.psnr, psnr_classical=c.psnr,
            psnr_delta=q.psnr - c.psnr,
            ssim_quantum=q.ssim, ssim_classical=c.ssim,
            ssim_delta=q.ssim - c.ssim))

    psnr_deltas = [p.psnr_delta for p in pairs]
    ssim_deltas = [p.ssim_delta for p in pairs]
    mean_p, std_p = _stats(psnr_deltas)
    mean_s, std_s = _stats(ssim_deltas)
    return ComparisonSummary(
        pairs=tuple(pairs),
        psnr_win_rate=_win_rate(psnr_deltas),
        mean_psnr_delta=mean_p, std_psnr_delta=std_p,
        ssim_win_rate=_win_rate(ssim_deltas),
        mean_ssim_delta=mean_s, std_ssim_delta=std_s)
