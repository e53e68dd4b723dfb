"""Forward model: scene + channel + source + patterns -> coincidence counts.

Per-pattern expected coincidence rate:

    rate_i = S * <a_i, x> / N + B_i
    S      = photon_pair_rate * detector_efficiency^2 * transmittance(channel)
    B_i    = effective_background(channel, source, R) * open_fraction_eff(a_i)

Counts are Poisson draws of rate_i * exposure from a sequential noise stream
in pattern order; the stored accidentals are the exact expectations
B_i * exposure (an idealized delayed-window estimator), subtracted from the
counts to form y when subtraction is enabled.  y may therefore be negative.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dmd import as_matrix, open_fraction_effective
from .errors import InvalidRate, ShapeError
from .optics import effective_background, transmittance
from .rng import Stream


@dataclass(frozen=True)
class AcquisitionConfig:
    exposure_per_pattern: float   # s
    seed: int = 0
    subtract_accidentals: bool = True
    noiseless: bool = False       # debug: exact expectations, no Poisson draw

    def __post_init__(self):
        if self.exposure_per_pattern <= 0:
            raise ValueError("exposure must be > 0")


@dataclass(frozen=True)
class MeasurementVector:
    counts: np.ndarray = field(repr=False)      # raw coincidences per pattern
    accidentals: np.ndarray = field(repr=False)  # expected background per pattern
    y: np.ndarray = field(repr=False)           # counts - accidentals (if enabled)
    patterns: object = None
    source: object = None
    channel: object = None
    config: object = None

    @property
    def num_patterns(self):
        return len(self.counts)


def signal_scale(channel, source):
    """S: coincidence rate for a fully open DMD and unit-reflectance scene."""
    return (source.photon_pair_rate * source.detector_efficiency ** 2
            * transmittance(channel))


def expected_rate(scene, pattern_row, channel, source, resolution):
    """Expected coincidence rate (counts/s) for one pattern row."""
    x = scene.flat()
    a = np.asarray(pattern_row, dtype=np.float64).reshape(-1)
    if scene.width != resolution or scene.height != resolution or a.size != resolution ** 2:
        raise ShapeError(
            f"scene {scene.height}x{scene.width} vs pattern length {a.size} "
            f"at R={resolution}")
    n = resolution ** 2
    open_eff = float(np.mean(np.abs(a)))
    background = effective_background(channel, source, resolution) * open_eff
    return signal_scale(channel, source) * float(a @ x) / n + background


def poisson_draw(lam, stream):
    """One exact Poisson draw from the stream.

    Inversion by sequential search below 30; Hormann's PTRS transformed
    rejection at 30 and above.
    """
    if not math.isfinite(lam) or lam < 0:
        raise InvalidRate(f"Poisson rate must be finite and >= 0, got {lam}")
    if lam == 0.0:
        return 0
    if lam < 30.0:
        p = math.exp(-lam)
        cdf = p
        k = 0
        u = stream.next_float()
        while u > cdf:
            k += 1
            p *= lam / k
            cdf += p
            if p < 1e-300 and k > lam:  # tail guard against fp underflow
                break
        return k

    b = 0.931 + 2.53 * math.sqrt(lam)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    log_lam = math.log(lam)
    while True:
        u = stream.next_float() - 0.5
        v = stream.next_float()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(inv_alpha) - math.log(a / (us * us) + b)
                <= k * log_lam - lam - math.lgamma(k + 1.0)):
            return int(k)


def acquire(scene, patterns, channel, source, config):
    """Simulate one acquisition run over every pattern, in pattern order."""
    r = patterns.resolution
    if scene.width != r or scene.height != r:
        raise ShapeError(
            f"scene {scene.height}x{scene.width} does not match pattern grid {r}x{r}")

    x = scene.flat()
    mat = as_matrix(patterns)
    n = r * r
    s = signal_scale(channel, source)
    bg = effective_background(channel, source, r)
    # chunked so integer pattern kinds never materialize as a full float copy
    m = patterns.num_patterns
    dots = np.empty(m)
    open_eff = np.empty(m)
    chunk = max(1, (1 << 27) // (8 * n))
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        block = mat[lo:hi].astype(np.float64)
        dots[lo:hi] = block @ x
        open_eff[lo:hi] = np.mean(np.abs(block), axis=1)
    rates = s * dots / n + bg * open_eff
    exposure = config.exposure_per_pattern
    accidentals = bg * open_eff * exposure

    if config.noiseless:
        counts = rates * exposure
    else:
        stream = Stream(config.seed)
        counts = np.empty(patterns.num_patterns, dtype=np.int64)
        for i, rate in enumerate(rates):
            counts[i] = poisson_draw(rate * exposure, stream)

    y = counts - accidentals if config.subtract_accidentals else counts.astype(np.float64)
    return MeasurementVector(counts=counts, accidentals=accidentals, y=y,
                             patterns=patterns, source=source, channel=channel,
                             config=config)


def save_measurements_csv(measurements, path):
    """CSV export: pattern_index,counts,accidentals,y with 9 significant digits."""
    with open(path, "w", newline="\n") as fh:
        fh.write("pattern_index,counts,accidentals,y\n")
        for i in range(measurements.num_patterns):
            c = measurements.counts[i]
            c_str = f"{c:.9g}" if isinstance(c, (float, np.floating)) else str(int(c))
            fh.write(f"{i},{c_str},{measurements.accidentals[i]:.9g},"
                     f"{measurements.y[i]:.9g}\n")
