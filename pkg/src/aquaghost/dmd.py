"""DMD modulation patterns: the rows of the measurement matrix.

Patterns are generated row-major, one stream draw per entry, from a
SplitMix64 counter stream, so any (kind, M, R, seed) tuple regenerates
bit-identical entries on every platform.  Gaussian entries are Box-Muller
normals rounded to 6 decimals (then scaled by 1/sqrt(M)) so the artifact does
not depend on platform transcendental functions.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, TooLarge, WrongPatternKind
from .rng import Stream

KINDS = ("bernoulli01", "bernoulli_pm1", "gaussian")
_MAGIC = b"AGPM"
_MAX_BYTES = 4 << 30  # entries storage guard


@dataclass(frozen=True)
class PatternSet:
    kind: str
    num_patterns: int
    resolution: int
    seed: int | None
    entries: np.ndarray = field(repr=False)  # (M, N) row-major

    @property
    def n_pixels(self):
        return self.resolution * self.resolution


def generate_patterns(kind, num_patterns, resolution, seed):
    if kind not in KINDS:
        raise ValueError(f"unknown pattern kind {kind!r}")
    m, r = int(num_patterns), int(resolution)
    if m < 1 or r < 2:
        raise ValueError("need num_patterns >= 1 and resolution >= 2")
    n = r * r
    per_entry = 8 if kind == "gaussian" else 1
    if m * n * per_entry > _MAX_BYTES:
        raise TooLarge(f"pattern set {m}x{n} exceeds the {_MAX_BYTES >> 30} GiB guard")

    stream = Stream(seed)
    total = m * n
    chunk = 1 << 23  # bound uint64 temporaries to ~64 MiB
    if kind == "gaussian":
        entries = np.empty(total)
        scale = np.sqrt(m)
        for lo in range(0, total, chunk):
            hi = min(lo + chunk, total)
            entries[lo:hi] = stream.gaussian_block(hi - lo) / scale
    else:
        entries = np.empty(total, dtype=np.uint8 if kind == "bernoulli01" else np.int8)
        for lo in range(0, total, chunk):
            hi = min(lo + chunk, total)
            bits = (stream.u64_block(hi - lo) >> np.uint64(63)).astype(np.uint8)
            entries[lo:hi] = bits if kind == "bernoulli01" else bits.astype(np.int8) * 2 - 1
    return PatternSet(kind=kind, num_patterns=m, resolution=r, seed=int(seed),
                      entries=entries.reshape(m, n))


def open_fraction(patterns, index):
    """Fraction of open micromirrors in one binary pattern."""
    if patterns.kind != "bernoulli01":
        raise WrongPatternKind(
            f"open_fraction needs physical 0/1 patterns, got {patterns.kind!r}")
    row = patterns.entries[index]
    return float(np.count_nonzero(row)) / row.size


def open_fraction_effective(patterns, index):
    """Background coupling factor of a pattern row.

    Binary patterns couple background through their open fraction; for the
    simulation-only +-1 / gaussian kinds the mean absolute entry stands in.
    """
    row = patterns.entries[index]
    if patterns.kind == "bernoulli01":
        return float(np.count_nonzero(row)) / row.size
    return float(np.mean(np.abs(row.astype(np.float64))))


def as_matrix(patterns):
    """The M x N measurement matrix; row i is pattern i flattened row-major."""
    return patterns.entries


_KIND_BYTE = {"bernoulli01": 0, "bernoulli_pm1": 1, "gaussian": 2}
_BYTE_KIND = {v: k for k, v in _KIND_BYTE.items()}


def dump_patterns(patterns, path):
    """Flat binary dump: 'AGPM', kind byte, M and R as u32le, then entries.

    Binary kinds store one byte per entry (pm1 maps -1 -> 0); gaussian stores
    little-endian f32.
    """
    header = _MAGIC + struct.pack("<BII", _KIND_BYTE[patterns.kind],
                                  patterns.num_patterns, patterns.resolution)
    if patterns.kind == "gaussian":
        body = patterns.entries.astype("<f4").tobytes()
    elif patterns.kind == "bernoulli_pm1":
        body = ((patterns.entries > 0).astype(np.uint8)).tobytes()
    else:
        body = patterns.entries.astype(np.uint8).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def load_patterns(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ParseError(f"{path}: bad magic {blob[:4]!r}")
    kind_byte, m, r = struct.unpack("<BII", blob[4:13])
    if kind_byte not in _BYTE_KIND:
        raise ParseError(f"{path}: unknown kind byte {kind_byte}")
    kind = _BYTE_KIND[kind_byte]
    n = r * r
    body = blob[13:]
    if kind == "gaussian":
        if len(body) < 4 * m * n:
            raise ParseError(f"{path}: truncated gaussian entries")
        entries = np.frombuffer(body[:4 * m * n], dtype="<f4").astype(np.float64)
    else:
        if len(body) < m * n:
            raise ParseError(f"{path}: truncated binary entries")
        raw = np.frombuffer(body[:m * n], dtype=np.uint8)
        entries = raw if kind == "bernoulli01" else raw.astype(np.int8) * 2 - 1
    return PatternSet(kind=kind, num_patterns=m, resolution=r, seed=None,
                      entries=entries.reshape(m, n))
