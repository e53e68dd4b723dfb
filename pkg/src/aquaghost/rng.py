"""Deterministic counter-based random streams.

All randomness in the library flows through SplitMix64.  The n-th output of a
stream seeded with ``s`` is ``mix64(s + (n+1) * GOLDEN)``, which equals the
n-th output of the classic sequential SplitMix64 generator but can be produced
out of order and vectorized with numpy uint64 arithmetic.  Independent streams
are derived from one master seed by folding integer purpose tags through the
same finalizer, so adding or removing a stream never perturbs the others.

Stream tags used across the library:
    TAG_PATTERNS  - DMD pattern entries, per (resolution, seed index)
    TAG_NOISE     - Poisson shot noise, per acquisition
    TAG_SCENE     - synthetic scene generation
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

TAG_PATTERNS = 1
TAG_NOISE = 2
TAG_SCENE = 3

_INV_2_53 = 2.0 ** -53


def mix64(z):
    """SplitMix64 finalizer (Steele/Lea constants)."""
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def derive_seed(master, *tags):
    """Mix integer purpose tags into a master seed, one finalizer pass each."""
    s = master & MASK64
    for t in tags:
        s = mix64(s ^ mix64((int(t) + GOLDEN) & MASK64))
    return s


class Stream:
    """Deterministic stateful stream of uniforms over a SplitMix64 counter."""

    def __init__(self, seed):
        self.seed = int(seed) & MASK64
        self.counter = 0

    def next_u64(self):
        self.counter += 1
        return mix64((self.seed + self.counter * GOLDEN) & MASK64)

    def next_float(self):
        # 53-bit mantissa uniform in [0, 1)
        return (self.next_u64() >> 11) * _INV_2_53

    def u64_block(self, n):
        """Vectorized: the next n raw u64 outputs."""
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        z = (np.uint64(self.seed) + idx * np.uint64(GOLDEN))
        z ^= z >> np.uint64(30)
        z *= np.uint64(0xBF58476D1CE4E5B9)
        z ^= z >> np.uint64(27)
        z *= np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
        return z

    def float_block(self, n):
        return (self.u64_block(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def gaussian_block(self, n):
        """n standard normals via Box-Muller, rounded to 6 decimals.

        Entry k consumes the uniform pair at stream positions (2k, 2k+1);
        rounding pins the values against platform libm differences.
        """
        raw = self.u64_block(2 * n)
        # u1 in (0, 1] so the log is finite
        u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
        return np.round(z, 6)
