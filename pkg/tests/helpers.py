"""Shared fixtures: deterministic planted sparse instances."""

import numpy as np

from aquaghost import recovery
from aquaghost.rng import Stream, derive_seed


def planted_instance(n, k, m, seed, tag=99, coef_lo=0.5, coef_hi=1.5):
    """Gaussian dictionary with a planted k-sparse solution, noiseless y."""
    st = Stream(derive_seed(seed, tag))
    d = st.gaussian_block(m * n).reshape(m, n) / np.sqrt(m)
    support = sorted(int(j) for j in np.argsort(st.float_block(n), kind="stable")[:k])
    s = np.zeros(n)
    mags = coef_lo + (coef_hi - coef_lo) * st.float_block(k)
    signs = np.where(st.float_block(k) < 0.5, -1.0, 1.0)
    s[support] = mags * signs
    return d @ s, d, support, s


def identity_dictionary(d):
    """Wrap a raw matrix as a transform-free Dictionary."""
    n = d.shape[1]
    r = int(round(np.sqrt(n)))
    return recovery.Dictionary(matrix=d, column_norms=np.linalg.norm(d, axis=0),
                               transform="identity", resolution=r)
