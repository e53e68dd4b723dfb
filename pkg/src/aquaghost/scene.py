"""Ground-truth target scenes and PGM image I/O.

Scenes hold reflectance in [0, 1] on a row-major grid; they are the unknown
image of the inverse problem.  PGM (P2/P5) is the only image format: it is
bit-exact, diffable and trivial to golden-test.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSparsity, IoError, ParseError, TruncatedFile
from .rng import TAG_SCENE, Stream, derive_seed


@dataclass(frozen=True)
class SceneImage:
    width: int
    height: int
    pixels: np.ndarray = field(repr=False)  # shape (height, width), float64

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if self.width < 1 or self.height < 1:
            raise ValueError("scene dimensions must be >= 1")
        if px.shape != (self.height, self.width):
            raise ValueError(
                f"pixel grid {px.shape} does not match {self.height}x{self.width}")
        if not np.all((px >= 0.0) & (px <= 1.0)):
            raise ValueError("pixel values must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    def flat(self):
        """Row-major pixel vector of length width*height."""
        return self.pixels.reshape(-1)


def _tokens(data):
    """Header tokens of a PGM byte string, honoring '#' comments."""
    pos = 0
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            start = pos
            while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            yield data[start:pos], pos
    return


def load_pgm(path):
    """Read a P2 (ASCII) or P5 (binary) PGM file, scaling samples to [0, 1]."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(str(exc)) from exc

    tok = _tokens(data)
    try:
        magic, _ = next(tok)
    except StopIteration:
        raise ParseError(f"{path}: empty file")
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"{path}: bad magic {magic!r}")

    header = []
    end = 0
    try:
        for _ in range(3):
            t, end = next(tok)
            header.append(t)
    except StopIteration:
        raise ParseError(f"{path}: incomplete header")
    try:
        width, height, maxval = (int(t) for t in header)
    except ValueError:
        raise ParseError(f"{path}: non-numeric header field")
    if width < 1 or height < 1 or not (0 < maxval <= 65535):
        raise ParseError(f"{path}: bad dimensions or maxval")

    count = width * height
    if magic == b"P2":
        vals = []
        for t, end in tok:
            try:
                vals.append(int(t))
            except ValueError:
                raise ParseError(f"{path}: non-numeric sample {t!r}")
        if len(vals) < count:
            raise TruncatedFile(f"{path}: expected {count} samples, got {len(vals)}")
        samples = np.array(vals[:count], dtype=np.float64)
    else:
        # exactly one whitespace byte separates maxval from the raster
        body = data[end + 1:]
        if maxval > 255:
            need = 2 * count
            if len(body) < need:
                raise TruncatedFile(f"{path}: expected {need} raster bytes")
            samples = np.frombuffer(body[:need], dtype=">u2").astype(np.float64)
        else:
            if len(body) < count:
                raise TruncatedFile(f"{path}: expected {count} raster bytes")
            samples = np.frombuffer(body[:count], dtype=np.uint8).astype(np.float64)

    if np.any(samples > maxval):
        raise ParseError(f"{path}: sample exceeds maxval {maxval}")
    grid = (samples / maxval).reshape(height, width)
    return SceneImage(width=width, height=height, pixels=grid)


def save_pgm(image, path, maxval=255):
    """Write a binary P5 PGM; round-trip error is at most 1/(2*maxval)."""
    if maxval not in (255, 65535):
        raise ValueError("maxval must be 255 or 65535")
    # round half up so 0.5 * 255 -> 128
    q = np.floor(image.pixels * maxval + 0.5).astype(np.uint32)
    q = np.minimum(q, maxval)
    header = f"P5\n{image.width} {image.height}\n{maxval}\n".encode("ascii")
    raster = q.astype(">u2").tobytes() if maxval > 255 else q.astype(np.uint8).tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(raster)
    except OSError as exc:
        raise IoError(str(exc)) from exc


def resample_nearest(image, r):
    """Nearest-neighbor resample to an r x r grid."""
    if r < 1:
        raise ValueError("target resolution must be >= 1")
    rows = (np.arange(r) * image.height) // r
    cols = (np.arange(r) * image.width) // r
    grid = image.pixels[np.ix_(rows, cols)]
    return SceneImage(width=r, height=r, pixels=grid)


def _disk(r):
    c = r / 2.0
    radius = r / 4.0
    ii, jj = np.meshgrid(np.arange(r) + 0.5, np.arange(r) + 0.5, indexing="ij")
    return ((ii - c) ** 2 + (jj - c) ** 2 <= radius ** 2).astype(np.float64)


def _card(r):
    """Card-like silhouette: rounded rectangle with a circular punch-out."""
    grid = np.zeros((r, r))
    ii, jj = np.meshgrid(np.arange(r) + 0.5, np.arange(r) + 0.5, indexing="ij")
    c = r / 2.0
    half_h, half_w = 0.38 * r, 0.24 * r
    corner = 0.08 * r
    dy = np.maximum(np.abs(ii - c) - (half_h - corner), 0.0)
    dx = np.maximum(np.abs(jj - c) - (half_w - corner), 0.0)
    body = np.sqrt(dx ** 2 + dy ** 2) <= corner
    hole = (ii - (c - 0.16 * r)) ** 2 + (jj - c) ** 2 <= (0.09 * r) ** 2
    grid[body & ~hole] = 1.0
    return grid


def make_synthetic(kind, resolution, sparsity=1, seed=0):
    """Deterministic test scenes: 'sparse_dct', 'card' or 'disk'.

    sparse_dct scenes have exactly `sparsity` nonzero 2D-DCT coefficients
    (verified after [0,1] normalization; regenerated from a derived seed if
    normalization ever breaks the count).
    """
    r = int(resolution)
    if r < 2:
        raise ValueError("resolution must be >= 2")
    if kind == "disk":
        return SceneImage(width=r, height=r, pixels=_disk(r))
    if kind == "card":
        return SceneImage(width=r, height=r, pixels=_card(r))
    if kind != "sparse_dct":
        raise ValueError(f"unknown synthetic kind {kind!r}")

    k = int(sparsity)
    n = r * r
    if not 1 <= k <= n:
        raise InvalidSparsity(f"sparsity {k} outside [1, {n}]")

    from .recovery import dct2_forward, dct2_inverse  # local: avoids cycle

    for attempt in range(100):
        stream = Stream(derive_seed(seed, TAG_SCENE, attempt))
        coeffs = np.zeros(n)
        # DC always in the support so the affine [0,1] normalization below
        # (which shifts only the DC term) cannot create a new nonzero
        support = [0]
        if k > 1:
            perm_keys = stream.float_block(n - 1)
            support += list(1 + np.argsort(perm_keys, kind="stable")[: k - 1])
        mags = 0.5 + stream.float_block(k)
        signs = np.where(stream.float_block(k) < 0.5, -1.0, 1.0)
        coeffs[support] = mags * signs
        coeffs[0] = abs(coeffs[0])

        grid = dct2_inverse(coeffs.reshape(r, r))
        lo, hi = grid.min(), grid.max()
        if hi - lo < 1e-12:
            grid = np.full((r, r), 0.5)
        else:
            grid = (grid - lo) / (hi - lo)
        back = dct2_forward(grid)
        nnz = int(np.sum(np.abs(back) > 1e-9 * max(np.abs(back).max(), 1.0)))
        if nnz == k:
            return SceneImage(width=r, height=r, pixels=grid)
    raise InvalidSparsity(
        f"could not realize exact {k}-sparsity in 100 attempts (R={r}, seed={seed})")
