"""Frame -> 16x16 motion feature -> nested token vectors, and back.

Tokens are the zigzag-ordered coefficients of the orthonormal 2-D DCT-II of
the feature grid, truncated to the requested granularity.  Because every
granularity is a prefix of the full 256-coefficient scan, a coarse token
vector is literally the head of a fine one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._jit import njit
from .media import Frame

GRID = 16
N_COEFFS = GRID * GRID
DEFAULT_LADDER = (16, 64, 144, 256)
DEFAULT_SCALE = 4


@dataclass(frozen=True)
class GranularityLadder:
    levels: tuple[int, ...] = DEFAULT_LADDER

    def __post_init__(self):
        levels = tuple(int(g) for g in self.levels)
        if not levels:
            raise ValueError("ladder must not be empty")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f"ladder must be strictly increasing: {levels}")
        if levels[0] < 1 or levels[-1] > N_COEFFS:
            raise ValueError(f"ladder levels must lie in [1, {N_COEFFS}]: {levels}")
        object.__setattr__(self, "levels", levels)

    def __contains__(self, g):
        return g in self.levels

    def __iter__(self):
        return iter(self.levels)

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, i):
        return self.levels[i]

    def index(self, g) -> int:
        return self.levels.index(g)


def as_ladder(ladder) -> GranularityLadder:
    if ladder is None:
        return GranularityLadder()
    if isinstance(ladder, GranularityLadder):
        return ladder
    return GranularityLadder(tuple(ladder))


@dataclass(frozen=True, eq=False)
class MotionFeature:
    grid: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.shape != (GRID, GRID):
            raise ValueError(f"motion feature must be {GRID}x{GRID}, got {grid.shape}")
        if not np.all(np.isfinite(grid)):
            raise ValueError("motion feature contains non-finite values")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True, eq=False)
class TokenVector:
    g: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.float64).ravel()
        if len(coeffs) != self.g:
            raise ValueError(f"token vector of granularity {self.g} has {len(coeffs)} coefficients")
        if not 1 <= self.g <= N_COEFFS:
            raise ValueError(f"granularity {self.g} outside [1, {N_COEFFS}]")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("token vector contains non-finite values")
        object.__setattr__(self, "coeffs", coeffs)

    def __eq__(self, other):
        if not isinstance(other, TokenVector):
            return NotImplemented
        return self.g == other.g and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def truncate(self, g: int) -> "TokenVector":
        if g > self.g:
            raise ValueError(f"cannot truncate granularity {self.g} up to {g}")
        return TokenVector(g, self.coeffs[:g])


@lru_cache(maxsize=None)
def dct_matrix(n: int = GRID) -> np.ndarray:
    """Orthonormal DCT-II basis, rows are frequencies."""
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * x + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    m[0] /= np.sqrt(2.0)
    m.flags.writeable = False
    return m


@lru_cache(maxsize=None)
def zigzag_order(n: int = GRID) -> np.ndarray:
    """Flat (row-major) indices of an n x n block in JPEG zigzag order.

    Anti-diagonals are walked from DC outward; odd diagonals run top-right to
    bottom-left, even ones bottom-left to top-right, as in the 8x8 JPEG scan.
    """
    order = []
    for s in range(2 * n - 1):
        rows = range(max(0, s - n + 1), min(s, n - 1) + 1)
        if s % 2 == 0:
            rows = reversed(rows)
        order.extend(r * n + (s - r) for r in rows)
    out = np.array(order, dtype=np.intp)
    out.flags.writeable = False
    return out


def _block_mean(x: np.ndarray, by: int, bx: int) -> np.ndarray:
    h, w = x.shape
    return x.reshape(h // by, by, w // bx, bx).mean(axis=(1, 3))


@njit(cache=True)
def _block_mean_u8(src, s, out):
    n = s * s
    half = n // 2
    for by in range(out.shape[0]):
        for bx in range(out.shape[1]):
            acc = 0
            for y in range(by * s, by * s + s):
                for x in range(bx * s, bx * s + s):
                    acc += src[y, x]
            out[by, bx] = (acc + half) // n


def downsample(frame: Frame, s: int) -> Frame:
    """Average s x s blocks, rounding half up to the nearest integer."""
    s = int(s)
    if s < 1:
        raise ValueError(f"scale factor must be >= 1, got {s}")
    if frame.width % s or frame.height % s:
        raise ValueError(f"{frame.width}x{frame.height} frame is not divisible by scale {s}")
    if s == 1:
        return frame
    out = np.empty((frame.height // s, frame.width // s), dtype=np.uint8)
    _block_mean_u8(frame.luma, s, out)
    return Frame(out)


def feature_scale(width: int, height: int, preferred: int = DEFAULT_SCALE) -> int:
    """Largest scale <= ``preferred`` (from 4, 2, 1) that keeps a 16-divisible raster."""
    for s in (4, 2, 1):
        if s <= preferred and width % (GRID * s) == 0 and height % (GRID * s) == 0:
            return s
    raise ValueError(f"{width}x{height} is not divisible by {GRID}")


def extract_motion_feature(frame: Frame) -> MotionFeature:
    if frame.width % GRID or frame.height % GRID:
        raise ValueError(f"{frame.width}x{frame.height} frame is not divisible by {GRID}")
    grid = _block_mean(frame.luma.astype(np.float64), frame.height // GRID,
                       frame.width // GRID) / 255.0
    return MotionFeature(grid)


def frame_feature(frame: Frame, s: int | None = None) -> MotionFeature:
    """Full feature path: downsample by ``s`` then pool to 16x16."""
    if s is None:
        s = feature_scale(frame.width, frame.height)
    return extract_motion_feature(downsample(frame, s))


def _check_g(g, ladder):
    levels = as_ladder(ladder)
    if g not in levels:
        raise ValueError(f"granularity {g} is not on the ladder {levels.levels}")


def feature_coeffs(feature: MotionFeature) -> np.ndarray:
    """All 256 DCT coefficients of a feature, in zigzag order."""
    c = dct_matrix()
    return (c @ feature.grid @ c.T).ravel()[zigzag_order()]


def tokenize(feature: MotionFeature, g: int, ladder=None) -> TokenVector:
    _check_g(g, ladder)
    return TokenVector(g, feature_coeffs(feature)[:g])


def detokenize(tokens: TokenVector) -> MotionFeature:
    full = np.zeros(N_COEFFS)
    full[zigzag_order()[:tokens.g]] = tokens.coeffs
    c = dct_matrix()
    return MotionFeature(c.T @ full.reshape(GRID, GRID) @ c)
