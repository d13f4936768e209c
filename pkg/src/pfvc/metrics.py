"""PSNR and SSIM on 8-bit luma."""

from __future__ import annotations

import math

import numpy as np

from ._jit import njit
from .media import Frame, Sequence

PEAK = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
K1, K2 = 0.01, 0.03


def _pair(a, b):
    a = a.luma if isinstance(a, Frame) else np.asarray(a)
    b = b.luma if isinstance(b, Frame) else np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a.astype(np.float64), b.astype(np.float64)


def mse(a, b) -> float:
    x, y = _pair(a, b)
    return float(np.mean((x - y) ** 2))


def psnr_from_mse(m: float) -> float:
    return math.inf if m == 0 else 10.0 * math.log10(PEAK * PEAK / m)


def psnr(a, b) -> float:
    """PSNR in dB; identical inputs give ``math.inf``."""
    return psnr_from_mse(mse(a, b))


def _gaussian_window():
    x = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    g = np.exp(-(x * x) / (2 * SSIM_SIGMA ** 2))
    return g / g.sum()


@njit(cache=True)
def _ssim_kernel(x, y, g, c1, c2, out):
    # separable Gaussian over the valid region only; all five moments in one sweep
    h, w = x.shape
    n = g.shape[0]
    wv = w - n + 1
    hv = h - n + 1
    rows = np.empty((5, h, wv))
    for i in range(h):
        for j in range(wv):
            s0 = 0.0
            s1 = 0.0
            s2 = 0.0
            s3 = 0.0
            s4 = 0.0
            for k in range(n):
                a = x[i, j + k]
                b = y[i, j + k]
                gk = g[k]
                s0 += gk * a
                s1 += gk * b
                s2 += gk * (a * a)
                s3 += gk * (b * b)
                s4 += gk * (a * b)
            rows[0, i, j] = s0
            rows[1, i, j] = s1
            rows[2, i, j] = s2
            rows[3, i, j] = s3
            rows[4, i, j] = s4
    for i in range(hv):
        for j in range(wv):
            mx = 0.0
            my = 0.0
            exx = 0.0
            eyy = 0.0
            exy = 0.0
            for k in range(n):
                gk = g[k]
                mx += gk * rows[0, i + k, j]
                my += gk * rows[1, i + k, j]
                exx += gk * rows[2, i + k, j]
                eyy += gk * rows[3, i + k, j]
                exy += gk * rows[4, i + k, j]
            sxx = exx - mx * mx
            syy = eyy - my * my
            sxy = exy - mx * my
            # every term is symmetric in (x, y) and equals its partner when x == y
            out[i, j] = (((2 * mx * my + c1) * (2 * sxy + c2))
                         / ((mx * mx + my * my + c1) * (sxx + syy + c2)))


def ssim_map(a, b) -> np.ndarray:
    x, y = _pair(a, b)
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(f"frame {x.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    out = np.empty((x.shape[0] - SSIM_WINDOW + 1, x.shape[1] - SSIM_WINDOW + 1))
    _ssim_kernel(x, y, _gaussian_window(), (K1 * PEAK) ** 2, (K2 * PEAK) ** 2, out)
    return out


def ssim(a, b) -> float:
    """Mean SSIM, 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, L=255."""
    return float(np.mean(ssim_map(a, b)))


def sequence_quality(ref: Sequence, test: Sequence, skip_first: bool = False):
    """``(psnr_db, mean_ssim)``; PSNR is taken from the MSE pooled over frames."""
    if len(ref) != len(test):
        raise ValueError(f"sequence lengths differ: {len(ref)} vs {len(test)}")
    start = 1 if skip_first and len(ref) > 1 else 0
    pairs = list(zip(ref.frames[start:], test.frames[start:]))
    m = float(np.mean([mse(a, b) for a, b in pairs]))
    s = float(np.mean([ssim(a, b) for a, b in pairs]))
    return psnr_from_mse(m), s
