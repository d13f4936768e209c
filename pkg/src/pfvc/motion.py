"""Decoder-side frame synthesis from decoded tokens.

Chain: detokenize key and inter tokens, upsample both features to the
working raster, take their difference, turn that difference into a dense
motion field and an occlusion map, back-warp the key frame and mask it.

The learned motion and refinement networks are replaced by fixed operators:
a regularized normal-flow estimate for the motion field, an exponential of
the feature difference for occlusion, and normalized-convolution inpainting
of the attenuated pixels for refinement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._jit import njit
from .media import Frame
from .tokenizer import (GRID, MotionFeature, TokenVector, detokenize, downsample,
                        feature_scale)

FLOW_EPS = 1e-3
OCCLUSION_SIGMA = 0.1


@dataclass(frozen=True, eq=False)
class DenseMotionField:
    """Per-pixel displacement in pixels of the raster it was estimated on."""

    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        dx = np.asarray(self.dx, dtype=np.float64)
        dy = np.asarray(self.dy, dtype=np.float64)
        if dx.shape != dy.shape or dx.ndim != 2:
            raise ValueError(f"dx {dx.shape} and dy {dy.shape} must be equal 2-D shapes")
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dy))):
            raise ValueError("motion field contains non-finite values")
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dy", dy)

    @property
    def width(self):
        return self.dx.shape[1]

    @property
    def height(self):
        return self.dx.shape[0]

    @classmethod
    def zeros(cls, width, height):
        return cls(np.zeros((height, width)), np.zeros((height, width)))


@dataclass(frozen=True, eq=False)
class OcclusionMap:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or np.any(w < 0) or np.any(w > 1):
            raise ValueError("occlusion weights must be a 2-D array in [0, 1]")
        object.__setattr__(self, "weights", w)

    @property
    def width(self):
        return self.weights.shape[1]

    @property
    def height(self):
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class FeatureDiff:
    grid: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.ndim != 2 or not np.all(np.isfinite(grid)):
            raise ValueError("feature difference must be a finite 2-D array")
        object.__setattr__(self, "grid", grid)

    @property
    def width(self):
        return self.grid.shape[1]

    @property
    def height(self):
        return self.grid.shape[0]


def _axis_taps(n_in, n_out):
    """Left tap, right tap and fraction for center-aligned resampling."""
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, pos - lo


def _lerp(a, b, t):
    # a + t*(b - a) is exact when a == b; the clip keeps rounding inside [a, b]
    return np.clip(a + t * (b - a), np.minimum(a, b), np.maximum(a, b))


def resize_bilinear(x: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resampling with edge clamping, exact on constant input."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape == (height, width):
        return x.copy()
    lo, hi, t = _axis_taps(x.shape[1], width)
    rows = _lerp(x[:, lo], x[:, hi], t[None, :])
    lo, hi, t = _axis_taps(x.shape[0], height)
    return _lerp(rows[lo, :], rows[hi, :], t[:, None])


def upsample_feature(feature: MotionFeature, target_w: int, target_h: int) -> np.ndarray:
    if target_w < GRID or target_h < GRID:
        raise ValueError(f"target size {target_w}x{target_h} is below {GRID}x{GRID}")
    return resize_bilinear(feature.grid, target_w, target_h)


def feature_diff(f_inter: MotionFeature, f_key: MotionFeature,
                 target_w: int, target_h: int) -> FeatureDiff:
    return FeatureDiff(upsample_feature(f_inter, target_w, target_h)
                       - upsample_feature(f_key, target_w, target_h))


def _luma_gradients(key_small: Frame):
    k = key_small.luma.astype(np.float64) / 255.0
    gy, gx = np.gradient(k)
    return gx, gy


def _check_dims(frame_like, other):
    if (frame_like.width, frame_like.height) != (other.width, other.height):
        raise ValueError(f"size mismatch: {frame_like.width}x{frame_like.height} "
                         f"vs {other.width}x{other.height}")


def _normal_flow(gx, gy, diff):
    scale = -diff / (gx * gx + gy * gy + FLOW_EPS)
    dx = ndimage.uniform_filter(scale * gx, size=3, mode="nearest")
    dy = ndimage.uniform_filter(scale * gy, size=3, mode="nearest")
    return DenseMotionField(dx, dy)


def predict_motion(key_small: Frame, diff: FeatureDiff) -> DenseMotionField:
    """Motion of content from key to inter frame, in working-raster pixels.

    Brightness constancy linearized around the key frame gives
    ``d = -diff * grad K / (|grad K|^2 + eps)`` along the gradient, smoothed
    once with a 3x3 box.  The field points where content moved to, so
    back-warping the key frame samples at ``x - d``.
    """
    _check_dims(key_small, diff)
    gx, gy = _luma_gradients(key_small)
    return _normal_flow(gx, gy, diff.grid)


def predict_occlusion(key_small: Frame, diff: FeatureDiff) -> OcclusionMap:
    _check_dims(key_small, diff)
    return OcclusionMap(np.exp(-np.abs(diff.grid) / OCCLUSION_SIGMA))


@njit(cache=True)
def _warp_kernel(src, dx, dy, out):
    h, w = src.shape
    for y in range(h):
        for x in range(w):
            sx = x + dx[y, x]
            sy = y + dy[y, x]
            if sx < 0.0:
                sx = 0.0
            elif sx > w - 1:
                sx = w - 1.0
            if sy < 0.0:
                sy = 0.0
            elif sy > h - 1:
                sy = h - 1.0
            x0 = int(np.floor(sx))
            y0 = int(np.floor(sy))
            x1 = min(x0 + 1, w - 1)
            y1 = min(y0 + 1, h - 1)
            tx = sx - x0
            ty = sy - y0
            a = src[y0, x0] + tx * (src[y0, x1] - src[y0, x0])
            b = src[y1, x0] + tx * (src[y1, x1] - src[y1, x0])
            out[y, x] = a + ty * (b - a)


def warp_array(src: np.ndarray, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """``out(x) = src(x + d(x))`` by bilinear sampling with edge clamping."""
    src = np.ascontiguousarray(src, dtype=np.float64)
    out = np.empty_like(src)
    _warp_kernel(src, np.ascontiguousarray(dx, dtype=np.float64),
                 np.ascontiguousarray(dy, dtype=np.float64), out)
    lo, hi = src.min(), src.max()
    return np.clip(out, lo, hi, out=out)


def to_uint8(x: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def warp(frame: Frame, field: DenseMotionField) -> Frame:
    _check_dims(frame, field)
    return Frame(to_uint8(warp_array(frame.luma, field.dx, field.dy)))


INPAINT_WINDOW = 5


def _box_sum(x: np.ndarray, size: int) -> np.ndarray:
    return ndimage.uniform_filter(x, size=size, mode="nearest") * (size * size)


def inpaint(masked: np.ndarray, weights: np.ndarray, window: int = INPAINT_WINDOW) -> np.ndarray:
    """Refinement stand-in: fill attenuated pixels by normalized convolution.

    ``out = masked + (1 - w) * box(masked) / box(w)``.  Where ``w == 1`` the
    masked frame passes through unchanged; elsewhere the lost fraction of a
    pixel is re-estimated from its confidence-weighted neighbourhood.
    """
    fill = _box_sum(masked, window) / np.maximum(_box_sum(weights, window), 1e-12)
    return masked + (1.0 - weights) * fill


@njit(cache=True)
def _upsample_rows(src, xlo, xhi, xt, out):
    for y in range(src.shape[0]):
        for x in range(xlo.shape[0]):
            a = src[y, xlo[x]]
            out[y, x] = a + xt[x] * (src[y, xhi[x]] - a)


@njit(cache=True)
def _synthesize(key, kmin, kmax, rdx, rdy, rw, ylo, yhi, yt, scale, masked, weights):
    """Finish the vertical upsampling of field and occlusion, back-warp ``key``, mask it.

    ``rdx``, ``rdy`` and ``rw`` are already resampled along x.  Each row runs
    in two passes, sample positions first and the gather second, which lets
    the first pass vectorize.
    """
    h, w = key.shape
    sxr = np.empty(w)
    syr = np.empty(w)
    for y in range(h):
        y0 = ylo[y]
        y1 = yhi[y]
        ty = yt[y]
        for x in range(w):
            a = rdx[y0, x]
            fx = a + ty * (rdx[y1, x] - a)
            a = rdy[y0, x]
            fy = a + ty * (rdy[y1, x] - a)
            a = rw[y0, x]
            weights[y, x] = a + ty * (rw[y1, x] - a)
            sxr[x] = min(max(x - scale * fx, 0.0), w - 1.0)
            syr[x] = min(max(y - scale * fy, 0.0), h - 1.0)
        for x in range(w):
            sx = sxr[x]
            sy = syr[x]
            ix = int(sx)
            iy = int(sy)
            jx = min(ix + 1, w - 1)
            jy = min(iy + 1, h - 1)
            ax = sx - ix
            ay = sy - iy
            k0 = key[iy, ix]
            k1 = key[jy, ix]
            a = k0 + ax * (key[iy, jx] - k0)
            b = k1 + ax * (key[jy, jx] - k1)
            masked[y, x] = weights[y, x] * min(max(a + ay * (b - a), kmin), kmax)


@njit(cache=True)
def _box_sum_nearest(src, r, tmp, out):
    """Separable (2r+1)^2 window sums with edge replication, sliding window."""
    h, w = src.shape
    for y in range(h):
        acc = 0.0
        for k in range(-r, r + 1):
            acc += src[y, min(max(k, 0), w - 1)]
        tmp[y, 0] = acc
        for x in range(1, w):
            acc += src[y, min(x + r, w - 1)] - src[y, max(x - r - 1, 0)]
            tmp[y, x] = acc
    for x in range(w):
        acc = 0.0
        for k in range(-r, r + 1):
            acc += tmp[min(max(k, 0), h - 1), x]
        out[0, x] = acc
    for y in range(1, h):
        ya = min(y + r, h - 1)
        yb = max(y - r - 1, 0)
        for x in range(w):
            out[y, x] = out[y - 1, x] + tmp[ya, x] - tmp[yb, x]


@njit(cache=True)
def _inpaint_round(masked, weights, r, tmp, num, den, out):
    # scratch buffers come from the caller: fresh large arrays per frame cost page faults
    h, w = masked.shape
    _box_sum_nearest(masked, r, tmp, num)
    _box_sum_nearest(weights, r, tmp, den)
    for y in range(h):
        for x in range(w):
            v = masked[y, x] + (1.0 - weights[y, x]) * (num[y, x] / max(den[y, x], 1e-12))
            out[y, x] = np.uint8(min(max(np.floor(v + 0.5), 0.0), 255.0))


@njit(cache=True)
def _working_fields(f_inter, key_up, gx, gy, xlo, xhi, xt, ylo, yhi, yt, diff, dx, dy, occ):
    """Fused working-raster chain: upsample, diff, normal flow, 3x3 box, occlusion."""
    h, w = key_up.shape
    sx = np.empty((h, w))
    sy = np.empty((h, w))
    for y in range(h):
        r0 = ylo[y]
        r1 = yhi[y]
        ty = yt[y]
        for x in range(w):
            c0 = xlo[x]
            c1 = xhi[x]
            tx = xt[x]
            # same clipped lerps as resize_bilinear, columns first
            a0 = f_inter[r0, c0]
            b0 = f_inter[r0, c1]
            u = min(max(a0 + tx * (b0 - a0), min(a0, b0)), max(a0, b0))
            a1 = f_inter[r1, c0]
            b1 = f_inter[r1, c1]
            v = min(max(a1 + tx * (b1 - a1), min(a1, b1)), max(a1, b1))
            f = min(max(u + ty * (v - u), min(u, v)), max(u, v))
            d = f - key_up[y, x]
            diff[y, x] = d
            occ[y, x] = np.exp(-abs(d) / OCCLUSION_SIGMA)
            gxv = gx[y, x]
            gyv = gy[y, x]
            k = -d / (gxv * gxv + gyv * gyv + FLOW_EPS)
            sx[y, x] = k * gxv
            sy[y, x] = k * gyv
    for y in range(h):
        ya = max(y - 1, 0)
        yb = min(y + 1, h - 1)
        for x in range(w):
            xa = max(x - 1, 0)
            xb = min(x + 1, w - 1)
            accx = 0.0
            accy = 0.0
            for yy in (ya, y, yb):
                accx += sx[yy, xa] + sx[yy, x] + sx[yy, xb]
                accy += sy[yy, xa] + sy[yy, x] + sy[yy, xb]
            dx[y, x] = accx / 9.0
            dy[y, x] = accy / 9.0


class Reconstructor:
    """Key-frame-side state shared by every inter frame of a stream.

    ``key_tokens`` must carry all 256 coefficients; each inter frame is
    compared against the key tokens truncated to its own granularity.
    """

    def __init__(self, key: Frame, key_tokens: TokenVector, scale: int | None = None):
        if key_tokens.g != 256:
            raise ValueError(f"key tokens must be complete (g=256), got g={key_tokens.g}")
        self.key = key
        self.key_tokens = key_tokens
        self.scale = feature_scale(key.width, key.height) if scale is None else scale
        self.key_small = downsample(key, self.scale)
        self.work_w, self.work_h = self.key_small.width, self.key_small.height
        self._key_luma = key.luma.astype(np.float64)
        self._key_range = float(self._key_luma.min()), float(self._key_luma.max())
        self._gx, self._gy = _luma_gradients(self.key_small)
        self._xtaps = _axis_taps(self.work_w, key.width)
        self._ytaps = _axis_taps(self.work_h, key.height)
        self._grid_taps = _axis_taps(GRID, self.work_w) + _axis_taps(GRID, self.work_h)
        self._key_up = {}
        shape = self._key_luma.shape
        self._rows = [np.empty((self.work_h, key.width)) for _ in range(3)]
        self._buf = [np.empty(shape) for _ in range(5)]

    def _key_feature_up(self, g):
        if g not in self._key_up:
            f = detokenize(self.key_tokens.truncate(g))
            self._key_up[g] = upsample_feature(f, self.work_w, self.work_h)
        return self._key_up[g]

    def synthesis_inputs(self, inter_tokens: TokenVector):
        """Working-raster diff, motion field and occlusion map for one frame."""
        f_inter = detokenize(inter_tokens)
        shape = (self.work_h, self.work_w)
        diff, dx, dy, occ = (np.empty(shape) for _ in range(4))
        _working_fields(f_inter.grid, self._key_feature_up(inter_tokens.g), self._gx, self._gy,
                        *self._grid_taps, diff, dx, dy, occ)
        return FeatureDiff(diff), DenseMotionField(dx, dy), OcclusionMap(occ)

    def _masked_into(self, inter_tokens, masked, weights):
        _, motion, occlusion = self.synthesis_inputs(inter_tokens)
        xlo, xhi, xt = self._xtaps
        for src, dst in zip((motion.dx, motion.dy, occlusion.weights), self._rows):
            _upsample_rows(src, xlo, xhi, xt, dst)
        _synthesize(self._key_luma, *self._key_range, *self._rows, *self._ytaps,
                    float(self.scale), masked, weights)

    def masked(self, inter_tokens: TokenVector):
        """Full-resolution ``(occlusion * warped key, occlusion)`` before refinement."""
        shape = self._key_luma.shape
        masked, weights = np.empty(shape), np.empty(shape)
        self._masked_into(inter_tokens, masked, weights)
        return masked, weights

    def reconstruct(self, inter_tokens: TokenVector) -> Frame:
        masked, weights, tmp, num, den = self._buf
        self._masked_into(inter_tokens, masked, weights)
        out = np.empty(masked.shape, dtype=np.uint8)
        _inpaint_round(masked, weights, INPAINT_WINDOW // 2, tmp, num, den, out)
        return Frame(out)


def reconstruct_frame(key: Frame, key_tokens: TokenVector, inter_tokens: TokenVector) -> Frame:
    """Synthesize an inter frame from the key frame and both token vectors."""
    if key_tokens.g < inter_tokens.g:
        raise ValueError(f"key tokens (g={key_tokens.g}) are coarser than inter tokens "
                         f"(g={inter_tokens.g})")
    if key_tokens.g != 256:
        # Reconstructor wants the full key vector; a shorter one is zero-padded
        padded = np.zeros(256)
        padded[:key_tokens.g] = key_tokens.coeffs
        key_tokens = TokenVector(256, padded)
    return Reconstructor(key, key_tokens).reconstruct(inter_tokens)


def reconstruct_reference(key: Frame, key_tokens: TokenVector,
                          inter_tokens: TokenVector) -> np.ndarray:
    """Unfused float version of the synthesis chain built from the public steps."""
    s = feature_scale(key.width, key.height)
    key_small = downsample(key, s)
    ww, wh = key_small.width, key_small.height
    diff = feature_diff(detokenize(inter_tokens),
                        detokenize(key_tokens.truncate(inter_tokens.g)), ww, wh)
    motion = predict_motion(key_small, diff)
    occlusion = predict_occlusion(key_small, diff)
    w, h = key.width, key.height
    dx = -s * resize_bilinear(motion.dx, w, h)
    dy = -s * resize_bilinear(motion.dy, w, h)
    weights = resize_bilinear(occlusion.weights, w, h)
    masked = weights * warp_array(key.luma, dx, dy)
    return inpaint(masked, weights)
