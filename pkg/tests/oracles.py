"""Independent reference implementations used only by the tests.

Each oracle is written from the definition, deliberately without reusing
the package's helpers, so a shared bug cannot hide in both places.
"""

import math

import numpy as np


def dct2_direct(x):
    """Orthonormal 2-D DCT-II straight from the cosine sum."""
    n = x.shape[0]
    out = np.zeros((n, n))
    for u in range(n):
        for v in range(n):
            au = math.sqrt(1 / n) if u == 0 else math.sqrt(2 / n)
            av = math.sqrt(1 / n) if v == 0 else math.sqrt(2 / n)
            s = 0.0
            for i in range(n):
                ci = math.cos((2 * i + 1) * u * math.pi / (2 * n))
                for j in range(n):
                    s += x[i, j] * ci * math.cos((2 * j + 1) * v * math.pi / (2 * n))
            out[u, v] = au * av * s
    return out


def zigzag_walk(n):
    """JPEG scan by walking the matrix: up-right on even diagonals, down-left on odd."""
    order = []
    for d in range(2 * n - 1):
        cells = [(i, d - i) for i in range(n) if 0 <= d - i < n]
        if d % 2 == 0:
            cells.reverse()  # start at the bottom-left end, move up-right
        order.extend(r * n + c for r, c in cells)
    return order


def block_mean_loops(img, bh, bw):
    h, w = img.shape
    out = np.zeros((h // bh, w // bw))
    for by in range(h // bh):
        for bx in range(w // bw):
            s = 0
            for y in range(by * bh, (by + 1) * bh):
                for x in range(bx * bw, (bx + 1) * bw):
                    s += int(img[y, x])
            out[by, bx] = s / (bh * bw)
    return out


def downsample_loops(img, s):
    h, w = img.shape
    out = np.zeros((h // s, w // s), dtype=np.uint8)
    for by in range(h // s):
        for bx in range(w // s):
            tot = int(img[by * s:(by + 1) * s, bx * s:(bx + 1) * s].astype(np.int64).sum())
            out[by, bx] = (2 * tot + s * s) // (2 * s * s)  # round half up
    return out


def fold_scalar(v, bound):
    if abs(v) > bound:
        return 2 * bound + 1
    return 2 * v if v > 0 else -2 * v - 1 if v < 0 else 0


def adaptive_cost_bits(values, ctx_ids, n_ctx, bound, max_total=1 << 16):
    """Ideal code length of the adaptive order-0 model, from its count trajectory.

    Counts start at 1, add 1 per coded symbol, and are halved (floor 1)
    once the total exceeds ``max_total``.  Escaped values add 32 raw bits.
    """
    alphabet = 2 * bound + 2
    counts = [[1] * alphabet for _ in range(n_ctx)]
    totals = [alphabet] * n_ctx
    bits = 0.0
    for v, c in zip(values, ctx_ids):
        s = fold_scalar(int(v), bound)
        bits -= math.log2(counts[c][s] / totals[c])
        if s == alphabet - 1:
            bits += 32
        counts[c][s] += 1
        totals[c] += 1
        if totals[c] > max_total:
            counts[c] = [max(1, k // 2) for k in counts[c]]
            totals[c] = sum(counts[c])
    return bits


def hull_brute_force(points):
    """Upper-left RD frontier by exhaustion.

    A point survives when no other point is at least as cheap and at least
    as good (one strictly), and it lies strictly above the chord of every
    pair of points that straddle it in rate.
    """
    pts = sorted({(p[0], p[1]) for p in points})
    keep = []
    for r, q in pts:
        dominated = any((r2 <= r and q2 >= q) and (r2, q2) != (r, q) for r2, q2 in pts)
        if dominated:
            continue
        left = [(a, b) for a, b in pts if a < r]
        right = [(a, b) for a, b in pts if a > r]
        above = True
        for ra, qa in left:
            for rb, qb in right:
                # cross >= 0 means on or below the chord a-b
                if (r - ra) * (qb - qa) - (q - qa) * (rb - ra) >= 0:
                    above = False
                    break
            if not above:
                break
        if above:
            keep.append((r, q))
    return keep


def gaussian_window_2d(n=11, sigma=1.5):
    x = np.arange(n) - n // 2
    g = np.exp(-(x * x) / (2 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def ssim_direct(a, b, n=11, sigma=1.5, peak=255.0):
    """Mean SSIM by evaluating every valid window explicitly."""
    x = a.astype(np.float64)
    y = b.astype(np.float64)
    w = gaussian_window_2d(n, sigma)
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    vals = []
    for i in range(x.shape[0] - n + 1):
        for j in range(x.shape[1] - n + 1):
            px = x[i:i + n, j:j + n]
            py = y[i:i + n, j:j + n]
            mx = (w * px).sum()
            my = (w * py).sum()
            vx = (w * (px - mx) ** 2).sum()
            vy = (w * (py - my) ** 2).sum()
            cxy = (w * (px - mx) * (py - my)).sum()
            vals.append(((2 * mx * my + c1) * (2 * cxy + c2))
                        / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


def splitmix64(seed, n):
    """Reference SplitMix64 stream: state += gamma, then the output mix."""
    m = (1 << 64) - 1
    state = seed & m
    out = []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & m
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & m
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & m
        out.append(z ^ (z >> 31))
    return out
