"""Bandwidth-driven granularity selection and RD convex hulls."""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence as Seq

import numpy as np

from .tokenizer import as_ladder

EWMA_ALPHA = 0.2


@dataclass(frozen=True)
class BandwidthTrace:
    """Piecewise-constant budget: ``budget_kbps`` holds from ``time_s`` on."""

    samples: tuple[tuple[float, float], ...]

    def __post_init__(self):
        samples = tuple((float(t), float(b)) for t, b in self.samples)
        if not samples:
            raise ValueError("bandwidth trace is empty")
        times = [t for t, _ in samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("trace times must be strictly increasing")
        if any(b <= 0 for _, b in samples):
            raise ValueError("trace budgets must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "_times", times)

    def budget_at(self, time_s: float) -> float:
        """Budget in kbps; times before the first sample use the first budget."""
        i = bisect.bisect_right(self._times, time_s) - 1
        return self.samples[max(i, 0)][1]

    @classmethod
    def constant(cls, kbps: float) -> "BandwidthTrace":
        return cls(((0.0, kbps),))

    @classmethod
    def parse(cls, text: str) -> "BandwidthTrace":
        samples = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"trace line {lineno}: expected 'time_s budget_kbps', got {line!r}")
            samples.append((float(parts[0]), float(parts[1])))
        return cls(tuple(samples))

    @classmethod
    def load(cls, path) -> "BandwidthTrace":
        return cls.parse(Path(path).read_text())

    def dumps(self) -> str:
        return "".join(f"{t:g} {b:g}\n" for t, b in self.samples)


@dataclass
class CostEstimator:
    """Per-granularity EWMA of the bits a frame layer actually cost."""

    alpha: float = EWMA_ALPHA
    estimates: dict = field(default_factory=dict)

    def update(self, g: int, bits: float):
        if bits <= 0:
            raise ValueError(f"layer cost must be positive, got {bits}")
        if g in self.estimates:
            self.estimates[g] = (1 - self.alpha) * self.estimates[g] + self.alpha * bits
        else:
            self.estimates[g] = float(bits)

    def get(self, g):
        return self.estimates.get(g)


def select_granularity(budget_bits_per_frame: float, estimator: CostEstimator, ladder=None) -> int:
    """Largest granularity whose estimated cost fits the per-frame budget.

    Falls back to the smallest level when nothing fits or nothing has been
    observed yet.  A level without an estimate directly above the chosen
    one is picked instead, as a probe, so the estimator can learn it.
    """
    levels = as_ladder(ladder).levels
    best = None
    for i, g in enumerate(levels):
        est = estimator.get(g)
        if est is not None and est <= budget_bits_per_frame:
            best = i
    if best is None:
        return levels[0]
    if best + 1 < len(levels) and estimator.get(levels[best + 1]) is None:
        return levels[best + 1]
    return levels[best]


@dataclass
class ChannelResult:
    selections: list[int]
    bits: list[float]
    budgets_kbps: list[float]
    fps: float

    @property
    def achieved_kbps(self) -> float:
        return sum(self.bits) * self.fps / len(self.bits) / 1000

    def window_kbps(self, start: int = 0, window: int | None = None):
        """``(achieved, budget)`` kbps over consecutive windows of ``window`` frames."""
        window = int(round(self.fps)) if window is None else window
        out = []
        for a in range(start, len(self.bits) - window + 1, window):
            bits = sum(self.bits[a:a + window])
            budget = sum(self.budgets_kbps[a:a + window]) / window
            out.append((bits * self.fps / window / 1000, budget))
        return out


def _cost_table(costs, levels):
    if isinstance(costs, Mapping):
        cols = [np.asarray(costs[g], dtype=np.float64) for g in levels]
        return np.stack(cols, axis=1)
    table = np.asarray(costs, dtype=np.float64)
    if table.ndim != 2 or table.shape[1] != len(levels):
        raise ValueError(f"cost table must be (frames, {len(levels)}), got {table.shape}")
    return table


def simulate_channel(costs, trace: BandwidthTrace, fps: float, ladder=None,
                     alpha: float = EWMA_ALPHA) -> ChannelResult:
    """Replay per-frame layer costs (bits) against a bandwidth trace.

    ``costs`` maps each granularity to a per-frame list of bits, or is an
    ``(n_frames, len(ladder))`` array.  Frame ``t`` is sent at ``t / fps``.
    """
    if not fps > 0:
        raise ValueError("fps must be positive")
    if trace is None or not trace.samples:
        raise ValueError("bandwidth trace is empty")
    levels = as_ladder(ladder).levels
    table = _cost_table(costs, levels)
    est = CostEstimator(alpha)
    sel, bits, budgets = [], [], []
    for t in range(table.shape[0]):
        kbps = trace.budget_at(t / fps)
        g = select_granularity(kbps * 1000 / fps, est, levels)
        b = table[t, levels.index(g)]
        est.update(g, b)
        sel.append(g)
        bits.append(float(b))
        budgets.append(kbps)
    return ChannelResult(sel, bits, budgets, fps)


@dataclass(frozen=True)
class RdPoint:
    rate_kbps: float
    quality: float
    label: tuple = ()

    def __post_init__(self):
        if not self.rate_kbps > 0:
            raise ValueError(f"rate must be positive, got {self.rate_kbps}")


def _cross(o, a, b):
    return ((a.rate_kbps - o.rate_kbps) * (b.quality - o.quality)
            - (a.quality - o.quality) * (b.rate_kbps - o.rate_kbps))


def convex_hull_rd(points: Seq[RdPoint]) -> list[RdPoint]:
    """Upper-left RD frontier with strictly decreasing slopes, sorted by rate.

    Quality is "higher is better".  Among equal rates only the best quality
    survives; a point on the chord of its neighbours is dropped; the frontier
    ends at the first point of maximum quality.
    """
    if not points:
        raise ValueError("need at least one RD point")
    pts = sorted(points, key=lambda p: (p.rate_kbps, -p.quality))
    hull = []
    for p in pts:
        if hull and p.rate_kbps == hull[-1].rate_kbps:
            continue
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) >= 0:
            hull.pop()
        hull.append(p)
    best = max(range(len(hull)), key=lambda i: (hull[i].quality, -i))
    return hull[:best + 1]


def read_rd_points(path) -> list[RdPoint]:
    points = []
    with open(path, newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        for row in csv.DictReader(rows):
            points.append(RdPoint(float(row["rate_kbps"]), float(row["quality"]),
                                  (row.get("label", ""),)))
    return points


def write_rd_points(points, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rate_kbps", "quality", "label"])
    for p in points:
        w.writerow([repr(p.rate_kbps), repr(p.quality), "/".join(str(x) for x in p.label)])
    if path is not None:
        Path(path).write_text(buf.getvalue())
    return buf.getvalue()
