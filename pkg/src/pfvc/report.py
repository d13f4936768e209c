"""Rate-distortion grid over key-frame presets and granularities."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import intra
from .bitstream import measure_bitrate
from .codec import EncodeConfig, decode, encode
from .media import Sequence
from .metrics import sequence_quality
from .rate import RdPoint, convex_hull_rd
from .tokenizer import DEFAULT_LADDER, as_ladder

CSV_COLUMNS = ("key_budget_id", "granularity", "rate_kbps", "psnr_db", "ssim", "on_hull")
CSV_NOTE = "# rate_kbps counts every container byte, key-frame payload included"


@dataclass
class RdRow:
    key_budget_id: int
    granularity: int
    rate_kbps: float
    psnr_db: float
    ssim: float
    container_bytes: int
    on_hull: bool = False
    extra: dict = field(default_factory=dict)


@dataclass
class RdReport:
    rows: list[RdRow]
    fps: float
    frame_count: int

    def __post_init__(self):
        if not self.rows:
            raise ValueError("an RD report needs at least one row")

    def hull(self) -> list[RdRow]:
        return sorted((r for r in self.rows if r.on_hull), key=lambda r: r.rate_kbps)

    def row(self, key_budget_id, granularity) -> RdRow:
        for r in self.rows:
            if (r.key_budget_id, r.granularity) == (key_budget_id, granularity):
                return r
        raise KeyError((key_budget_id, granularity))

    def merge_metric(self, name: str, values: dict):
        """Attach an externally computed metric, keyed by ``(key_budget_id, granularity)``."""
        if name in CSV_COLUMNS:
            raise ValueError(f"{name!r} clashes with a built-in column")
        for r in self.rows:
            if (r.key_budget_id, r.granularity) in values:
                r.extra[name] = values[(r.key_budget_id, r.granularity)]

    def to_csv(self, path=None) -> str:
        extra = sorted({k for r in self.rows for k in r.extra})
        buf = io.StringIO()
        buf.write(CSV_NOTE + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS + tuple(extra))
        for r in self.rows:
            w.writerow([r.key_budget_id, r.granularity, repr(r.rate_kbps), repr(r.psnr_db),
                        repr(r.ssim), int(r.on_hull)] + [r.extra.get(k, "") for k in extra])
        if path is not None:
            Path(path).write_text(buf.getvalue())
        return buf.getvalue()


def _flag_hull(rows):
    points = [RdPoint(r.rate_kbps, r.psnr_db, (i,)) for i, r in enumerate(rows)]
    for p in convex_hull_rd(points):
        rows[p.label[0]].on_hull = True


def rd_report(sequence: Sequence, ladder=DEFAULT_LADDER, presets=None,
              config: EncodeConfig | None = None) -> RdReport:
    """Encode and decode ``sequence`` for every (key preset, granularity) cell.

    ``presets`` defaults to all six key presets.  ``config`` supplies the
    remaining settings (quantizer step, fps); its granularity and key budget
    are overridden per cell.  Each cell runs with its own codec state.
    """
    levels = as_ladder(ladder).levels
    presets = range(len(intra.KEY_QPS)) if presets is None else presets
    base = config or EncodeConfig(ladder=levels)
    fps = base.fps if base.fps is not None else sequence.fps
    rows = []
    for b in presets:
        key = intra.code_key(sequence[0], b)
        for g in levels:
            cfg = replace(base, ladder=levels, granularity=g, key_budget=b, external_key=key)
            data = encode(sequence, cfg)
            out = decode(data)
            psnr_db, ssim_val = sequence_quality(sequence, out)
            rows.append(RdRow(b, g, measure_bitrate(data, fps, len(sequence)),
                              psnr_db, ssim_val, len(data)))
    _flag_hull(rows)
    return RdReport(rows, fps, len(sequence))
