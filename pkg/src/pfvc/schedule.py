"""Progressive granularity schedule for training, and the weighted loss sum.

Stages introduce coarser granularities one at a time; within a stage each
step draws a granularity from a fixed categorical distribution.  Draws use
a counter-based generator (SplitMix64 output function over ``seed +
counter * gamma``) whose state is an explicit ``(seed, counter)`` value, so a
draw depends only on the seed and how many draws preceded it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tokenizer import DEFAULT_LADDER

N_EPOCHS = 200
PROB_TOL = 1e-9

_M64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _M64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _M64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngState:
    seed: int
    counter: int = 0

    def next_u64(self) -> tuple[int, "RngState"]:
        n = self.counter + 1
        return _mix64((self.seed + n * _GAMMA) & _M64), RngState(self.seed, n)

    def uniform(self) -> tuple[float, "RngState"]:
        x, nxt = self.next_u64()
        return (x >> 11) * 2.0 ** -53, nxt

    def uniforms(self, n: int) -> tuple[np.ndarray, "RngState"]:
        """``n`` consecutive draws at once; identical to calling :meth:`uniform` n times."""
        with np.errstate(over="ignore"):
            k = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
            z = np.uint64(self.seed & _M64) + k * np.uint64(_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53, RngState(self.seed, self.counter + n)

    def split(self, index: int) -> "RngState":
        """Independent child stream; children with different indices do not overlap."""
        return RngState(_mix64((self.seed ^ _mix64(index + 1)) & _M64), 0)


@dataclass(frozen=True)
class ScheduleStage:
    first_epoch: int
    last_epoch: int
    granularities: tuple[int, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "granularities", tuple(int(g) for g in self.granularities))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if len(self.granularities) != len(self.probabilities):
            raise ValueError("granularities and probabilities must align")
        if self.first_epoch > self.last_epoch:
            raise ValueError(f"empty epoch range {self.first_epoch}-{self.last_epoch}")

    @property
    def epoch_range(self):
        return self.first_epoch, self.last_epoch

    def __contains__(self, epoch):
        return self.first_epoch <= epoch <= self.last_epoch


@dataclass(frozen=True)
class TrainingSchedule:
    stages: tuple[ScheduleStage, ...]
    n_epochs: int = N_EPOCHS
    ladder: tuple[int, ...] = DEFAULT_LADDER

    def stage_for(self, epoch: int) -> tuple[int, ScheduleStage]:
        if not 1 <= epoch <= self.n_epochs:
            raise ValueError(f"epoch {epoch} outside [1, {self.n_epochs}]")
        for i, st in enumerate(self.stages):
            if epoch in st:
                return i, st
        raise ValueError(f"no stage covers epoch {epoch}")

    def dumps(self) -> str:
        lines = ["# stage | epochs | granularities | probabilities"]
        for i, st in enumerate(self.stages, 1):
            lines.append(f"S{i} | {st.first_epoch}-{st.last_epoch} | "
                         f"{', '.join(map(str, st.granularities))} | "
                         f"{', '.join(f'{p:g}' for p in st.probabilities)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, n_epochs: int | None = None, ladder=DEFAULT_LADDER):
        stages = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            cols = [c.strip() for c in line.split("|")]
            if len(cols) != 4:
                raise ValueError(f"schedule line {lineno}: expected 4 '|'-separated columns")
            first, _, last = cols[1].partition("-")
            stages.append(ScheduleStage(
                int(first), int(last or first),
                tuple(int(g) for g in cols[2].split(",")),
                tuple(float(p) for p in cols[3].split(","))))
        if not stages:
            raise ValueError("schedule has no stages")
        if n_epochs is None:
            n_epochs = max(st.last_epoch for st in stages)
        return cls(tuple(stages), n_epochs, tuple(ladder))


def default_schedule() -> TrainingSchedule:
    return TrainingSchedule((
        ScheduleStage(1, 40, (256,), (1.0,)),
        ScheduleStage(41, 80, (144, 256), (0.7, 0.3)),
        ScheduleStage(81, 120, (64, 144, 256), (0.5, 0.3, 0.2)),
        ScheduleStage(121, 160, (16, 64, 144, 256), (0.45, 0.25, 0.15, 0.15)),
        ScheduleStage(161, 200, (16, 64, 144, 256), (0.25, 0.25, 0.25, 0.25)),
    ))


def _categorical(u, probabilities):
    acc = 0.0
    for i, p in enumerate(probabilities):
        acc += p
        if u < acc:
            return i
    # rounding slack in the cumulative sum lands on the last non-zero bin
    return max(i for i, p in enumerate(probabilities) if p > 0)


def sample_granularity(schedule: TrainingSchedule, epoch: int, rng: RngState):
    """One draw from the stage covering ``epoch``; returns ``(g, next_rng)``."""
    _, st = schedule.stage_for(epoch)
    u, rng = rng.uniform()
    return st.granularities[_categorical(u, st.probabilities)], rng


def sample_granularities(schedule: TrainingSchedule, epoch: int, rng: RngState, n: int):
    """``n`` draws at once, equal to ``n`` chained :func:`sample_granularity` calls."""
    _, st = schedule.stage_for(epoch)
    u, rng = rng.uniforms(n)
    cum = np.cumsum(st.probabilities)
    idx = np.searchsorted(cum, u, side="right")
    last = max(i for i, p in enumerate(st.probabilities) if p > 0)
    idx = np.minimum(idx, last)
    return np.asarray(st.granularities)[idx], rng


def validate_schedule(schedule: TrainingSchedule) -> list[str]:
    """All rule violations found; an empty list means the schedule is valid."""
    problems = []
    stages = schedule.stages
    if not stages:
        return ["schedule has no stages"]
    ladder = set(schedule.ladder)

    for i, st in enumerate(stages, 1):
        if any(p < 0 for p in st.probabilities):
            problems.append(f"S{i}: negative probability")
        total = math.fsum(st.probabilities)
        if abs(total - 1.0) > PROB_TOL:
            problems.append(f"S{i}: probabilities sum to {total!r}, not 1")
        if len(set(st.granularities)) != len(st.granularities):
            problems.append(f"S{i}: repeated granularity")
        extra = set(st.granularities) - ladder
        if extra:
            problems.append(f"S{i}: granularities {sorted(extra)} not on the ladder")

    ordered = sorted(stages, key=lambda s: s.first_epoch)
    if ordered[0].first_epoch != 1:
        problems.append(f"coverage: epochs 1-{ordered[0].first_epoch - 1} have no stage")
    for a, b in zip(ordered, ordered[1:]):
        if b.first_epoch <= a.last_epoch:
            problems.append(f"overlap: epochs {b.first_epoch}-{min(a.last_epoch, b.last_epoch)} "
                            "covered twice")
        elif b.first_epoch > a.last_epoch + 1:
            problems.append(f"coverage: epochs {a.last_epoch + 1}-{b.first_epoch - 1} have no stage")
    if ordered[-1].last_epoch != schedule.n_epochs:
        problems.append(f"coverage: stages end at epoch {ordered[-1].last_epoch}, "
                        f"training runs {schedule.n_epochs}")

    seen = set()
    for i, st in enumerate(stages, 1):
        cur = set(st.granularities)
        if not seen <= cur:
            problems.append(f"S{i}: drops granularities {sorted(seen - cur)}")
        new = cur - seen
        final = i == len(stages)
        if not final:
            if len(new) != 1:
                problems.append(f"S{i}: introduces {len(new)} granularities, expected exactly 1")
            else:
                g = new.pop()
                p_new = st.probabilities[st.granularities.index(g)]
                if any(p > p_new for p in st.probabilities):
                    problems.append(f"S{i}: new granularity {g} lacks the maximum probability")
        seen |= cur
    last = stages[-1]
    if len(set(last.probabilities)) > 1:
        problems.append(f"S{len(stages)}: final stage is not uniform")
    if seen != ladder:
        problems.append(f"granularities {sorted(ladder - seen)} never trained")
    return problems


@dataclass(frozen=True)
class LossWeights:
    per: float = 10.0
    adv: float = 1.0
    fea: float = 10.0

    def __post_init__(self):
        if min(self.per, self.adv, self.fea) <= 0:
            raise ValueError("loss weights must be positive")


def aggregate_loss(l_per: float, l_adv: float, l_fea: float,
                   weights: LossWeights = LossWeights()) -> float:
    terms = (l_per, l_adv, l_fea)
    if not all(math.isfinite(t) for t in terms):
        raise ValueError(f"non-finite loss term in {terms}")
    return weights.per * l_per + weights.adv * l_adv + weights.fea * l_fea
