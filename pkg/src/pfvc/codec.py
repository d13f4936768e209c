"""End-to-end encoder and decoder."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import intra
from .bitstream import (BitstreamError, ContainerHeader, InterFrameRecord, read_container,
                        write_container)
from .entropy import ContextSet, decode_symbols, encode_symbols
from .media import Frame, Sequence
from .motion import Reconstructor
from .rate import BandwidthTrace, CostEstimator, select_granularity
from .token_codec import (DEFAULT_STEP, PredictorState, QuantConfig, decode_frame, encode_frame,
                          init_state, snap_step)
from .tokenizer import DEFAULT_LADDER, N_COEFFS, as_ladder, frame_feature, tokenize


@dataclass
class EncodeConfig:
    """Encoder settings.

    ``granularity`` is one of: an int (fixed level), a sequence with one
    level per inter frame, or a :class:`BandwidthTrace` for trace-adaptive
    selection.  ``key_budget`` is a QP preset id in ``[0, 6)`` or ``None``
    for a lossless key frame.  ``external_key`` is ``(payload, decoded)``
    for a key frame coded elsewhere.
    """

    ladder: tuple[int, ...] = DEFAULT_LADDER
    step: float = DEFAULT_STEP
    granularity: object = 256
    key_budget: int | None = None
    fps: float | None = None
    external_key: tuple[bytes, Frame] | None = None

    def __post_init__(self):
        self.ladder = as_ladder(self.ladder).levels
        self.step = snap_step(self.step)
        if self.key_budget is not None and not 0 <= self.key_budget < len(intra.KEY_QPS):
            raise ValueError(f"key_budget must be in [0, {len(intra.KEY_QPS)}) or None")
        g = self.granularity
        if isinstance(g, (int, np.integer)):
            if g not in self.ladder:
                raise ValueError(f"granularity {g} is not on the ladder {self.ladder}")
        elif not isinstance(g, BandwidthTrace):
            bad = [x for x in g if x not in self.ladder]
            if bad:
                raise ValueError(f"granularities {sorted(set(bad))} are not on the ladder")

    @property
    def quant(self) -> QuantConfig:
        return QuantConfig(self.step)


@dataclass
class EncodeStats:
    """Side information an encoder run can report back."""

    granularities: list[int] = field(default_factory=list)
    record_bits: list[int] = field(default_factory=list)
    states: list[PredictorState] = field(default_factory=list)
    key_frame: Frame | None = None


def key_tokens_of(frame: Frame):
    return tokenize(frame_feature(frame), N_COEFFS)


def _container_fps(fps: float) -> int:
    f = int(round(fps))
    if abs(f - fps) > 1e-9 or not 1 <= f <= 255:
        raise ValueError(f"fps {fps} must be an integer in [1, 255] for the container")
    return f


class _Policy:
    def __init__(self, config: EncodeConfig, fps: float, n_inter: int):
        self.config = config
        self.fps = fps
        g = config.granularity
        self.trace = g if isinstance(g, BandwidthTrace) else None
        self.estimator = CostEstimator()
        if self.trace is None and not isinstance(g, (int, np.integer)):
            g = list(g)
            if len(g) != n_inter:
                raise ValueError(f"{len(g)} granularities given for {n_inter} inter frames")
        self.fixed = g

    def choose(self, t: int) -> int:
        if self.trace is None:
            return int(self.fixed) if isinstance(self.fixed, (int, np.integer)) else int(self.fixed[t - 1])
        budget = self.trace.budget_at(t / self.fps) * 1000 / self.fps
        return select_granularity(budget, self.estimator, self.config.ladder)

    def observe(self, g: int, bits: int):
        if self.trace is not None:
            self.estimator.update(g, bits)


def encode(seq: Sequence, config: EncodeConfig | None = None,
           stats: EncodeStats | None = None) -> bytes:
    """Code ``seq`` into a container.

    Frame 0 becomes the key payload.  Every later frame is tokenized at the
    policy's granularity, predicted from the running reconstructed tokens,
    quantized and range coded.  Tokenization of the key uses the decoded key
    frame, exactly as the decoder will.
    """
    config = config or EncodeConfig()
    fps = config.fps if config.fps is not None else seq.fps
    q = config.quant
    if config.external_key is not None:
        key_payload, key_hat = config.external_key
    else:
        key_payload, key_hat = intra.code_key(seq[0], config.key_budget)
    state = init_state(key_tokens_of(key_hat))
    contexts = ContextSet(q.symbol_bound)
    policy = _Policy(config, fps, len(seq) - 1)
    ladder = config.ladder
    if stats is not None:
        stats.key_frame = key_hat

    records = []
    for t in range(1, len(seq)):
        g = policy.choose(t)
        tokens = tokenize(frame_feature(seq[t]), g, ladder)
        syms, state = encode_frame(tokens, state, q)
        payload = encode_symbols(syms, contexts)
        rec = InterFrameRecord(ladder.index(g), payload)
        records.append(rec)
        policy.observe(g, 8 * rec.size)
        if stats is not None:
            stats.granularities.append(g)
            stats.record_bits.append(8 * rec.size)
            stats.states.append(state)

    header = ContainerHeader(seq.width, seq.height, _container_fps(fps), ladder,
                             q.step_q88, len(seq))
    return write_container(header, key_payload, records)


@dataclass
class DecodeStats:
    granularities: list[int] = field(default_factory=list)
    states: list[PredictorState] = field(default_factory=list)
    tokens: list = field(default_factory=list)


def decode(data: bytes, key_frame: Frame | None = None, stats: DecodeStats | None = None,
           on_frame: Callable[[int, Frame], None] | None = None) -> Sequence:
    """Rebuild the sequence from a container.

    ``key_frame`` must be given when the key payload was produced by an
    external codec.  Raises :class:`~pfvc.bitstream.BitstreamError` or
    :class:`~pfvc.entropy.CorruptBitstreamError` on damaged input.
    """
    header, key_payload, records = read_container(data)
    q = QuantConfig.from_q88(header.quant_step_q88)
    ladder = header.ladder
    if any(g > N_COEFFS for g in ladder):
        raise BitstreamError(f"ladder {ladder} has levels above {N_COEFFS}", offset=0)
    if key_frame is None:
        key_frame = intra.decode_key(key_payload, header.width, header.height)
    elif (key_frame.width, key_frame.height) != (header.width, header.height):
        raise ValueError("supplied key frame does not match the container dimensions")
    key_tokens = key_tokens_of(key_frame)
    state = init_state(key_tokens)
    contexts = ContextSet(q.symbol_bound)
    recon = Reconstructor(key_frame, key_tokens)

    frames = [key_frame]
    if on_frame is not None:
        on_frame(0, key_frame)
    for i, rec in enumerate(records):
        g = ladder[rec.gran_index]
        syms = decode_symbols(rec.payload, g, contexts)
        tokens, state = decode_frame(syms, state, q)
        frame = recon.reconstruct(tokens)
        frames.append(frame)
        if stats is not None:
            stats.granularities.append(g)
            stats.states.append(state)
            stats.tokens.append(tokens)
        if on_frame is not None:
            on_frame(i + 1, frame)
    return Sequence(frames, float(header.fps))


def layer_costs(seq: Sequence, config: EncodeConfig | None = None) -> np.ndarray:
    """Bits per inter record at each fixed granularity, shape ``(frames - 1, levels)``."""
    config = config or EncodeConfig()
    cols = []
    for g in config.ladder:
        stats = EncodeStats()
        cfg = EncodeConfig(config.ladder, config.step, g, config.key_budget, config.fps,
                           config.external_key)
        encode(seq, cfg, stats)
        cols.append(stats.record_bits)
    return np.array(cols, dtype=np.float64).T
