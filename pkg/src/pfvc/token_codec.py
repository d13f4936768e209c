"""Closed-loop predictive quantization of token vectors.

Both ends keep a :class:`PredictorState` holding the last *reconstructed*
value of every zigzag coefficient.  The encoder updates it with exactly the
arithmetic the decoder performs, so the two never drift.  Coefficients above
the granularity of the current frame keep their previous value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tokenizer import N_COEFFS, TokenVector

DEFAULT_STEP = 0.25
DEFAULT_SYMBOL_BOUND = 255
Q88_ONE = 256


class PredictorError(ValueError):
    pass


def snap_step(step: float) -> float:
    """Round a step to the Q8.8 grid it is transmitted on."""
    q = int(round(step * Q88_ONE))
    if not 1 <= q <= 0xFFFF:
        raise ValueError(f"quantization step {step} is not representable in Q8.8")
    return q / Q88_ONE


@dataclass(frozen=True)
class QuantConfig:
    step: float = DEFAULT_STEP
    symbol_bound: int = DEFAULT_SYMBOL_BOUND

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"quantization step must be positive, got {self.step}")
        if self.symbol_bound < 1:
            raise ValueError(f"symbol_bound must be >= 1, got {self.symbol_bound}")

    @property
    def step_q88(self) -> int:
        return int(round(self.step * Q88_ONE))

    @classmethod
    def from_q88(cls, q: int, symbol_bound: int = DEFAULT_SYMBOL_BOUND) -> "QuantConfig":
        return cls(q / Q88_ONE, symbol_bound)


@dataclass
class PredictorState:
    ref_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(N_COEFFS))
    initialized: bool = False

    def __post_init__(self):
        self.ref_coeffs = np.array(self.ref_coeffs, dtype=np.float64).ravel()
        if len(self.ref_coeffs) != N_COEFFS:
            raise ValueError(f"predictor state needs {N_COEFFS} entries")

    def copy(self) -> "PredictorState":
        return PredictorState(self.ref_coeffs.copy(), self.initialized)

    def __eq__(self, other):
        if not isinstance(other, PredictorState):
            return NotImplemented
        # bitwise, so that -0.0 vs 0.0 or NaN payloads would count as drift
        return (self.initialized == other.initialized
                and self.ref_coeffs.tobytes() == other.ref_coeffs.tobytes())


@dataclass(frozen=True, eq=False)
class ResidualSymbols:
    g: int
    symbols: np.ndarray

    def __post_init__(self):
        syms = np.asarray(self.symbols, dtype=np.int64).ravel()
        if len(syms) != self.g:
            raise ValueError(f"expected {self.g} symbols, got {len(syms)}")
        object.__setattr__(self, "symbols", syms)

    def __eq__(self, other):
        if not isinstance(other, ResidualSymbols):
            return NotImplemented
        return self.g == other.g and np.array_equal(self.symbols, other.symbols)

    __hash__ = None


def init_state(key_tokens: TokenVector) -> PredictorState:
    if key_tokens.g != N_COEFFS:
        raise PredictorError(f"key tokens must carry all {N_COEFFS} coefficients, got g={key_tokens.g}")
    return PredictorState(key_tokens.coeffs.copy(), True)


def quantize(residual: np.ndarray, step: float) -> np.ndarray:
    """Uniform mid-tread quantizer, halves rounded up."""
    return np.floor(residual / step + 0.5).astype(np.int64)


def encode_frame(tokens: TokenVector, state: PredictorState, q: QuantConfig):
    """Returns ``(ResidualSymbols, new_state)``; ``state`` is not modified."""
    if not state.initialized:
        raise PredictorError("predictor state used before initialization")
    g = tokens.g
    ref = state.ref_coeffs
    syms = quantize(tokens.coeffs - ref[:g], q.step)
    new_ref = ref.copy()
    new_ref[:g] = ref[:g] + syms * q.step
    return ResidualSymbols(g, syms), PredictorState(new_ref, True)


def decode_frame(symbols: ResidualSymbols, state: PredictorState, q: QuantConfig):
    """Returns ``(TokenVector, new_state)``; mirrors :func:`encode_frame`."""
    if not state.initialized:
        raise PredictorError("predictor state used before initialization")
    g = symbols.g
    if len(symbols.symbols) != g:
        raise PredictorError(f"symbol count {len(symbols.symbols)} does not match g={g}")
    ref = state.ref_coeffs
    new_ref = ref.copy()
    new_ref[:g] = ref[:g] + symbols.symbols * q.step
    return TokenVector(g, new_ref[:g].copy()), PredictorState(new_ref, True)
