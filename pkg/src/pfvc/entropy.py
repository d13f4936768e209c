"""Context-adaptive multi-symbol range coding of residual symbols.

Residuals are folded onto a non-negative alphabet (0, -1, 1, -2, 2, ... ->
0, 1, 2, 3, 4, ...).  Magnitudes above ``symbol_bound`` are sent as an
escape symbol followed by the value as four raw bytes pushed through the
coder.  Each context keeps order-0 frequency counts: start at 1, +1 per
coded symbol, halved (floor 1) once the total exceeds 2**16.

The coder is the usual 32-bit carry-propagating range coder: ``low`` may
overflow into bit 32, a pending byte plus a run of 0xFF bytes is held back
until the carry is resolved, and the interval is renormalized a byte at a
time whenever ``range`` drops below 2**24.  The leading byte of such a coder
is always zero and is not stored.
"""

from __future__ import annotations

import numpy as np

from ._jit import njit
from .token_codec import DEFAULT_SYMBOL_BOUND, ResidualSymbols

MAX_TOTAL = 1 << 16
TOP = 1 << 24
MASK32 = 0xFFFFFFFF
DEFAULT_BANDS = (0, 16, 64, 144, 256)

_OK = 0
_EXHAUSTED = 1
_BAD_SYMBOL = 2
_TRAILING = 3


class CorruptBitstreamError(ValueError):
    pass


class AdaptiveModel:
    """View on one context's frequency table inside a :class:`ContextSet`."""

    def __init__(self, counts: np.ndarray, totals: np.ndarray, index: int):
        self._counts = counts
        self._totals = totals
        self._i = index

    @property
    def counts(self) -> np.ndarray:
        return self._counts[self._i]

    @property
    def total(self) -> int:
        return int(self._totals[self._i])

    def __repr__(self):
        return f"AdaptiveModel(alphabet={len(self.counts)}, total={self.total})"


class ContextSet:
    """One adaptive model per band of coefficient positions.

    ``bands`` are the band edges; position ``i`` uses the model of the band
    ``[bands[k], bands[k+1])`` containing it.
    """

    def __init__(self, symbol_bound: int = DEFAULT_SYMBOL_BOUND, bands=DEFAULT_BANDS):
        bands = tuple(int(b) for b in bands)
        if len(bands) < 2 or bands[0] != 0 or any(b <= a for a, b in zip(bands, bands[1:])):
            raise ValueError(f"band edges must start at 0 and increase strictly: {bands}")
        if symbol_bound < 1:
            raise ValueError("symbol_bound must be >= 1")
        self.symbol_bound = int(symbol_bound)
        self.bands = bands
        self.alphabet = 2 * self.symbol_bound + 2
        self.counts = np.ones((len(bands) - 1, self.alphabet), dtype=np.int64)
        self.totals = np.full(len(bands) - 1, self.alphabet, dtype=np.int64)
        self._edges = np.array(bands[1:-1], dtype=np.int64)

    @property
    def escape(self) -> int:
        return self.alphabet - 1

    @property
    def models(self) -> list[AdaptiveModel]:
        return [AdaptiveModel(self.counts, self.totals, i) for i in range(len(self.totals))]

    def context_ids(self, positions) -> np.ndarray:
        pos = np.asarray(positions, dtype=np.int64)
        if pos.size and (pos.min() < 0 or pos.max() >= self.bands[-1]):
            raise ValueError(f"positions must lie in [0, {self.bands[-1]})")
        return np.searchsorted(self._edges, pos, side="right").astype(np.int64)

    def copy(self) -> "ContextSet":
        other = ContextSet(self.symbol_bound, self.bands)
        other.counts[:] = self.counts
        other.totals[:] = self.totals
        return other

    def __eq__(self, other):
        if not isinstance(other, ContextSet):
            return NotImplemented
        return (self.bands == other.bands and self.symbol_bound == other.symbol_bound
                and np.array_equal(self.counts, other.counts)
                and np.array_equal(self.totals, other.totals))

    __hash__ = None


def fold(values, symbol_bound=DEFAULT_SYMBOL_BOUND) -> np.ndarray:
    """Map signed residuals onto alphabet indices; out-of-range -> escape."""
    v = np.asarray(values, dtype=np.int64)
    idx = np.where(v > 0, 2 * v, -2 * v - 1)
    idx[v == 0] = 0
    return np.where(np.abs(v) > symbol_bound, 2 * symbol_bound + 1, idx)


def unfold(indices) -> np.ndarray:
    i = np.asarray(indices, dtype=np.int64)
    return np.where(i % 2 == 0, i // 2, -(i + 1) // 2)


@njit(cache=True)
def _update(counts, totals, c, s):
    counts[c, s] += 1
    totals[c] += 1
    if totals[c] > MAX_TOTAL:
        t = 0
        for j in range(counts.shape[1]):
            v = counts[c, j] >> 1
            if v < 1:
                v = 1
            counts[c, j] = v
            t += v
        totals[c] = t


@njit(cache=True)
def _shift_low(low, cache, cache_size, out, pos):
    if low < 0xFF000000 or low > MASK32:
        carry = low >> 32
        temp = cache
        while True:
            out[pos] = (temp + carry) & 0xFF
            pos += 1
            temp = 0xFF
            cache_size -= 1
            if cache_size == 0:
                break
        cache = (low >> 24) & 0xFF
    cache_size += 1
    low = (low & 0x00FFFFFF) << 8
    return low, cache, cache_size, pos


@njit(cache=True)
def _encode(values, ctx, counts, totals, bound, out):
    esc = 2 * bound + 1
    low = np.int64(0)
    rng = np.int64(MASK32)
    cache = np.int64(0)
    cache_size = np.int64(1)
    pos = 0
    for i in range(values.shape[0]):
        v = values[i]
        c = ctx[i]
        if v > bound or v < -bound:
            s = esc
        elif v > 0:
            s = 2 * v
        elif v < 0:
            s = -2 * v - 1
        else:
            s = 0
        cum = 0
        for j in range(s):
            cum += counts[c, j]
        r = rng // totals[c]
        low += r * cum
        rng = r * counts[c, s]
        while rng < TOP:
            rng <<= 8
            low, cache, cache_size, pos = _shift_low(low, cache, cache_size, out, pos)
        if s == esc:
            raw = v & MASK32
            for k in range(3, -1, -1):
                r = rng >> 8
                low += r * ((raw >> (8 * k)) & 0xFF)
                rng = r
                while rng < TOP:
                    rng <<= 8
                    low, cache, cache_size, pos = _shift_low(low, cache, cache_size, out, pos)
        _update(counts, totals, c, s)
    for _ in range(5):
        low, cache, cache_size, pos = _shift_low(low, cache, cache_size, out, pos)
    return pos


@njit(cache=True)
def _decode(data, n, ctx, counts, totals, bound, out):
    """Returns (status, number of symbols decoded)."""
    esc = 2 * bound + 1
    nbytes = data.shape[0]
    if nbytes < 4:
        return _EXHAUSTED, 0
    code = np.int64(0)
    for k in range(4):
        code = (code << 8) | data[k]
    pos = 4
    rng = np.int64(MASK32)
    alphabet = counts.shape[1]
    for i in range(n):
        c = ctx[i]
        total = totals[c]
        r = rng // total
        target = code // r
        if target >= total:
            return _BAD_SYMBOL, i
        s = 0
        cum = 0
        while s < alphabet:
            f = counts[c, s]
            if cum + f > target:
                break
            cum += f
            s += 1
        code -= r * cum
        rng = r * counts[c, s]
        while rng < TOP:
            if pos >= nbytes:
                return _EXHAUSTED, i
            code = ((code << 8) | data[pos]) & MASK32
            pos += 1
            rng <<= 8
        if s == esc:
            raw = np.int64(0)
            for k in range(4):
                r = rng >> 8
                b = code // r
                if b > 255:
                    return _BAD_SYMBOL, i
                raw = (raw << 8) | b
                code -= r * b
                rng = r
                while rng < TOP:
                    if pos >= nbytes:
                        return _EXHAUSTED, i
                    code = ((code << 8) | data[pos]) & MASK32
                    pos += 1
                    rng <<= 8
            if raw >= 0x80000000:
                raw -= 0x100000000
            out[i] = raw
        elif s % 2 == 0:
            out[i] = s // 2
        else:
            out[i] = -(s + 1) // 2
        _update(counts, totals, c, s)
    if pos != nbytes:
        return _TRAILING, n
    return _OK, n


def _as_values(symbols):
    if isinstance(symbols, ResidualSymbols):
        return symbols.symbols
    return np.ascontiguousarray(symbols, dtype=np.int64).ravel()


def encode_ints(values, ctx_ids, contexts: ContextSet) -> bytes:
    """Code integers with an explicit context id per value; updates ``contexts``."""
    values = _as_values(values)
    ctx_ids = np.ascontiguousarray(ctx_ids, dtype=np.int64)
    if len(ctx_ids) != len(values):
        raise ValueError("one context id per value is required")
    if len(values) == 0:
        return b""
    if np.any(values < -(1 << 31)) or np.any(values >= (1 << 31)):
        raise ValueError("values must fit in 32-bit two's complement")
    out = np.empty(8 * len(values) + 16, dtype=np.uint8)
    pos = _encode(values, ctx_ids, contexts.counts, contexts.totals,
                  contexts.symbol_bound, out)
    return out[1:pos].tobytes()


def decode_ints(data: bytes, ctx_ids, contexts: ContextSet) -> np.ndarray:
    ctx_ids = np.ascontiguousarray(ctx_ids, dtype=np.int64)
    n = len(ctx_ids)
    if n == 0:
        if len(data):
            raise CorruptBitstreamError(f"{len(data)} bytes left over for an empty symbol list")
        return np.zeros(0, dtype=np.int64)
    buf = np.frombuffer(bytes(data), dtype=np.uint8).astype(np.int64)
    out = np.zeros(n, dtype=np.int64)
    status, done = _decode(buf, n, ctx_ids, contexts.counts, contexts.totals,
                           contexts.symbol_bound, out)
    if status == _EXHAUSTED:
        raise CorruptBitstreamError(
            f"byte stream exhausted after {done} of {n} symbols ({len(data)} bytes)")
    if status == _BAD_SYMBOL:
        raise CorruptBitstreamError(f"invalid code value at symbol {done}")
    if status == _TRAILING:
        raise CorruptBitstreamError("trailing bytes after the last symbol")
    return out


def encode_symbols(symbols, contexts: ContextSet, start: int = 0) -> bytes:
    """Code residual symbols, the i-th one in the context of position ``start + i``."""
    values = _as_values(symbols)
    ctx = contexts.context_ids(np.arange(start, start + len(values)))
    return encode_ints(values, ctx, contexts)


def decode_symbols(data: bytes, n_symbols: int, contexts: ContextSet,
                   start: int = 0) -> ResidualSymbols:
    ctx = contexts.context_ids(np.arange(start, start + n_symbols))
    return ResidualSymbols(n_symbols, decode_ints(data, ctx, contexts))
