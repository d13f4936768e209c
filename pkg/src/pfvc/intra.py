"""Key-frame payloads.

The key frame is an opaque byte string inside the container.  Two built-in
payload kinds exist for when no external intra codec is around:

``raw``
    the frame stored losslessly (luma, then chroma if present).
``dct``
    8x8 orthonormal DCT, uniform quantization with the H.26x step for one
    of six QP presets, DC coded differentially, coefficients range coded
    with per-frequency-band contexts.

Externally produced payloads are carried as-is; the caller then supplies
the decoded key frame.
"""

from __future__ import annotations

import numpy as np

from .entropy import ContextSet, CorruptBitstreamError, decode_ints, encode_ints
from .media import Frame
from .tokenizer import dct_matrix, zigzag_order

PAYLOAD_MAGIC = b"PK"
KIND_RAW = 0
KIND_DCT = 1
KEY_QPS = (2, 12, 22, 32, 42, 52)
BLOCK = 8
BLOCK_BANDS = (0, 1, 6, 15, 28, 64)


def qp_step(qp: int) -> float:
    return 2.0 ** ((qp - 4) / 6.0)


def _blocks(luma, n=BLOCK):
    h, w = luma.shape
    return luma.reshape(h // n, n, w // n, n).swapaxes(1, 2)


def _unblocks(blocks):
    by, bx, n, _ = blocks.shape
    return blocks.swapaxes(1, 2).reshape(by * n, bx * n)


def _pad(luma, n=BLOCK):
    h, w = luma.shape
    ph, pw = -h % n, -w % n
    if ph or pw:
        luma = np.pad(luma, ((0, ph), (0, pw)), mode="edge")
    return luma


def _quantized_levels(luma: np.ndarray, step: float) -> np.ndarray:
    c = dct_matrix(BLOCK)
    x = _blocks(_pad(luma).astype(np.float64) - 128.0)
    coeffs = c @ x @ c.T
    levels = np.floor(coeffs / step + 0.5).astype(np.int64)
    return levels.reshape(levels.shape[0], levels.shape[1], -1)[..., zigzag_order(BLOCK)]


def _reconstruct(levels: np.ndarray, step: float, width: int, height: int) -> np.ndarray:
    by, bx, _ = levels.shape
    coeffs = np.zeros((by, bx, BLOCK * BLOCK))
    coeffs[..., zigzag_order(BLOCK)] = levels * step
    c = dct_matrix(BLOCK)
    pix = c.T @ coeffs.reshape(by, bx, BLOCK, BLOCK) @ c
    out = _unblocks(pix)[:height, :width] + 128.0
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def _flatten_symbols(levels):
    """Zigzag levels per block with the DC replaced by its difference to the previous block."""
    flat = levels.reshape(-1, BLOCK * BLOCK).copy()
    dc = flat[:, 0].copy()
    flat[1:, 0] = dc[1:] - dc[:-1]
    return flat


def _contexts():
    return ContextSet(255, BLOCK_BANDS)


def encode_raw(frame: Frame) -> bytes:
    has_chroma = frame.chroma is not None
    return PAYLOAD_MAGIC + bytes((KIND_RAW, int(has_chroma))) + frame.to_bytes()


def encode_dct(frame: Frame, preset: int) -> bytes:
    if not 0 <= preset < len(KEY_QPS):
        raise ValueError(f"key budget preset must be in [0, {len(KEY_QPS)}), got {preset}")
    levels = _quantized_levels(frame.luma, qp_step(KEY_QPS[preset]))
    flat = _flatten_symbols(levels)
    ctx = _contexts()
    pos = np.tile(np.arange(BLOCK * BLOCK), flat.shape[0])
    body = encode_ints(flat.ravel(), ctx.context_ids(pos), ctx)
    return PAYLOAD_MAGIC + bytes((KIND_DCT, preset)) + body


def encode_key(frame: Frame, preset: int | None) -> bytes:
    """``preset=None`` stores the frame losslessly."""
    return encode_raw(frame) if preset is None else encode_dct(frame, preset)


def is_builtin(payload: bytes) -> bool:
    return len(payload) >= 4 and payload[:2] == PAYLOAD_MAGIC and payload[2] in (KIND_RAW, KIND_DCT)


def payload_preset(payload: bytes) -> int | None:
    """QP preset of a built-in DCT payload, ``None`` for raw."""
    if not is_builtin(payload):
        raise ValueError("not a built-in key payload")
    return payload[3] if payload[2] == KIND_DCT else None


def decode_key(payload: bytes, width: int, height: int) -> Frame:
    if not is_builtin(payload):
        raise CorruptBitstreamError(
            "key payload is not a built-in kind; pass the externally decoded key frame")
    kind, arg = payload[2], payload[3]
    body = payload[4:]
    if kind == KIND_RAW:
        luma_n = width * height
        chroma_n = 2 * (width // 2) * (height // 2) if arg else 0
        if len(body) != luma_n + chroma_n:
            raise CorruptBitstreamError(
                f"raw key payload holds {len(body)} bytes, expected {luma_n + chroma_n}")
        buf = np.frombuffer(body, dtype=np.uint8)
        luma = buf[:luma_n].reshape(height, width)
        chroma = None
        if arg:
            cs = (width // 2) * (height // 2)
            chroma = (buf[luma_n:luma_n + cs].reshape(height // 2, width // 2),
                      buf[luma_n + cs:].reshape(height // 2, width // 2))
        return Frame(luma, chroma)
    if arg >= len(KEY_QPS):
        raise CorruptBitstreamError(f"unknown key preset {arg}")
    by, bx = -(-height // BLOCK), -(-width // BLOCK)
    n_blocks = by * bx
    ctx = _contexts()
    pos = np.tile(np.arange(BLOCK * BLOCK), n_blocks)
    flat = decode_ints(body, ctx.context_ids(pos), ctx).reshape(n_blocks, BLOCK * BLOCK)
    flat[:, 0] = np.cumsum(flat[:, 0])
    return Frame(_reconstruct(flat.reshape(by, bx, -1), qp_step(KEY_QPS[arg]), width, height))


def code_key(frame: Frame, preset: int | None):
    """``(payload, decoded_frame)`` as the decoder will see it."""
    payload = encode_key(frame, preset)
    if preset is None:
        return payload, frame
    return payload, decode_key(payload, frame.width, frame.height)

