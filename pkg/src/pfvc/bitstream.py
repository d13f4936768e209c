"""The .pfvc container.

Layout, all integers little-endian::

    "PFVC" | version u8 | width u16 | height u16 | fps u8 | ladder_len u8
    | ladder u16 * ladder_len | quant_step u16 (Q8.8) | frame_count u32
    | key_len u32 | key payload
    | (gran_index u8 | payload_len u24 | payload) * (frame_count - 1)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

MAGIC = b"PFVC"
VERSION = 1
MAX_PAYLOAD = (1 << 24) - 1
_FIXED = struct.Struct("<4sBHHBB")
_TAIL = struct.Struct("<HI")


class BitstreamError(ValueError):
    """Malformed container; ``offset`` and ``record`` locate the failure."""

    def __init__(self, message, offset=None, record=None):
        where = []
        if record is not None:
            where.append(f"record {record}")
        if offset is not None:
            where.append(f"offset {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.offset = offset
        self.record = record


class BadMagicError(BitstreamError):
    pass


class UnsupportedVersionError(BitstreamError):
    pass


class TruncatedStreamError(BitstreamError):
    pass


@dataclass(frozen=True)
class ContainerHeader:
    width: int
    height: int
    fps: int
    ladder: tuple[int, ...]
    quant_step_q88: int
    frame_count: int
    version: int = VERSION

    def __post_init__(self):
        object.__setattr__(self, "ladder", tuple(int(g) for g in self.ladder))
        self.validate()

    def validate(self):
        if self.version != VERSION:
            raise UnsupportedVersionError(f"unsupported version {self.version}")
        if not (0 < self.width <= 0xFFFF and 0 < self.height <= 0xFFFF):
            raise BitstreamError(f"dimensions {self.width}x{self.height} out of range")
        if not 0 < self.fps <= 0xFF:
            raise BitstreamError(f"fps {self.fps} must fit one byte and be positive")
        if not 0 < len(self.ladder) <= 0xFF:
            raise BitstreamError(f"ladder length {len(self.ladder)} out of range")
        if any(not 0 < g <= 0xFFFF for g in self.ladder) or any(
                b <= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise BitstreamError(f"ladder {self.ladder} is not strictly increasing")
        if not 0 < self.quant_step_q88 <= 0xFFFF:
            raise BitstreamError(f"quant step {self.quant_step_q88} out of Q8.8 range")
        if not 1 <= self.frame_count <= 0xFFFFFFFF:
            raise BitstreamError(f"frame_count {self.frame_count} must be >= 1")

    @property
    def size(self) -> int:
        return _FIXED.size + 2 * len(self.ladder) + _TAIL.size

    def pack(self) -> bytes:
        return (_FIXED.pack(MAGIC, self.version, self.width, self.height, self.fps,
                            len(self.ladder))
                + struct.pack(f"<{len(self.ladder)}H", *self.ladder)
                + _TAIL.pack(self.quant_step_q88, self.frame_count))


@dataclass(frozen=True)
class InterFrameRecord:
    gran_index: int
    payload: bytes

    @property
    def size(self) -> int:
        return 4 + len(self.payload)


def write_container(header: ContainerHeader, key_payload: bytes,
                    records: list[InterFrameRecord]) -> bytes:
    header.validate()
    if len(records) != header.frame_count - 1:
        raise BitstreamError(
            f"{len(records)} inter records for frame_count {header.frame_count}; "
            f"expected {header.frame_count - 1}")
    parts = [header.pack(), struct.pack("<I", len(key_payload)), bytes(key_payload)]
    for i, rec in enumerate(records):
        if not 0 <= rec.gran_index < len(header.ladder):
            raise BitstreamError(f"gran_index {rec.gran_index} outside ladder", record=i)
        if len(rec.payload) > MAX_PAYLOAD:
            raise BitstreamError(f"payload of {len(rec.payload)} bytes exceeds 24-bit length",
                                 record=i)
        n = len(rec.payload)
        parts.append(bytes((rec.gran_index, n & 0xFF, (n >> 8) & 0xFF, n >> 16)))
        parts.append(bytes(rec.payload))
    return b"".join(parts)


def read_container(data: bytes):
    """Parse and validate; returns ``(header, key_payload, records)``."""
    data = bytes(data)
    if len(data) < _FIXED.size:
        if not MAGIC.startswith(data[:4]):
            raise BadMagicError(f"bad magic {data[:4]!r}", offset=0)
        raise TruncatedStreamError("stream ends inside the header", offset=len(data))
    magic, version, width, height, fps, ladder_len = _FIXED.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}", offset=4)
    off = _FIXED.size
    need = off + 2 * ladder_len + _TAIL.size
    if len(data) < need:
        raise TruncatedStreamError("stream ends inside the header", offset=len(data))
    ladder = struct.unpack_from(f"<{ladder_len}H", data, off)
    off += 2 * ladder_len
    step, frame_count = _TAIL.unpack_from(data, off)
    off += _TAIL.size
    try:
        header = ContainerHeader(width, height, fps, ladder, step, frame_count, version)
    except BitstreamError as e:
        raise BitstreamError(str(e), offset=0) from None

    if len(data) < off + 4:
        raise TruncatedStreamError("stream ends before the key payload length", offset=off)
    (key_len,) = struct.unpack_from("<I", data, off)
    off += 4
    if len(data) < off + key_len:
        raise TruncatedStreamError(
            f"key payload declares {key_len} bytes, {len(data) - off} available", offset=off)
    key_payload = data[off:off + key_len]
    off += key_len

    records = []
    for i in range(frame_count - 1):
        if len(data) < off + 4:
            raise TruncatedStreamError("stream ends inside a record header", offset=off, record=i)
        gi = data[off]
        n = data[off + 1] | (data[off + 2] << 8) | (data[off + 3] << 16)
        if gi >= ladder_len:
            raise BitstreamError(f"gran_index {gi} out of range for a {ladder_len}-level ladder",
                                 offset=off, record=i)
        off += 4
        if len(data) < off + n:
            raise TruncatedStreamError(
                f"payload declares {n} bytes, {len(data) - off} available", offset=off, record=i)
        records.append(InterFrameRecord(gi, data[off:off + n]))
        off += n
    if off != len(data):
        raise BitstreamError(f"{len(data) - off} trailing bytes after the last record", offset=off)
    return header, key_payload, records


def container_size(header: ContainerHeader, key_payload: bytes, records) -> int:
    return header.size + 4 + len(key_payload) + sum(r.size for r in records)


def measure_bitrate(container, fps: float, frame_count: int) -> float:
    """Average kbps of a container (bytes or a byte count) over its frames."""
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    nbytes = container if isinstance(container, int) else len(container)
    return nbytes * 8 * fps / frame_count / 1000
