"""Frames, sequences, raw planar I/O and synthetic test material."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

MIN_SIZE = 16
SYNTH_KINDS = ("translating-texture", "moving-blob", "static")


@dataclass(frozen=True, eq=False)
class Frame:
    """An 8-bit luma raster with optional 2x2-subsampled chroma planes.

    ``luma`` is stored as an ``(height, width)`` uint8 array; ``chroma`` is
    either ``None`` or a pair of ``(height // 2, width // 2)`` uint8 arrays.
    """

    luma: np.ndarray
    chroma: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        luma = np.asarray(self.luma)
        if luma.ndim != 2:
            raise ValueError(f"luma must be 2-D, got shape {luma.shape}")
        h, w = luma.shape
        if w < MIN_SIZE or h < MIN_SIZE:
            raise ValueError(f"frame must be at least {MIN_SIZE}x{MIN_SIZE}, got {w}x{h}")
        if luma.dtype != np.uint8:
            if luma.size and (luma.min() < 0 or luma.max() > 255):
                raise ValueError("luma samples must lie in [0, 255]")
            luma = luma.astype(np.uint8)
        luma = np.ascontiguousarray(luma)
        luma.flags.writeable = False
        object.__setattr__(self, "luma", luma)
        if self.chroma is not None:
            planes = tuple(np.ascontiguousarray(p, dtype=np.uint8) for p in self.chroma)
            if len(planes) != 2 or any(p.shape != (h // 2, w // 2) for p in planes):
                raise ValueError("chroma must be two (height//2, width//2) planes")
            for p in planes:
                p.flags.writeable = False
            object.__setattr__(self, "chroma", planes)

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        if not np.array_equal(self.luma, other.luma):
            return False
        if (self.chroma is None) != (other.chroma is None):
            return False
        if self.chroma is None:
            return True
        return all(np.array_equal(a, b) for a, b in zip(self.chroma, other.chroma))

    __hash__ = None

    def to_bytes(self) -> bytes:
        out = self.luma.tobytes()
        if self.chroma is not None:
            out += self.chroma[0].tobytes() + self.chroma[1].tobytes()
        return out


@dataclass
class Sequence:
    frames: list[Frame]
    fps: float = 25.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a sequence needs at least one frame")
        if not self.fps > 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        w, h = self.frames[0].width, self.frames[0].height
        for i, f in enumerate(self.frames):
            if (f.width, f.height) != (w, h):
                raise ValueError(f"frame {i} is {f.width}x{f.height}, expected {w}x{h}")

    def __len__(self):
        return len(self.frames)

    def __getitem__(self, i):
        return self.frames[i]

    def __iter__(self):
        return iter(self.frames)

    def __eq__(self, other):
        if not isinstance(other, Sequence):
            return NotImplemented
        return (self.fps == other.fps and len(self) == len(other)
                and all(a == b for a, b in zip(self.frames, other.frames)))

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def luma_stack(self) -> np.ndarray:
        return np.stack([f.luma for f in self.frames])


def _check_dims(width, height):
    if width <= 0 or height <= 0:
        raise ValueError(f"zero or negative dimension: {width}x{height}")
    if width < MIN_SIZE or height < MIN_SIZE:
        raise ValueError(f"frame must be at least {MIN_SIZE}x{MIN_SIZE}, got {width}x{height}")


def load_raw_sequence(data: bytes, width: int, height: int, fps: float,
                      chroma: bool = False) -> Sequence:
    """Split a planar 8-bit stream into frames.

    Luma-only by default; with ``chroma=True`` each frame is Y followed by
    quarter-size U and V planes (4:2:0).
    """
    _check_dims(width, height)
    luma_size = width * height
    frame_size = luma_size + (2 * (height // 2) * (width // 2) if chroma else 0)
    if len(data) == 0 or len(data) % frame_size:
        raise ValueError(
            f"truncated stream: {len(data)} bytes is not a whole number of "
            f"{frame_size}-byte frames")
    buf = np.frombuffer(data, dtype=np.uint8)
    frames = []
    for start in range(0, len(buf), frame_size):
        y = buf[start:start + luma_size].reshape(height, width)
        uv = None
        if chroma:
            cs = (height // 2) * (width // 2)
            u = buf[start + luma_size:start + luma_size + cs].reshape(height // 2, width // 2)
            v = buf[start + luma_size + cs:start + frame_size].reshape(height // 2, width // 2)
            uv = (u.copy(), v.copy())
        frames.append(Frame(y.copy(), uv))
    return Sequence(frames, fps)


def save_raw_sequence(seq: Sequence) -> bytes:
    return b"".join(f.to_bytes() for f in seq.frames)


def read_sidecar(path) -> dict:
    desc = json.loads(Path(path).read_text())
    missing = {"width", "height", "fps"} - desc.keys()
    if missing:
        raise ValueError(f"sidecar {path} lacks {sorted(missing)}")
    return desc


def write_sidecar(path, seq: Sequence):
    desc = {"width": seq.width, "height": seq.height, "fps": seq.fps, "frames": len(seq),
            "chroma": seq[0].chroma is not None}
    Path(path).write_text(json.dumps(desc, indent=2) + "\n")


def read_sequence(raw_path, sidecar_path) -> Sequence:
    desc = read_sidecar(sidecar_path)
    seq = load_raw_sequence(Path(raw_path).read_bytes(), int(desc["width"]),
                            int(desc["height"]), float(desc["fps"]),
                            chroma=bool(desc.get("chroma", False)))
    if "frames" in desc and int(desc["frames"]) != len(seq):
        raise ValueError(f"sidecar declares {desc['frames']} frames, stream holds {len(seq)}")
    return seq


def write_sequence(raw_path, sidecar_path, seq: Sequence):
    Path(raw_path).write_bytes(save_raw_sequence(seq))
    write_sidecar(sidecar_path, seq)


def smooth_texture(width, height, rng, scale=4.0, contrast=0.35):
    """Periodic band-limited noise in [0, 255].

    ``scale`` is the Gaussian correlation length in pixels; wrap-around
    filtering keeps the texture seamless under cyclic shifts.
    """
    noise = rng.standard_normal((height, width))
    tex = ndimage.gaussian_filter(noise, scale, mode="wrap")
    tex /= tex.std() + 1e-12
    tex = 128.0 + 255.0 * contrast * tex / 3.0
    return np.clip(np.rint(tex), 0, 255).astype(np.uint8)


def synth_sequence(kind: str, n_frames: int, width: int = 256, height: int = 256,
                   seed: int = 0, fps: float = 25.0, texture_scale: float = 8.0) -> Sequence:
    """Deterministic synthetic test sequence.

    translating-texture
        a fixed random texture moving right by one pixel per frame with
        wrap-around, so frame ``t`` is ``np.roll(frame0, t, axis=1)``.
    moving-blob
        a Gaussian bump on a flat background following a straight line.
    static
        frame 0 of a random texture, repeated.
    """
    if kind not in SYNTH_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; expected one of {SYNTH_KINDS}")
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    _check_dims(width, height)
    rng = np.random.default_rng(seed)

    if kind == "translating-texture":
        tex = smooth_texture(width, height, rng, scale=texture_scale)
        frames = [Frame(np.roll(tex, t, axis=1)) for t in range(n_frames)]
    elif kind == "static":
        tex = smooth_texture(width, height, rng, scale=texture_scale)
        frames = [Frame(tex)] * n_frames
    else:
        x0, y0 = rng.uniform(0.25, 0.75, size=2) * (width, height)
        vx, vy = rng.uniform(-1.5, 1.5, size=2)
        sigma = rng.uniform(0.06, 0.12) * min(width, height)
        amp = rng.uniform(80, 120)
        yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
        frames = []
        for t in range(n_frames):
            cx, cy = x0 + vx * t, y0 + vy * t
            bump = amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma ** 2))
            frames.append(Frame(np.clip(np.rint(64.0 + bump), 0, 255).astype(np.uint8)))
    return Sequence(frames, fps, meta={"kind": kind, "seed": seed})
