import numpy as np
import pytest

from pfvc.entropy import CorruptBitstreamError
from pfvc.intra import KEY_QPS, code_key, decode_key, encode_key, payload_preset
from pfvc.media import Frame, synth_sequence
from pfvc.metrics import psnr


def _key(seed=0, w=64, h=48):
    return synth_sequence("translating-texture", 1, w, h, seed=seed)[0]


def test_raw_roundtrip_is_lossless():
    f = _key()
    payload = encode_key(f, None)
    assert payload_preset(payload) is None
    assert decode_key(payload, f.width, f.height) == f


def test_raw_roundtrip_with_chroma(rng):
    chroma = tuple(rng.integers(0, 256, (24, 32), dtype=np.uint8) for _ in range(2))
    f = Frame(rng.integers(0, 256, (48, 64), dtype=np.uint8), chroma)
    assert decode_key(encode_key(f, None), 64, 48) == f


def test_dct_presets_trade_size_for_quality():
    f = _key(4, 128, 96)
    sizes, quality = [], []
    for preset in range(len(KEY_QPS)):
        payload, decoded = code_key(f, preset)
        assert payload_preset(payload) == preset
        assert decode_key(payload, f.width, f.height) == decoded
        sizes.append(len(payload))
        quality.append(psnr(f, decoded))
    assert all(b < a for a, b in zip(sizes, sizes[1:]))
    assert all(b <= a for a, b in zip(quality, quality[1:]))
    assert sizes[0] < len(encode_key(f, None))


def test_odd_dimensions():
    f = _key(2, 37, 21)
    payload, decoded = code_key(f, 2)
    assert decoded.luma.shape == (21, 37)
    assert psnr(f, decoded) > 25


def test_bad_payloads():
    f = _key()
    with pytest.raises(CorruptBitstreamError):
        decode_key(b"JPEG....", 64, 48)
    with pytest.raises(CorruptBitstreamError):
        decode_key(encode_key(f, None)[:-1], 64, 48)
    with pytest.raises(ValueError):
        encode_key(f, len(KEY_QPS))
