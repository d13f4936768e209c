import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ssim_direct
from pfvc.media import Frame, Sequence, synth_sequence
from pfvc.metrics import mse, psnr, sequence_quality, ssim, ssim_map


def _frame(a):
    return Frame(np.asarray(a, dtype=np.uint8))


def test_psnr_constant_offsets():
    a = np.full((32, 32), 100, np.uint8)
    assert psnr(a, a + 1) == pytest.approx(20 * math.log10(255), abs=1e-6)
    assert psnr(a, a + 1) == pytest.approx(48.1308, abs=1e-4)
    assert psnr(np.zeros((16, 16)), np.full((16, 16), 255)) == 0.0
    assert psnr(a, a) == math.inf


def test_mse_symmetric(rng):
    a, b = rng.integers(0, 256, (2, 20, 30))
    assert mse(a, b) == mse(b, a)


def test_ssim_identity_and_range(rng):
    a = rng.integers(0, 256, (40, 50)).astype(np.uint8)
    assert ssim(a, a) == 1.0
    b = rng.integers(0, 256, (40, 50)).astype(np.uint8)
    assert -1 <= ssim(a, b) < 1


def test_ssim_matches_windowed_oracle(rng):
    for shape in ((11, 11), (23, 17), (48, 40)):
        a = rng.integers(0, 256, shape).astype(np.uint8)
        b = np.clip(a + rng.normal(0, 20, shape), 0, 255).astype(np.uint8)
        assert ssim(a, b) == pytest.approx(ssim_direct(a, b), abs=1e-9)


def test_ssim_map_shape(rng):
    a = rng.integers(0, 256, (30, 20))
    assert ssim_map(a, a).shape == (20, 10)


def test_inverted_texture_scores_low():
    f = synth_sequence("translating-texture", 1, 64, 64, seed=3)[0]
    assert ssim(f, _frame(255 - f.luma)) < 0.3


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), h=st.integers(11, 30), w=st.integers(11, 30))
def test_ssim_symmetric(seed, h, w):
    rng = np.random.default_rng(seed)
    a, b = rng.integers(0, 256, (2, h, w))
    assert ssim(a, b) == ssim(b, a)


def test_errors():
    with pytest.raises(ValueError):
        ssim(np.zeros((10, 40)), np.zeros((10, 40)))
    with pytest.raises(ValueError):
        psnr(np.zeros((16, 16)), np.zeros((16, 17)))


def test_sequence_quality_pools_mse(rng):
    ref = Sequence([_frame(np.full((16, 16), 50)), _frame(np.full((16, 16), 50))], 25)
    test = Sequence([_frame(np.full((16, 16), 50)), _frame(np.full((16, 16), 52))], 25)
    p, s = sequence_quality(ref, test)
    assert p == pytest.approx(10 * math.log10(255 ** 2 / 2))
    assert sequence_quality(ref, test, skip_first=True)[0] == pytest.approx(psnr(ref[1], test[1]))
    with pytest.raises(ValueError):
        sequence_quality(ref, Sequence(ref.frames[:1], 25))
