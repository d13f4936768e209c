import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfvc.token_codec import (PredictorError, PredictorState, QuantConfig, ResidualSymbols,
                              decode_frame, encode_frame, init_state, snap_step)
from pfvc.tokenizer import DEFAULT_LADDER, TokenVector


def _key(values):
    return TokenVector(256, values)


def test_init_state_copies_key():
    assert not init_state(_key(np.zeros(256))).ref_coeffs.any()
    keys = np.arange(1, 257, dtype=float)
    state = init_state(_key(keys))
    assert np.array_equal(state.ref_coeffs, keys) and state.initialized
    keys[0] = -5  # the state holds its own copy
    assert state.ref_coeffs[0] == 1


def test_init_needs_full_key():
    with pytest.raises(PredictorError):
        init_state(TokenVector(64, np.zeros(64)))


def test_uninitialized_state_rejected():
    with pytest.raises(PredictorError):
        encode_frame(TokenVector(16, np.zeros(16)), PredictorState(), QuantConfig())
    with pytest.raises(PredictorError):
        decode_frame(ResidualSymbols(16, np.zeros(16)), PredictorState(), QuantConfig())


def test_prediction_hit_gives_zero_symbols(rng):
    state = init_state(_key(rng.random(256)))
    syms, new = encode_frame(TokenVector(64, state.ref_coeffs[:64]), state, QuantConfig())
    assert not syms.symbols.any()
    assert new == state


def test_hand_computed_symbol():
    state = init_state(_key(np.zeros(256)))
    tokens = TokenVector(16, np.r_[0.74, np.zeros(15)])
    syms, new = encode_frame(tokens, state, QuantConfig(0.5))
    assert syms.symbols[0] == 1
    assert new.ref_coeffs[0] == 0.5


def test_half_rounds_up():
    state = init_state(_key(np.zeros(256)))
    syms, _ = encode_frame(TokenVector(16, np.r_[0.125, -0.125, np.zeros(14)]), state,
                           QuantConfig(0.25))
    assert list(syms.symbols[:2]) == [1, 0]


def test_zero_symbols_decode_to_prediction(rng):
    state = init_state(_key(rng.random(256)))
    tokens, new = decode_frame(ResidualSymbols(144, np.zeros(144, int)), state, QuantConfig())
    assert np.array_equal(tokens.coeffs, state.ref_coeffs[:144])
    assert new == state


def test_repeated_frame_states_match(rng):
    q = QuantConfig(0.25)
    enc = dec = init_state(_key(rng.random(256) * 4))
    frame = TokenVector(256, rng.random(256) * 4)
    for _ in range(2):
        syms, enc = encode_frame(frame, enc, q)
        _, dec = decode_frame(syms, dec, q)
        assert enc == dec


def test_quantization_error_bound(rng):
    q = QuantConfig(0.25)
    state = init_state(_key(np.zeros(256)))
    tokens = TokenVector(256, rng.uniform(-20, 20, 256))
    syms, enc = encode_frame(tokens, state, q)
    rec, _ = decode_frame(syms, state, q)
    assert np.all(np.abs(rec.coeffs - tokens.coeffs) <= q.step / 2 + 1e-12)


def test_granularity_switch_holds_upper_coefficients(rng):
    q = QuantConfig()
    state = init_state(_key(rng.random(256)))
    _, new = encode_frame(TokenVector(16, rng.random(16) + 3), state, q)
    assert np.array_equal(new.ref_coeffs[16:], state.ref_coeffs[16:])
    assert not np.array_equal(new.ref_coeffs[:16], state.ref_coeffs[:16])


def test_inputs_not_mutated(rng):
    state = init_state(_key(rng.random(256)))
    before = state.ref_coeffs.copy()
    encode_frame(TokenVector(64, rng.random(64)), state, QuantConfig())
    assert np.array_equal(state.ref_coeffs, before)


def test_step_is_q88():
    assert snap_step(0.25) == 0.25
    assert snap_step(0.3) == 77 / 256
    assert QuantConfig(0.25).step_q88 == 64
    assert QuantConfig.from_q88(64).step == 0.25
    with pytest.raises(ValueError):
        snap_step(0.0001)
    with pytest.raises(ValueError):
        QuantConfig(0)


def test_state_equality_is_bitwise():
    a = PredictorState(np.zeros(256), True)
    b = PredictorState(np.full(256, -0.0), True)
    assert a != b


def test_long_random_stream_no_drift():
    rng = np.random.default_rng(77)
    q = QuantConfig(0.25)
    enc = dec = init_state(_key(rng.normal(size=256)))
    for _ in range(250):
        g = int(rng.choice(DEFAULT_LADDER))
        syms, enc = encode_frame(TokenVector(g, rng.normal(size=g) * 3), enc, q)
        tokens, dec = decode_frame(syms, dec, q)
        assert np.array_equal(tokens.coeffs, enc.ref_coeffs[:g])
    assert enc == dec


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), step_q=st.integers(8, 512),
       gs=st.lists(st.sampled_from(DEFAULT_LADDER), min_size=1, max_size=12))
def test_paired_runs_stay_in_lockstep(seed, step_q, gs):
    rng = np.random.default_rng(seed)
    q = QuantConfig.from_q88(step_q)
    enc = dec = init_state(_key(rng.normal(size=256)))
    for g in gs:
        syms, enc = encode_frame(TokenVector(g, rng.normal(size=g) * 5), enc, q)
        _, dec = decode_frame(ResidualSymbols(g, syms.symbols.copy()), dec, q)
        assert enc == dec
