import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import hull_brute_force
from pfvc.rate import (BandwidthTrace, CostEstimator, RdPoint, convex_hull_rd, read_rd_points,
                       select_granularity, simulate_channel, write_rd_points)

LADDER = (16, 64, 144, 256)


def _estimator(costs):
    est = CostEstimator()
    for g, b in costs.items():
        est.update(g, b)
    return est


def _synthetic_costs(n, base=(2000, 5000, 9000, 14000), jitter=0.05, seed=0):
    rng = np.random.default_rng(seed)
    return np.array(base)[None, :] * (1 + jitter * rng.standard_normal((n, 4)))


def test_select_examples():
    est = _estimator({16: 2000, 64: 5000, 144: 9000, 256: 14000})
    assert select_granularity(10_000, est, LADDER) == 144
    assert select_granularity(1000, est, LADDER) == 16
    assert select_granularity(1e9, est, LADDER) == 256


def test_select_probes_unseen_level():
    est = _estimator({16: 2000})
    assert select_granularity(10_000, est, LADDER) == 64
    assert select_granularity(10_000, CostEstimator(), LADDER) == 16


def test_ewma_update():
    est = CostEstimator(alpha=0.2)
    est.update(16, 1000)
    est.update(16, 2000)
    assert est.get(16) == pytest.approx(1200)
    with pytest.raises(ValueError):
        est.update(16, 0)


@settings(max_examples=100, deadline=None)
@given(costs=st.lists(st.floats(1, 1e5), min_size=4, max_size=4),
       known=st.lists(st.booleans(), min_size=4, max_size=4),
       b1=st.floats(0, 2e5), b2=st.floats(0, 2e5))
def test_select_monotone_in_budget(costs, known, b1, b2):
    est = _estimator({g: c for g, c, k in zip(LADDER, costs, known) if k})
    lo, hi = sorted((b1, b2))
    assert select_granularity(lo, est, LADDER) <= select_granularity(hi, est, LADDER)


def test_trace_parse_and_lookup():
    trace = BandwidthTrace.parse("# t kbps\n0 100\n5 50  # halved\n")
    assert trace.budget_at(0) == 100 and trace.budget_at(4.99) == 100 and trace.budget_at(5) == 50
    assert BandwidthTrace.parse(trace.dumps()) == trace
    with pytest.raises(ValueError):
        BandwidthTrace.parse("0 100\n0 50\n")
    with pytest.raises(ValueError):
        BandwidthTrace.parse("")
    with pytest.raises(ValueError):
        BandwidthTrace.parse("0 100 3\n")


def test_generous_trace_settles_at_finest():
    res = simulate_channel(_synthetic_costs(100), BandwidthTrace.constant(1e4), 25, LADDER)
    assert all(g == 256 for g in res.selections[5:])


def test_starved_trace_stays_coarsest():
    res = simulate_channel(_synthetic_costs(100), BandwidthTrace.constant(1), 25, LADDER)
    assert set(res.selections) == {16}


def test_step_trace_adapts_within_five_frames():
    costs = _synthetic_costs(250)
    trace = BandwidthTrace(((0, 300), (5, 150)))
    res = simulate_channel(costs, trace, 25, LADDER)
    step = 125
    before = max(res.selections[step - 25:step])
    after = res.selections[step + 5:]
    assert max(after) <= before and max(after) < 256
    assert all(b <= a for a, b in zip(res.selections[step + 5:], res.selections[step + 6:])) \
        or max(after) == min(after)


def test_simulation_deterministic_and_on_ladder():
    costs = {g: list(_synthetic_costs(60, seed=3)[:, i]) for i, g in enumerate(LADDER)}
    trace = BandwidthTrace(((0, 200), (1, 100), (1.5, 400)))
    a = simulate_channel(costs, trace, 25, LADDER)
    b = simulate_channel(costs, trace, 25, LADDER)
    assert a == b and set(a.selections) <= set(LADDER)


def test_simulation_input_errors():
    with pytest.raises(ValueError):
        simulate_channel(np.ones((5, 3)), BandwidthTrace.constant(10), 25, LADDER)
    with pytest.raises(ValueError):
        simulate_channel(np.ones((5, 4)), BandwidthTrace.constant(10), 0, LADDER)


def test_window_rates():
    res = simulate_channel(np.full((50, 4), 1000.0), BandwidthTrace.constant(1e3), 25, LADDER)
    assert res.window_kbps(0, 25) == [(25.0, 1e3), (25.0, 1e3)]


def _pts(pairs):
    return [RdPoint(r, q) for r, q in pairs]


def _rq(points):
    return [(p.rate_kbps, p.quality) for p in points]


def test_hull_hand_examples():
    assert _rq(convex_hull_rd(_pts([(1, 0.5), (2, 0.8), (3, 0.85)]))) == [(1, 0.5), (2, 0.8), (3, 0.85)]
    assert _rq(convex_hull_rd(_pts([(1, 0.5), (2, 0.4)]))) == [(1, 0.5)]
    assert _rq(convex_hull_rd(_pts([(1, 1), (2, 2), (3, 3)]))) == [(1, 1), (3, 3)]  # collinear
    assert _rq(convex_hull_rd(_pts([(2, 1), (2, 3), (1, 0)]))) == [(1, 0), (2, 3)]


def test_hull_rejects_empty_and_bad_rate():
    with pytest.raises(ValueError):
        convex_hull_rd([])
    with pytest.raises(ValueError):
        RdPoint(0, 1)


def _random_set(rng, integer):
    n = int(rng.integers(1, 25))
    if integer:
        return _pts(zip(rng.integers(1, 9, n).astype(float), rng.integers(0, 9, n).astype(float)))
    return _pts(zip(rng.uniform(1, 500, n), rng.uniform(10, 50, n)))


def _check_contract(hull, points):
    assert set(_rq(hull)) <= set(_rq(points))
    rates = [p.rate_kbps for p in hull]
    quals = [p.quality for p in hull]
    assert all(b > a for a, b in zip(rates, rates[1:]))
    assert all(b > a for a, b in zip(quals, quals[1:]))
    slopes = [(q2 - q1) / (r2 - r1) for r1, q1, r2, q2 in zip(rates, quals, rates[1:], quals[1:])]
    assert all(b < a for a, b in zip(slopes, slopes[1:]))


def test_hull_matches_exhaustive_oracle():
    rng = np.random.default_rng(2024)
    for i in range(300):
        points = _random_set(rng, integer=i % 2 == 0)
        hull = convex_hull_rd(points)
        assert _rq(hull) == hull_brute_force(_rq(points))
        _check_contract(hull, points)
        assert convex_hull_rd(hull) == hull


def test_rd_points_csv_roundtrip(tmp_path):
    pts = [RdPoint(1.5, 30.25, ("a",)), RdPoint(3.0, 32.0, ("b",))]
    write_rd_points(pts, tmp_path / "rd.csv")
    assert read_rd_points(tmp_path / "rd.csv") == pts
