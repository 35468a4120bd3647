import math

import numpy as np
import pytest

from dysonrfim.bounds import (
    CONCENTRATION_CONST,
    BoundParams,
    IntervalPartition,
    make_partition,
    partial_sum_bound,
    partition_size,
    recurrence_penalty,
    region_scan,
    series_sum,
    series_term,
    theorem1_bound,
)
from dysonrfim.model import HierarchyParams, HypothesisError, ThermoParams


def test_partition_size_bracket():
    assert partition_size(2.5) == 3
    assert partition_size(4.0) == 5
    assert partition_size(0.0) == 1


def test_make_partition_example():
    part = make_partition(HierarchyParams(1.2, 3), ThermoParams(1.7, 0.1), BoundParams(10, 0), 3)
    assert math.sqrt(10 * 2 ** 2.4) == pytest.approx(7.2650, abs=1e-4)
    assert part.rN == 8 and part.N == 3


def test_make_partition_bracket_random():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        alpha = rng.uniform(1.01, 3)
        c, beta, d, N = rng.uniform(0.01, 50), rng.uniform(0.01, 20), rng.uniform(0, 3), int(rng.integers(1, 20))
        part = make_partition(HierarchyParams(alpha, N), ThermoParams(beta, 0), BoundParams(c, d), N)
        x = math.sqrt(c * beta ** d * 2 ** ((2 - alpha) * N))
        assert x < part.rN <= 1 + x


def test_partition_geometry():
    part = IntervalPartition(4, 3)
    parts = part.parts
    assert parts[0][0] == -8 and parts[-1][1] == pytest.approx(8)
    widths = [r - l for l, r in parts]
    assert np.allclose(widths, 16 / 3)
    assert all(parts[i][1] == pytest.approx(parts[i + 1][0]) for i in range(2))
    # half-open parts, last closed
    assert part.index_of(-8) == 0
    assert part.index_of(8) == 2
    assert part.index_of(0) == 1
    with pytest.raises(ValueError):
        part.index_of(10)


def test_boundary_spin_goes_right():
    part = IntervalPartition(3, 2)  # parts [-4, 0), [0, 4]
    assert part.index_of(0) == 1 and part.index_of(-2) == 0


def test_pigeonhole_exhaustive():
    for N in range(1, 9):
        half = 1 << (N - 1)
        spins = np.arange(-half, half + 1)
        for rN in range(1, 65):
            part = IntervalPartition(N, rN)
            k = part.index_of(spins)
            limit = 4 ** N / rN ** 2
            for j in np.unique(k):
                members = spins[k == j]
                assert (members.max() - members.min()) ** 2 <= limit
            # membership agrees with the float interval description
            for s, kk in zip(spins, k):
                lo, hi = part.parts[kk]
                assert lo - 1e-9 <= s and (s < hi - 1e-12 or kk == rN - 1)


def test_theorem_hypotheses_named():
    with pytest.raises(HypothesisError, match="1 < alpha < 3/2"):
        theorem1_bound(1.5, 10, 1, 0)
    with pytest.raises(HypothesisError, match="sqrt"):
        theorem1_bound(1.2, 0.1, 1, 0)
    with pytest.raises(HypothesisError, match="beta > 0"):
        theorem1_bound(1.2, 10, 0, 0)
    with pytest.raises(HypothesisError, match="h >= 0"):
        theorem1_bound(1.2, 10, 1, -0.1)


def test_zero_temperature_corner():
    expected = 1 - 2 ** 1.1 / (10 * (4 - 2 ** 1.1))
    assert expected == pytest.approx(0.884535, abs=1e-6)
    assert theorem1_bound(1.1, 10, 1.0, 0.0, zero_temperature=True) == pytest.approx(expected, abs=1e-12)
    assert theorem1_bound(1.1, 10, math.inf, 0.0) == pytest.approx(expected, abs=1e-12)


def test_bound_monotone():
    for alpha in (1.1, 1.3, 1.49):
        hs = np.linspace(0, 0.05, 11)
        vals = [theorem1_bound(alpha, 10, 5.0, h) for h in hs]
        assert np.all(np.diff(vals) < 0)
        betas = np.linspace(0.5, 50, 11)
        vals = [theorem1_bound(alpha, 10, b, 0.01) for b in betas]
        assert np.all(np.diff(vals) > 0)


def test_series_term_hand_values():
    alpha, c, beta, h = 1.2, 10.0, 20.0, 0.02
    for p in (1, 2):
        b = 2 ** ((2 - alpha) * p)
        lg = math.log(2 * math.sqrt(c * b))
        hand = (beta / c + lg + beta * h * 2 ** (p / 2) * math.log(2 * math.sqrt(c * b) * (1 + math.sqrt(2 * math.pi * math.e)))) / (beta * b)
        assert series_term(alpha, c, beta, h, p) == pytest.approx(hand, rel=1e-13)
    assert series_term(alpha, c, beta, h, 1) == pytest.approx(0.17940282226308013, rel=1e-13)
    assert series_term(alpha, c, beta, h, 2) == pytest.approx(0.12579254547612295, rel=1e-13)


def test_series_zero_temperature_no_field_geometric():
    for alpha in (1.1, 1.3, 1.49):
        for p in (1, 5, 30):
            assert series_term(alpha, 10, math.inf, 0, p) == pytest.approx(1 / (10 * 2 ** ((2 - alpha) * p)), rel=1e-14)
        assert series_sum(alpha, 10, math.inf, 0) == pytest.approx(2 ** alpha / (10 * (4 - 2 ** alpha)), rel=1e-13)


@pytest.mark.parametrize("alpha", [1.05, 1.1, 1.3, 1.45, 1.49])
@pytest.mark.parametrize("beta", [0.5, 3.0, math.inf])
@pytest.mark.parametrize("h", [0.0, 1e-3, 0.02])
def test_series_matches_closed_form(alpha, beta, h):
    closed = theorem1_bound(alpha, 10.0, beta, h)
    numeric = 1 - series_sum(alpha, 10.0, beta, h)
    assert abs(numeric - closed) <= 1e-10 * max(1.0, abs(closed))


def test_convergence_rate_witness():
    for alpha in (1.1, 1.3, 1.49):
        scaled = [series_term(alpha, 10, 2.0, 0.1, p) * 2 ** (p * (1.5 - alpha)) for p in range(1, 400)]
        # bounded: grows at most linearly in the log factor, times the field prefactor
        assert max(scaled) < 0.1 * (math.log(2 * math.sqrt(10)) + math.log(CONCENTRATION_CONST) + 400) + 10


def test_partial_sums():
    args = (1.2, 10.0, 20.0, 0.02)
    assert partial_sum_bound(*args, 0) == 1.0
    vals = [partial_sum_bound(*args, N) for N in range(0, 60)]
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] >= theorem1_bound(*args) - 1e-12
    assert partial_sum_bound(*args, 8) == pytest.approx(0.39077089461136816, rel=1e-13)
    t1, t2 = 0.17940282226308013, 0.12579254547612295
    assert partial_sum_bound(*args, 2) == pytest.approx(1 - t1 - t2, rel=1e-14)


def test_remark_reduction():
    # h = 0, c = 1, d = 1: penalty reduces to (1 + ln(1 + sqrt(beta b_N))) / (beta b_N)
    bp = BoundParams(1.0, 1.0)
    for alpha in (1.1, 1.5, 1.9):
        for beta in (0.3, 1.0, 4.0):
            for N in range(1, 9):
                p = HierarchyParams(alpha, N)
                bN = p.b(N)
                ref = (1 + math.log(1 + math.sqrt(beta * bN))) / (beta * bN)
                assert recurrence_penalty(p, ThermoParams(beta, 0), bp, N) == pytest.approx(ref, rel=1e-14)


def test_region_corner_and_shape():
    hs = np.linspace(0, 0.01, 16)
    ib = np.linspace(0, 0.3, 16)
    vals, pos = region_scan(1.1, 10, hs, ib)
    assert vals[0, 0] == pytest.approx(0.884535, abs=1e-6) and pos[0, 0]
    assert not region_scan(1.1, 10, [1.0], [0.1])[1][0, 0]
    # down-left closed
    for i in range(16):
        for j in range(16):
            if pos[i, j]:
                assert pos[: i + 1, : j + 1].all()


def test_region_inclusion_between_exponents():
    hs = np.linspace(0, 0.002, 64)
    ib = np.linspace(0, 0.5, 64)
    _, low = region_scan(1.1, 10, hs, ib)
    _, high = region_scan(1.49, 10, hs, ib)
    assert high.any() and low.any()
    assert np.all(low[high])
    assert high.sum() < low.sum()


def test_region_rejects_unsorted():
    with pytest.raises(ValueError):
        region_scan(1.1, 10, [0.1, 0.0], [0.0])
