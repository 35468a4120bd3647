import math

import numpy as np
import pytest

from dysonrfim.disorder import SeedSpec, draw_sample
from dysonrfim.mc import BlockMagCache, MetropolisChain, binning_error, flip_delta, metropolis_run
from dysonrfim.model import DisorderSample, HierarchyParams, ThermoParams, hamiltonian_energy
from dysonrfim.sectors import build_root, root_observables


def test_cache_from_spins():
    cache = BlockMagCache.from_spins([1, -1, 1, 1, -1, -1, 1, 1])
    assert list(cache.level(1)) == [0, 2, -2, 2]
    assert list(cache.level(2)) == [2, 0]
    assert list(cache.level(3)) == [2]
    assert cache.total() == 2 and cache.is_coherent()


def test_flip_delta_single_site():
    p, t = HierarchyParams(1.3, 0), ThermoParams(1.0, 0.7)
    d = DisorderSample([-0.4])
    cache = BlockMagCache.from_spins([1])
    assert flip_delta(cache, p, t, d, 0) == pytest.approx(2 * 0.7 * -0.4 * 1)


def test_flip_delta_matches_recomputation():
    rng = np.random.default_rng(1)
    p, t = HierarchyParams(1.3, 4), ThermoParams(1.0, 0.6)
    d = DisorderSample(rng.standard_normal(16))
    for _ in range(1000):
        spins = rng.choice([-1, 1], size=16)
        cache = BlockMagCache.from_spins(spins)
        i = int(rng.integers(16))
        before = hamiltonian_energy(p, t, d, cache.spins)
        de = flip_delta(cache, p, t, d, i)
        cache.flip(i)
        after = hamiltonian_energy(p, t, d, cache.spins)
        assert abs(de - (after - before)) < 1e-10
        assert de + flip_delta(cache, p, t, d, i) == pytest.approx(0, abs=1e-12)
        assert cache.is_coherent()


def test_flip_delta_bad_site():
    p = HierarchyParams(1.3, 2)
    with pytest.raises(IndexError):
        flip_delta(BlockMagCache.from_spins([1, 1, 1, 1]), p, ThermoParams(1, 0), DisorderSample(np.zeros(4)), 4)


def test_cache_coherence_and_energy_drift():
    p, t = HierarchyParams(1.2, 6), ThermoParams(0.4, 0.5)
    d = draw_sample(t, p, SeedSpec(3))
    chain = MetropolisChain(p, t, d, np.random.default_rng(0))
    chain.sweep(1600)  # 64 * 1600 > 1e5 attempts
    assert chain.attempts >= 100_000 and chain.accepted > 1000
    assert chain.cache.is_coherent()
    assert np.array_equal(chain.cache.blocks, chain.cache.rebuilt().blocks)
    assert abs(chain.energy - hamiltonian_energy(p, t, d, chain.cache.spins)) < 1e-8


def test_infinite_temperature_accepts_everything():
    p = HierarchyParams(1.3, 5)
    t = ThermoParams(0.0, 0.5)
    d = draw_sample(t, p, SeedSpec(1))
    r = metropolis_run(p, t, d, 20000, 100, SeedSpec(1))
    assert r.acceptance == 1.0
    assert abs(r.mean_S2 - 32) < 3 * r.stderr


def test_low_temperature_aligns():
    # deep quenches (beta ~ 20) can trap opposite half-blocks; beta = 2 is cold but mixes
    p = HierarchyParams(1.3, 3)
    t = ThermoParams(2.0, 0.0)
    d = DisorderSample(np.zeros(8))
    for seed in range(10):
        chain = MetropolisChain(p, t, d, np.random.default_rng(seed))
        totals = chain.sweep(2000)
        assert np.any(np.abs(totals) == 8)
        assert np.mean(np.abs(totals) == 8) > 0.9


def test_detailed_balance_two_sites():
    p, t = HierarchyParams(1.5, 1), ThermoParams(0.8, 0.6)
    d = DisorderSample([0.5, -0.9])
    states = [(a, b) for a in (-1, 1) for b in (-1, 1)]
    weights = np.array([math.exp(-t.beta * hamiltonian_energy(p, t, d, s)) for s in states])
    probs = weights / weights.sum()
    chain = MetropolisChain(p, t, d, np.random.default_rng(5))
    chain.sweep(100)
    visited = np.empty(40_000, dtype=int)
    for n in range(visited.size):
        chain.sweep(1)
        visited[n] = states.index(tuple(chain.cache.spins))
    for k, prob in enumerate(probs):
        indicator = (visited == k).astype(float)
        err, _ = binning_error(indicator)
        assert abs(indicator.mean() - prob) < 4 * err


def test_binning_white_noise():
    x = np.random.default_rng(0).standard_normal(100_000)
    err, tau = binning_error(x)
    assert err == pytest.approx(1 / math.sqrt(x.size), rel=0.15)
    assert tau == pytest.approx(0.5, rel=0.3)


def test_binning_correlated_series():
    rng = np.random.default_rng(1)
    phi, n = 0.9, 200_000
    x = np.empty(n)
    x[0] = 0
    noise = rng.standard_normal(n)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + noise[i]
    err, tau = binning_error(x)
    # AR(1): tau_int = (1 + phi) / (2 (1 - phi)) = 9.5
    assert tau == pytest.approx(9.5, rel=0.3)


def test_run_validates_sweeps():
    p, t = HierarchyParams(1.3, 2), ThermoParams(1, 0.1)
    with pytest.raises(ValueError):
        metropolis_run(p, t, DisorderSample(np.zeros(4)), 100, 100, SeedSpec(0))


def test_run_is_reproducible():
    p, t = HierarchyParams(1.3, 4), ThermoParams(0.5, 0.4)
    d = draw_sample(t, p, SeedSpec(2))
    assert metropolis_run(p, t, d, 3000, 300, SeedSpec(9)) == metropolis_run(p, t, d, 3000, 300, SeedSpec(9))


@pytest.mark.parametrize("beta", [0.15, 0.3])
def test_mc_agrees_with_exact_hot(beta):
    p, t = HierarchyParams(1.25, 6), ThermoParams(beta, 0.3)
    d = draw_sample(t, p, SeedSpec(77))
    exact = root_observables(build_root(p, t, d)).mean_S2
    r = metropolis_run(p, t, d, 60_000, 5_000, SeedSpec(4))
    assert abs(r.mean_S2 - exact) < 3 * r.stderr


def test_ordered_phase_needs_aligned_start():
    # from a random start the two half-blocks freeze with opposite signs
    p, t = HierarchyParams(1.25, 6), ThermoParams(1.0, 0.3)
    d = draw_sample(t, p, SeedSpec(909))
    exact = root_observables(build_root(p, t, d)).mean_S2
    hot = metropolis_run(p, t, d, 4000, 400, SeedSpec(909))
    cold = metropolis_run(p, t, d, 20_000, 2_000, SeedSpec(909), start="aligned")
    assert hot.mean_S2 < 0.5 * exact
    assert abs(cold.mean_S2 - exact) < 3 * cold.stderr


def test_run_rejects_unknown_start():
    p, t = HierarchyParams(1.3, 2), ThermoParams(1, 0.1)
    with pytest.raises(ValueError, match="start"):
        metropolis_run(p, t, DisorderSample(np.zeros(4)), 100, 10, SeedSpec(0), start="warm")
