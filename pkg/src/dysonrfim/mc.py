"""Single-spin-flip Metropolis sampler with cached block magnetizations.

The cache keeps one total spin per dyadic block per level, so the energy
change of a flip costs ``O(N)`` and a sweep ``O(N 2**N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .disorder import SeedSpec
from .model import DisorderSample, HierarchyParams, ThermoParams, as_spins, hamiltonian_energy

MC_STREAM = 2
SWEEP_CHUNK = 1024


def _level_offsets(depth: int) -> np.ndarray:
    sizes = [1 << (depth - n) for n in range(1, depth + 1)]
    return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)


@dataclass
class BlockMagCache:
    """Spin vector plus the total spin of every block at levels ``1..N`` (flattened)."""

    spins: np.ndarray
    blocks: np.ndarray
    offsets: np.ndarray

    @classmethod
    def from_spins(cls, spins) -> "BlockMagCache":
        s = as_spins(spins).copy()
        depth = s.size.bit_length() - 1
        if s.size != 1 << depth:
            raise ValueError("spin vector length must be a power of two")
        offsets = _level_offsets(depth)
        return cls(s, cls._block_sums(s, depth), offsets)

    @staticmethod
    def _block_sums(spins: np.ndarray, depth: int) -> np.ndarray:
        parts = [spins.reshape(-1, 1 << n).sum(axis=1) for n in range(1, depth + 1)]
        return np.concatenate(parts).astype(np.int64) if parts else np.zeros(0, dtype=np.int64)

    @property
    def depth(self) -> int:
        return self.spins.size.bit_length() - 1

    def level(self, n: int) -> np.ndarray:
        return self.blocks[self.offsets[n - 1]:self.offsets[n]]

    def total(self) -> int:
        return int(self.blocks[-1]) if self.depth else int(self.spins[0])

    def rebuilt(self) -> "BlockMagCache":
        return BlockMagCache.from_spins(self.spins)

    def is_coherent(self) -> bool:
        return bool(np.array_equal(self.blocks, self._block_sums(self.spins, self.depth)))

    def flip(self, site: int) -> None:
        s = self.spins[site]
        self.spins[site] = -s
        for n in range(1, self.depth + 1):
            self.blocks[self.offsets[n - 1] + (site >> n)] -= 2 * s


def _level_couplings(p: HierarchyParams) -> np.ndarray:
    return np.array([p.coupling(n) for n in range(1, p.depth + 1)], dtype=np.float64)


@njit(cache=True, nogil=True)
def _delta(spins, blocks, offsets, couplings, local_field, i):
    s = spins[i]
    de = 2.0 * local_field[i] * s
    for n in range(1, couplings.size + 1):
        b = blocks[offsets[n - 1] + (i >> n)]
        nb = b - 2 * s
        de += couplings[n - 1] * (b * b - nb * nb)
    return de


@njit(cache=True, nogil=True)
def _run_sweeps(spins, blocks, offsets, couplings, local_field, beta, sites, uniforms, totals):
    n_sweeps, n_sites = sites.shape
    depth = couplings.size
    accepted = 0
    de_sum = 0.0
    total = 0
    for i in range(n_sites):
        total += spins[i]
    for sweep in range(n_sweeps):
        for step in range(n_sites):
            i = sites[sweep, step]
            de = _delta(spins, blocks, offsets, couplings, local_field, i)
            if de <= 0.0 or uniforms[sweep, step] < np.exp(-beta * de):
                s = spins[i]
                spins[i] = -s
                for n in range(1, depth + 1):
                    blocks[offsets[n - 1] + (i >> n)] -= 2 * s
                total -= 2 * s
                accepted += 1
                de_sum += de
        totals[sweep] = total
    return accepted, de_sum


def flip_delta(cache: BlockMagCache, p: HierarchyParams, t: ThermoParams, d: DisorderSample, site: int) -> float:
    """Energy change from flipping ``site``, read off the cached block totals."""
    if not 0 <= site < p.n_sites:
        raise IndexError(f"site {site} outside 0..{p.n_sites - 1}")
    return float(_delta(cache.spins, cache.blocks, cache.offsets, _level_couplings(p), t.h * d.fields, site))


class MetropolisChain:
    """One Markov chain for a fixed disorder sample; strictly sequential."""

    def __init__(self, p: HierarchyParams, t: ThermoParams, d: DisorderSample, rng: np.random.Generator, spins=None):
        self.p, self.t, self.d = p, t, d
        self.rng = rng
        if spins is None:
            spins = 2 * rng.integers(0, 2, size=p.n_sites) - 1
        self.cache = BlockMagCache.from_spins(spins)
        if self.cache.spins.size != p.n_sites:
            raise ValueError("initial spins do not match the system size")
        self.energy = hamiltonian_energy(p, t, d, self.cache.spins)
        self.attempts = 0
        self.accepted = 0
        self._couplings = _level_couplings(p)
        self._local_field = t.h * np.asarray(d.fields)

    def sweep(self, n_sweeps: int = 1) -> np.ndarray:
        """Run ``n_sweeps`` sweeps of ``2**N`` random-site attempts; return the total spin after each."""
        totals = np.empty(n_sweeps, dtype=np.int64)
        n = self.p.n_sites
        for start in range(0, n_sweeps, SWEEP_CHUNK):
            m = min(SWEEP_CHUNK, n_sweeps - start)
            sites = self.rng.integers(0, n, size=(m, n))
            uniforms = self.rng.random((m, n))
            acc, de = _run_sweeps(self.cache.spins, self.cache.blocks, self.cache.offsets, self._couplings,
                                  self._local_field, self.t.beta, sites, uniforms, totals[start:start + m])
            self.accepted += acc
            self.attempts += m * n
            self.energy += de
        return totals

    @property
    def acceptance(self) -> float:
        return self.accepted / self.attempts if self.attempts else float("nan")


def binning_error(x, min_bins: int = 32, plateau_rtol: float = 0.05) -> tuple[float, float]:
    """Standard error of the mean of a correlated series by bin-size doubling.

    Doubling stops when the estimate changes by less than ``plateau_rtol`` or
    fewer than ``min_bins`` bins remain; the largest estimate seen is
    returned with the implied integrated autocorrelation time.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        return 0.0, 0.5
    naive = x.std(ddof=1) / math.sqrt(x.size)
    best = naive
    prev = naive
    data = x
    while data.size // 2 >= min_bins:
        data = data[: data.size // 2 * 2].reshape(-1, 2).mean(axis=1)
        err = data.std(ddof=1) / math.sqrt(data.size)
        best = max(best, err)
        if prev > 0 and abs(err - prev) <= plateau_rtol * prev:
            break
        prev = err
    tau = 0.5 * (best / naive) ** 2 if naive > 0 else 0.5
    return float(best), float(tau)


@dataclass(frozen=True)
class MCResult:
    mean_S2: float
    stderr: float
    n_measurements: int
    acceptance: float
    tau_int: float
    energy: float


START_MODES = ("random", "aligned")


def metropolis_run(p: HierarchyParams, t: ThermoParams, d: DisorderSample, sweeps: int, burn_in: int,
                   s: SeedSpec, index: int = 0, start: str = "random") -> MCResult:
    """Thermal ``<S^2>`` estimate from one chain; ``sweeps`` includes the ``burn_in`` sweeps.

    ``start="aligned"`` begins from all spins up. Deep in the ordered phase a
    random start freezes into oppositely magnetized blocks that single flips
    cannot undo on any practical time scale; the aligned start avoids that.
    """
    if not sweeps > burn_in >= 0:
        raise ValueError("need sweeps > burn_in >= 0")
    if start not in START_MODES:
        raise ValueError(f"start must be one of {START_MODES}, got {start!r}")
    spins = np.ones(p.n_sites, dtype=np.int64) if start == "aligned" else None
    chain = MetropolisChain(p, t, d, s.rng(index, purpose=MC_STREAM), spins)
    chain.sweep(burn_in)
    totals = chain.sweep(sweeps - burn_in).astype(np.float64)
    sq = totals * totals
    err, tau = binning_error(sq)
    return MCResult(float(sq.mean()), err, int(sq.size), chain.acceptance, tau, chain.energy)
