"""Model definitions and a brute-force oracle for the hierarchical random-field Ising model.

The system at depth ``N`` has ``2**N`` Ising spins.  Every dyadic block ``B`` of
``2**n`` consecutive spins (``1 <= n <= N``) carries the energy
``-2**(-alpha*n) * S_B**2`` where ``S_B`` is the block's total spin, and each
site feels a random field ``-h * h_i * sigma_i``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

#: Largest number of sites the enumeration oracle accepts.
MAX_BRUTE_FORCE_SITES = 20


class HypothesisError(ValueError):
    """A parameter violates a named hypothesis of a model, bound or check."""

    def __init__(self, hypothesis: str, detail: str = ""):
        self.hypothesis = hypothesis
        msg = f"hypothesis violated: {hypothesis}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class Distribution(str, enum.Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class HierarchyParams:
    """Lattice exponent ``alpha`` and depth ``N`` (the system has ``2**depth`` sites).

    ``alpha = math.inf`` is accepted as a decoupled surrogate in which every
    block coupling vanishes.
    """

    alpha: float
    depth: int

    def __post_init__(self):
        if not self.alpha > 1:
            raise HypothesisError("alpha > 1", f"alpha={self.alpha}")
        if int(self.depth) != self.depth or self.depth < 0:
            raise HypothesisError("depth >= 0 integer", f"depth={self.depth}")
        object.__setattr__(self, "depth", int(self.depth))

    @property
    def n_sites(self) -> int:
        return 1 << self.depth

    def b(self, n: int) -> float:
        """``b_n = 2**((2 - alpha) * n)``."""
        return 2.0 ** ((2.0 - self.alpha) * n)

    def coupling(self, n: int) -> float:
        """Level-``n`` block coupling ``2**(-alpha*n) = b_n / 2**(2n)``."""
        return 2.0 ** (-self.alpha * n)

    def with_depth(self, depth: int) -> "HierarchyParams":
        return HierarchyParams(self.alpha, depth)


@dataclass(frozen=True)
class ThermoParams:
    beta: float
    h: float
    dist: Distribution = Distribution.GAUSSIAN

    def __post_init__(self):
        if not self.beta >= 0:
            raise HypothesisError("beta >= 0", f"beta={self.beta}")
        if not self.h >= 0:
            raise HypothesisError("h >= 0", f"h={self.h}")
        object.__setattr__(self, "dist", Distribution(self.dist))


@dataclass(frozen=True)
class DisorderSample:
    """One realization of the ``2**N`` random fields, with its seed provenance."""

    fields: np.ndarray
    seed: int | None = None
    stream: int | None = None
    index: int | None = None

    def __post_init__(self):
        arr = np.array(self.fields, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0 or arr.size & (arr.size - 1):
            raise ValueError(f"field vector must have length 2**N, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "fields", arr)

    @property
    def depth(self) -> int:
        return self.fields.size.bit_length() - 1

    def negated(self) -> "DisorderSample":
        return DisorderSample(-self.fields, self.seed, self.stream, self.index)

    def half(self, which: int) -> "DisorderSample":
        """Fields of the left (``which=0``) or right (``which=1``) half-block."""
        m = self.fields.size // 2
        if m == 0:
            raise ValueError("a single site has no halves")
        return DisorderSample(self.fields[which * m:(which + 1) * m], self.seed, self.stream, self.index)


class Observables(NamedTuple):
    logZ: float
    mean_S: float
    mean_S2: float


def _check_lengths(p: HierarchyParams, *vectors: np.ndarray) -> None:
    for v in vectors:
        if len(v) != p.n_sites:
            raise ValueError(f"expected {p.n_sites} entries for depth {p.depth}, got {len(v)}")


def as_spins(spins) -> np.ndarray:
    s = np.asarray(spins)
    if s.ndim != 1 or not np.all(np.abs(s) == 1):
        raise ValueError("spins must be a 1-d vector of +-1 values")
    return s.astype(np.int64)


def hamiltonian_energy(p: HierarchyParams, t: ThermoParams, d: DisorderSample, spins) -> float:
    """Energy of one configuration from the unrolled block expansion."""
    s = as_spins(spins)
    _check_lengths(p, s, d.fields)
    energy = 0.0
    for n in range(1, p.depth + 1):
        block_sums = s.reshape(-1, 1 << n).sum(axis=1)
        energy -= p.coupling(n) * float(np.dot(block_sums, block_sums))
    return energy - t.h * float(np.dot(d.fields, s))


@lru_cache(maxsize=8)
def _all_configs(depth: int) -> np.ndarray:
    n = 1 << depth
    codes = np.arange(1 << n, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n, dtype=np.int64)) & 1
    configs = (2 * bits - 1).astype(np.float64)
    configs.flags.writeable = False
    return configs


@lru_cache(maxsize=32)
def _coupling_energies(alpha: float, depth: int) -> np.ndarray:
    configs = _all_configs(depth)
    energy = np.zeros(configs.shape[0])
    for n in range(1, depth + 1):
        block_sums = configs.reshape(configs.shape[0], -1, 1 << n).sum(axis=2)
        energy -= 2.0 ** (-alpha * n) * np.einsum("ij,ij->i", block_sums, block_sums)
    energy.flags.writeable = False
    return energy


def brute_force_observables(p: HierarchyParams, t: ThermoParams, d: DisorderSample) -> Observables:
    """Enumerate every configuration and return ``log Z``, ``<S>`` and ``<S^2>``."""
    if p.n_sites > MAX_BRUTE_FORCE_SITES:
        raise ValueError(
            f"brute-force enumeration refused: {p.n_sites} sites exceeds the "
            f"{MAX_BRUTE_FORCE_SITES}-site limit ({2 ** p.n_sites} configurations)"
        )
    _check_lengths(p, d.fields)
    configs = _all_configs(p.depth)
    energy = _coupling_energies(p.alpha, p.depth) - t.h * (configs @ d.fields)
    logw = -t.beta * energy
    top = logw.max()
    w = np.exp(logw - top)
    z = w.sum()
    total = configs.sum(axis=1)
    return Observables(
        logZ=float(top + math.log(z)),
        mean_S=float(np.dot(w, total) / z),
        mean_S2=float(np.dot(w, total * total) / z),
    )
