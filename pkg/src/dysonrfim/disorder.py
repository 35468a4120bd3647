"""Seeded random-field draws and quenched (disorder) averages."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, TypeVar

import numpy as np

from .model import DisorderSample, Distribution, HierarchyParams, ThermoParams
from .sectors import build_root, root_observables

T = TypeVar("T")


@dataclass(frozen=True)
class SeedSpec:
    """Master seed and stream index; sample ``j`` depends only on ``(seed, stream, j)``."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.stream < 0:
            raise ValueError("stream index must be >= 0")

    def rng(self, index: int, purpose: int | None = None) -> np.random.Generator:
        """Generator for sample ``index``; ``purpose`` separates auxiliary streams from the fields."""
        key = [self.seed, self.stream, index] + ([] if purpose is None else [purpose])
        return np.random.default_rng(np.random.SeedSequence(key))


@dataclass(frozen=True)
class QuenchedEstimate:
    mean: float
    stderr: float
    n_samples: int
    tag: str = ""

    @classmethod
    def from_values(cls, values: Iterable[float], tag: str = "") -> "QuenchedEstimate":
        v = np.asarray(list(values), dtype=np.float64)
        if v.size < 1:
            raise ValueError("need at least one sample")
        # shifting by one sample makes identical values give exactly zero spread
        centered = v - v[0]
        stderr = float(centered.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        return cls(float(v[0] + centered.mean()), stderr, int(v.size), tag)

    def to_dict(self) -> dict:
        return {"tag": self.tag, "mean": self.mean, "stderr": self.stderr, "n_samples": self.n_samples}


def draw_sample(t: ThermoParams, p: HierarchyParams, s: SeedSpec, index: int = 0) -> DisorderSample:
    rng = s.rng(index)
    if t.dist is Distribution.BERNOULLI:
        fields = 2.0 * rng.integers(0, 2, size=p.n_sites) - 1.0
    else:
        fields = rng.standard_normal(p.n_sites)
    return DisorderSample(fields, seed=s.seed, stream=s.stream, index=index)


def map_samples(fn: Callable[[int], T], n_samples: int, jobs: int = 1) -> list[T]:
    """Evaluate ``fn(j)`` for ``j < n_samples``; result order never depends on ``jobs``."""
    if jobs <= 1:
        return [fn(j) for j in range(n_samples)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(n_samples)))


def _require_samples(n_samples: int) -> None:
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")


def sample_observables(p: HierarchyParams, t: ThermoParams, n_samples: int, s: SeedSpec, jobs: int = 1):
    """Exact per-sample observables for ``n_samples`` independent disorder draws."""

    def one(j):
        return root_observables(build_root(p, t, draw_sample(t, p, s, j)))

    return map_samples(one, n_samples, jobs)


def quenched_estimates(p: HierarchyParams, t: ThermoParams, n_samples: int, s: SeedSpec,
                       jobs: int = 1) -> tuple[QuenchedEstimate, QuenchedEstimate]:
    """``(f_N, P_N)`` from one shared set of disorder samples."""
    _require_samples(n_samples)
    obs = sample_observables(p, t, n_samples, s, jobs)
    scale = 4.0 ** p.depth
    f = QuenchedEstimate.from_values((o.mean_S2 / scale for o in obs), "f_N")
    pressure = QuenchedEstimate.from_values((o.logZ for o in obs), "P_N")
    return f, pressure


def estimate_fN(p: HierarchyParams, t: ThermoParams, n_samples: int, s: SeedSpec, jobs: int = 1) -> QuenchedEstimate:
    """Quenched average of ``<S^2> / 4**N``."""
    return quenched_estimates(p, t, n_samples, s, jobs)[0]


def quenched_pressure(p: HierarchyParams, t: ThermoParams, n_samples: int, s: SeedSpec, jobs: int = 1) -> QuenchedEstimate:
    """Quenched average of ``log Z``."""
    return quenched_estimates(p, t, n_samples, s, jobs)[1]


