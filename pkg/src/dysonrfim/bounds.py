"""Rigorous lower bounds on the squared magnetization and the interval partition behind them.

The closed-form bound is

    1 - (1/c) A - h (B_1 ln 2 + A_h ln(2 sqrt(c) (1 + sqrt(2 pi e))))
      - (1/beta) (A ln(2 sqrt(c)) + B_0 ln 2)

with ``A = 2^a / (4 - 2^a)``, ``A_h = 2^a / (2^(3/2) - 2^a)``,
``B_0 = (2 - a) 2^(1+a) / (4 - 2^a)^2`` and
``B_1 = (2 - a) 2^(1/2+a) / (2^(3/2) - 2^a)^2``.  It is the complement of a
positive series ``sum_p t_p``; :func:`partial_sum_bound` truncates that series
at ``p = N`` and bounds ``f_N`` itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import HierarchyParams, HypothesisError, ThermoParams

LN2 = math.log(2.0)
#: ``1 + sqrt(2 pi e)``, the Gaussian-moment constant of the concentration step.
CONCENTRATION_CONST = 1.0 + math.sqrt(2.0 * math.pi * math.e)
#: Series summation stops once a term drops below this fraction of the running sum.
SERIES_RTOL = 1e-15


@dataclass(frozen=True)
class BoundParams:
    c: float
    d: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise HypothesisError("c > 0", f"c={self.c}")
        if not self.d >= 0:
            raise HypothesisError("d >= 0", f"d={self.d}")


@dataclass(frozen=True)
class IntervalPartition:
    """Equal-width split of ``[-2**(N-1), 2**(N-1)]`` into ``rN`` parts.

    Parts are half-open ``[left, right)`` except the last, which is closed.
    """

    N: int
    rN: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("partition level N must be >= 1")
        if self.rN < 1:
            raise ValueError("rN must be a positive integer")

    @property
    def half_width(self) -> int:
        return 1 << (self.N - 1)

    @property
    def width(self) -> float:
        return (1 << self.N) / self.rN

    @property
    def parts(self) -> list[tuple[float, float]]:
        lo = -self.half_width
        return [(lo + k * self.width, lo + (k + 1) * self.width) for k in range(self.rN)]

    def index_of(self, spin):
        """Part index of integer spin values, using exact integer arithmetic."""
        s = np.asarray(spin, dtype=np.int64)
        if np.any(np.abs(s) > self.half_width):
            raise ValueError(f"spin outside [-{self.half_width}, {self.half_width}]")
        k = np.minimum(((s + self.half_width) * self.rN) >> self.N, self.rN - 1)
        return int(k) if k.ndim == 0 else k


def partition_size(x: float) -> int:
    """Smallest integer strictly above ``x``, i.e. ``x < r <= 1 + x``."""
    return math.floor(x) + 1


def make_partition(p: HierarchyParams, t: ThermoParams, bp: BoundParams, level: int) -> IntervalPartition:
    if t.beta == 0 and bp.d != 0:
        raise HypothesisError("beta > 0 or d = 0", "beta**d is undefined for the requested split")
    x = math.sqrt(bp.c * t.beta ** bp.d * p.b(level))
    return IntervalPartition(level, partition_size(x))


def _check_theorem(alpha: float, c: float, beta: float, h: float) -> None:
    if not 1 < alpha < 1.5:
        raise HypothesisError("1 < alpha < 3/2", f"alpha={alpha}")
    if not c > 0:
        raise HypothesisError("c > 0", f"c={c}")
    if not 1 <= math.sqrt(c * 2.0 ** (2.0 - alpha)):
        raise HypothesisError("1 <= sqrt(c * 2^(2-alpha))", f"c={c}, alpha={alpha}")
    if not beta > 0:
        raise HypothesisError("beta > 0", f"beta={beta}")
    if not h >= 0:
        raise HypothesisError("h >= 0", f"h={h}")


def theorem1_bound(alpha: float, c: float, beta: float, h: float, zero_temperature: bool = False) -> float:
    """Closed-form lower bound on the long-range order parameter.

    ``zero_temperature=True`` (or ``beta=math.inf``) drops the ``1/beta`` block.
    """
    if zero_temperature:
        beta = math.inf
    _check_theorem(alpha, c, beta, h)
    ta = 2.0 ** alpha
    coupling = ta / (4.0 - ta)
    field = ta / (2.0 ** 1.5 - ta)
    field_log = (2.0 - alpha) * 2.0 ** (0.5 + alpha) / (2.0 ** 1.5 - ta) ** 2 * LN2
    thermal_log = (2.0 - alpha) * 2.0 ** (1.0 + alpha) / (4.0 - ta) ** 2 * LN2
    log_2sqrtc = math.log(2.0 * math.sqrt(c))
    value = 1.0 - coupling / c
    value -= h * (field_log + field * (log_2sqrtc + math.log(CONCENTRATION_CONST)))
    if math.isfinite(beta):
        value -= (coupling * log_2sqrtc + thermal_log) / beta
    return value


def series_term(alpha: float, c: float, beta: float, h: float, p: int) -> float:
    """Term ``t_p`` of the series whose complement is the bound (``d = 0``).

    ``b_p`` is never formed explicitly, so very large ``p`` stays finite.
    ``beta = math.inf`` gives the zero-temperature term.
    """
    _check_theorem(alpha, c, beta, h)
    if p < 1:
        raise ValueError("p must be >= 1")
    inv_b = 2.0 ** (-(2.0 - alpha) * p)
    log_term = math.log(2.0) + 0.5 * math.log(c) + 0.5 * (2.0 - alpha) * p * LN2
    value = inv_b / c + h * 2.0 ** ((alpha - 1.5) * p) * (log_term + math.log(CONCENTRATION_CONST))
    if math.isfinite(beta):
        value += inv_b * log_term / beta
    return value


def series_sum(alpha: float, c: float, beta: float, h: float, max_terms: int = 10_000_000) -> float:
    """Numerically summed ``sum_{p>=1} t_p``; stops when a term is negligible."""
    terms = []
    running = 0.0
    for p in range(1, max_terms + 1):
        term = series_term(alpha, c, beta, h, p)
        terms.append(term)
        running += term
        if term < SERIES_RTOL * running:
            break
    else:
        raise RuntimeError(f"series did not converge in {max_terms} terms")
    return math.fsum(terms)


def partial_sum_bound(alpha: float, c: float, beta: float, h: float, N: int) -> float:
    """``1 - sum_{p=1}^{N} t_p``, a rigorous lower bound on ``f_N``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    return 1.0 - math.fsum(series_term(alpha, c, beta, h, p) for p in range(1, N + 1))


def recurrence_penalty(p: HierarchyParams, t: ThermoParams, bp: BoundParams, N: int, max_log_ratio: float = 0.0) -> float:
    """Amount subtracted from ``f_{N-1}`` in the one-step recurrence inequality.

    ``(1/(beta b_N)) (1/(c beta^(d-1)) + ln(1 + sqrt(c beta^d b_N)) + E[max_k g_k])``
    """
    if not t.beta > 0:
        raise HypothesisError("beta > 0", f"beta={t.beta}")
    bN = p.b(N)
    inner = t.beta ** (1.0 - bp.d) / bp.c + math.log1p(math.sqrt(bp.c * t.beta ** bp.d * bN)) + max_log_ratio
    return inner / (t.beta * bN)


def region_scan(alpha: float, c: float, h_grid, invbeta_grid):
    """Evaluate the closed-form bound on a ``(h, 1/beta)`` grid.

    Returns ``(bounds, positive)`` arrays of shape ``(len(h_grid), len(invbeta_grid))``.
    ``1/beta = 0`` is evaluated at zero temperature.
    """
    h_grid = np.asarray(h_grid, dtype=np.float64)
    invbeta_grid = np.asarray(invbeta_grid, dtype=np.float64)
    for name, grid in (("h_grid", h_grid), ("invbeta_grid", invbeta_grid)):
        if grid.ndim != 1 or not np.all(np.isfinite(grid)) or np.any(np.diff(grid) < 0):
            raise ValueError(f"{name} must be finite and sorted ascending")
    if invbeta_grid.size and invbeta_grid[0] < 0:
        raise HypothesisError("beta > 0", "negative inverse temperature in grid")
    values = np.empty((h_grid.size, invbeta_grid.size))
    for i, h in enumerate(h_grid):
        for j, ib in enumerate(invbeta_grid):
            beta = math.inf if ib == 0 else 1.0 / ib
            values[i, j] = theorem1_bound(alpha, c, beta, float(h))
    return values, values > 0
