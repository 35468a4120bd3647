"""Exact block-magnetization recursion in the log domain.

A :class:`SectorTable` at level ``n`` holds ``2**n + 1`` log-weights; entry
``k`` is the log of the (restricted) Boltzmann sum over all block
configurations with total spin ``S = -2**n + 2k``.  Two level ``n-1`` tables
merge by a log-domain convolution followed by the level-``n`` coupling
``beta * 2**(-alpha*n) * S**2``.  Building the root of a depth-``N`` system
costs ``O(4**N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import logsumexp

from .model import DisorderSample, HierarchyParams, Observables, ThermoParams


@dataclass(frozen=True)
class SectorTable:
    level: int
    logw: np.ndarray

    def __post_init__(self):
        arr = np.array(self.logw, dtype=np.float64)
        if arr.shape != ((1 << self.level) + 1,):
            raise ValueError(f"level-{self.level} table needs {(1 << self.level) + 1} entries, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "logw", arr)

    @property
    def spins(self) -> np.ndarray:
        """Total spin of each entry, ``-2**n, -2**n + 2, ..., 2**n``."""
        size = 1 << self.level
        return np.arange(-size, size + 1, 2, dtype=np.int64)

    def reversed(self) -> "SectorTable":
        return SectorTable(self.level, self.logw[::-1])


def coupling_weight(p: HierarchyParams, t: ThermoParams, n: int) -> float:
    """``v_n = beta * b_n / 2**(2n) = beta * 2**(-alpha*n)``."""
    return t.beta * p.coupling(n)


@njit(cache=True, nogil=True)
def _merge_rows(tables, vn):
    """Merge consecutive row pairs of ``tables``; returns (merged, pair iterations)."""
    n_rows, width = tables.shape
    out_width = 2 * width - 1
    half = (out_width - 1) // 2
    out = np.empty((n_rows // 2, out_width))
    work = 0
    for r in range(n_rows // 2):
        a = tables[2 * r]
        b = tables[2 * r + 1]
        for s in range(out_width):
            lo = max(0, s - width + 1)
            hi = min(s, width - 1)
            top = -np.inf
            for i in range(lo, hi + 1):
                v = a[i] + b[s - i]
                if v > top:
                    top = v
            if top == -np.inf:
                out[r, s] = -np.inf
            else:
                acc = 0.0
                for i in range(lo, hi + 1):
                    acc += np.exp(a[i] + b[s - i] - top)
                spin = 2 * (s - half)
                out[r, s] = top + np.log(acc) + vn * spin * spin
            work += hi - lo + 1
    return out, work


def _leaf_rows(t: ThermoParams, fields: np.ndarray) -> np.ndarray:
    x = t.beta * t.h * np.asarray(fields, dtype=np.float64)
    return np.stack([-x, x], axis=1)


def leaf_table(t: ThermoParams, field_value: float) -> SectorTable:
    x = t.beta * t.h * field_value
    return SectorTable(0, np.array([-x, x]))


def merge(p: HierarchyParams, t: ThermoParams, level: int, a: SectorTable, b: SectorTable) -> SectorTable:
    """Join two level ``level-1`` blocks into one level ``level`` block."""
    if level < 1 or a.level != level - 1 or b.level != level - 1:
        raise ValueError(f"cannot merge levels {a.level} and {b.level} into level {level}")
    out, _ = _merge_rows(np.stack([a.logw, b.logw]), coupling_weight(p, t, level))
    return SectorTable(level, out[0])


def _build_levels(p: HierarchyParams, t: ThermoParams, d: DisorderSample, stop: int):
    if len(d.fields) != p.n_sites:
        raise ValueError(f"expected {p.n_sites} fields for depth {p.depth}, got {len(d.fields)}")
    rows = _leaf_rows(t, d.fields)
    work = 0
    for n in range(1, stop + 1):
        rows, w = _merge_rows(rows, coupling_weight(p, t, n))
        work += w
    return rows, work


def build_root(p: HierarchyParams, t: ThermoParams, d: DisorderSample) -> SectorTable:
    rows, _ = _build_levels(p, t, d, p.depth)
    return SectorTable(p.depth, rows[0])


def build_root_counted(p: HierarchyParams, t: ThermoParams, d: DisorderSample) -> tuple[SectorTable, int]:
    """Like :func:`build_root` but also return the number of convolution pair iterations."""
    rows, work = _build_levels(p, t, d, p.depth)
    return SectorTable(p.depth, rows[0]), work


def build_halves(p: HierarchyParams, t: ThermoParams, d: DisorderSample) -> tuple[SectorTable, SectorTable, SectorTable]:
    """Return the left half, right half and root tables of a depth ``N >= 1`` system."""
    if p.depth < 1:
        raise ValueError("depth must be >= 1 to split into halves")
    rows, _ = _build_levels(p, t, d, p.depth - 1)
    left = SectorTable(p.depth - 1, rows[0])
    right = SectorTable(p.depth - 1, rows[1])
    return left, right, merge(p, t, p.depth, left, right)


def root_observables(root: SectorTable) -> Observables:
    top = root.logw.max()
    w = np.exp(root.logw - top)
    z = w.sum()
    s = root.spins.astype(np.float64)
    return Observables(
        logZ=float(top + math.log(z)),
        mean_S=float(np.dot(w, s) / z),
        mean_S2=float(np.dot(w, s * s) / z),
    )


def restricted_partitions(half: SectorTable, part, vN: float) -> np.ndarray:
    """Log restricted partition functions ``log Z_k`` of a half-block, one per interval.

    ``part`` is an :class:`~dysonrfim.bounds.IntervalPartition` for the parent
    level ``half.level + 1``; each half-block configuration carries the extra
    self-coupling ``exp(2 vN S**2)``.  Intervals holding no allowed spin give
    ``-inf``.
    """
    if part.N != half.level + 1:
        raise ValueError(f"partition is for level {part.N}, half-block has level {half.level}")
    s = half.spins
    shifted = half.logw + 2.0 * vN * s.astype(np.float64) ** 2
    k = part.index_of(s)
    out = np.full(part.rN, -np.inf)
    for j in np.unique(k):
        out[j] = float(logsumexp(shifted[k == j]))
    return out
