"""Empirical checks of the recurrence, concentration and variational inequalities.

Every per-sample quantity is exact (sector engine); randomness enters only
through the disorder average, so each verdict reflects a single noise source.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import beta as beta_dist

from .bounds import CONCENTRATION_CONST, BoundParams, make_partition, recurrence_penalty
from .disorder import QuenchedEstimate, SeedSpec, draw_sample, map_samples
from .model import (
    DisorderSample,
    Distribution,
    HierarchyParams,
    HypothesisError,
    Observables,
    ThermoParams,
)
from .sectors import build_halves, coupling_weight, restricted_partitions, root_observables

#: A shortfall larger than this many standard errors counts as a violation.
N_SIGMA = 3.0
TAIL_CONFIDENCE = 0.99
PROBE_SITE_STREAM = 1


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    WITHIN_3_STDERR = "holds-within-3-stderr"
    VIOLATED = "violated"


class EmptySectorError(RuntimeError):
    """Raised in strict mode when some interval holds no allowed spin value."""


@dataclass(frozen=True)
class InequalityReport:
    inequality: str
    params: dict
    lhs: QuenchedEstimate | float
    rhs: QuenchedEstimate | float
    slack: float
    verdict: Verdict
    n_samples: int
    seed: dict | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def side(v):
            return v.to_dict() if isinstance(v, QuenchedEstimate) else float(v)

        return {
            "inequality": self.inequality,
            "params": self.params,
            "lhs": side(self.lhs),
            "rhs": side(self.rhs),
            "slack": float(self.slack),
            "verdict": self.verdict.value,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "extra": self.extra,
        }


@dataclass(frozen=True)
class LogRatioStat:
    k: int
    g_k: float
    lipschitz_constant: float


class SplitQuantities(NamedTuple):
    root: Observables
    left: Observables
    right: Observables
    log_z1: np.ndarray
    log_z2: np.ndarray


def _verdict(slack: float, stderr: float) -> Verdict:
    if slack >= 0:
        return Verdict.HOLDS
    if slack >= -N_SIGMA * stderr:
        return Verdict.WITHIN_3_STDERR
    return Verdict.VIOLATED


def _params(p: HierarchyParams, t: ThermoParams, bp: BoundParams | None = None) -> dict:
    out = {"alpha": p.alpha, "N": p.depth, "beta": t.beta, "h": t.h, "dist": t.dist.value}
    if bp is not None:
        out.update(c=bp.c, d=bp.d)
    return out


def _seed(s: SeedSpec) -> dict:
    return {"seed": s.seed, "stream": s.stream}


def lipschitz_constant(p: HierarchyParams, t: ThermoParams) -> float:
    """``L = beta h 2**(N/2)``."""
    return t.beta * t.h * 2.0 ** (p.depth / 2)


def split_quantities(p: HierarchyParams, t: ThermoParams, bp: BoundParams, d: DisorderSample) -> SplitQuantities:
    """Observables of both halves and the root, plus restricted partitions of each half."""
    left, right, root = build_halves(p, t, d)
    part = make_partition(p, t, bp, p.depth)
    vN = coupling_weight(p, t, p.depth)
    return SplitQuantities(
        root_observables(root),
        root_observables(left),
        root_observables(right),
        restricted_partitions(left, part, vN),
        restricted_partitions(right, part, vN),
    )


def _ratios(log_z1: np.ndarray, log_z2: np.ndarray, strict: bool) -> tuple[np.ndarray, np.ndarray]:
    usable = np.isfinite(log_z1) & np.isfinite(log_z2)
    if strict and not usable.all():
        raise EmptySectorError(f"intervals {np.flatnonzero(~usable).tolist()} have empty sectors")
    ks = np.flatnonzero(usable)
    return ks, log_z1[ks] - log_z2[ks]


def log_ratios(p: HierarchyParams, t: ThermoParams, bp: BoundParams, d: DisorderSample,
               strict: bool = False) -> list[LogRatioStat]:
    """``g_k = log(Z_k1 / Z_k2)`` for every interval with both sectors populated."""
    q = split_quantities(p, t, bp, d)
    ks, g = _ratios(q.log_z1, q.log_z2, strict)
    L = lipschitz_constant(p, t)
    return [LogRatioStat(int(k), float(v), L) for k, v in zip(ks, g)]


def max_log_ratio(q: SplitQuantities, strict: bool = False) -> float | None:
    _, g = _ratios(q.log_z1, q.log_z2, strict)
    return float(g.max()) if g.size else None


def lemma5_rhs(p: HierarchyParams, t: ThermoParams, bp: BoundParams) -> float:
    """``beta h 2**(N/2) ln((1 + sqrt(c beta^d b_N)) (1 + sqrt(2 pi e)))``."""
    x = math.sqrt(bp.c * t.beta ** bp.d * p.b(p.depth))
    return lipschitz_constant(p, t) * math.log((1.0 + x) * CONCENTRATION_CONST)


def _split_samples(pN, t, bp, n_samples, s, jobs, strict):
    def one(j):
        q = split_quantities(pN, t, bp, draw_sample(t, pN, s, j))
        return q, max_log_ratio(q, strict)

    results = map_samples(one, n_samples, jobs)
    kept = [(q, m) for q, m in results if m is not None]
    return kept, len(results) - len(kept)


def _check_split(N: int, n_samples: int) -> None:
    if N < 1:
        raise HypothesisError("N >= 1", f"N={N}")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")


def _lemma3_report(pN, t, bp, s, kept, rejected) -> InequalityReport:
    N = pN.depth
    f_n = np.array([q.root.mean_S2 for q, _ in kept]) / 4.0 ** N
    f_prev = np.array([(q.left.mean_S2 + q.right.mean_S2) / 2 for q, _ in kept]) / 4.0 ** (N - 1)
    max_g = np.array([m for _, m in kept])
    base = recurrence_penalty(pN, t, bp, N)
    rhs_values = f_prev - (base + max_g / (t.beta * pN.b(N)))
    slack = QuenchedEstimate.from_values(f_n - rhs_values, "slack")
    return InequalityReport(
        inequality="lemma3",
        params=_params(pN, t, bp),
        lhs=QuenchedEstimate.from_values(f_n, "f_N"),
        rhs=QuenchedEstimate.from_values(rhs_values, "f_{N-1} - penalty"),
        slack=slack.mean,
        verdict=_verdict(slack.mean, slack.stderr),
        n_samples=len(kept),
        seed=_seed(s),
        extra={
            "slack_stderr": slack.stderr,
            "rejected": rejected,
            "f_prev": QuenchedEstimate.from_values(f_prev, "f_{N-1}").to_dict(),
            "max_log_ratio": QuenchedEstimate.from_values(max_g, "E[max_k g_k]").to_dict(),
            "deterministic_penalty": base,
            "rN": make_partition(pN, t, bp, N).rN,
        },
    )


def _lemma5_report(pN, t, bp, s, kept, rejected) -> InequalityReport:
    lhs = QuenchedEstimate.from_values((m for _, m in kept), "E[max_k g_k]")
    rhs = lemma5_rhs(pN, t, bp)
    slack = rhs - lhs.mean
    return InequalityReport(
        inequality="lemma5",
        params=_params(pN, t, bp),
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        verdict=_verdict(slack, lhs.stderr),
        n_samples=len(kept),
        seed=_seed(s),
        extra={"slack_stderr": lhs.stderr, "rejected": rejected, "lipschitz_constant": lipschitz_constant(pN, t)},
    )


def _check_lemma3_domain(t: ThermoParams) -> None:
    if not t.beta > 0:
        raise HypothesisError("beta > 0", f"beta={t.beta}")


def _check_lemma5_domain(t: ThermoParams) -> None:
    _check_lemma3_domain(t)
    if not t.h > 0:
        raise HypothesisError("h > 0", f"h={t.h}")


def lemma3_check(p: HierarchyParams, t: ThermoParams, bp: BoundParams, N: int, n_samples: int,
                 s: SeedSpec, jobs: int = 1, strict: bool = False) -> InequalityReport:
    """One-step recurrence ``f_N >= f_{N-1} - penalty``, estimated on shared disorder.

    Per sample, ``f_{N-1}`` averages both half-blocks (each is an independent
    depth ``N-1`` system).  The verdict uses the paired per-sample slack.
    """
    _check_split(N, n_samples)
    _check_lemma3_domain(t)
    pN = p.with_depth(N)
    kept, rejected = _split_samples(pN, t, bp, n_samples, s, jobs, strict)
    return _lemma3_report(pN, t, bp, s, kept, rejected)


def lemma5_check(p: HierarchyParams, t: ThermoParams, bp: BoundParams, N: int, n_samples: int,
                 s: SeedSpec, jobs: int = 1, strict: bool = False) -> InequalityReport:
    """Empirical ``E[max_k g_k]`` against its concentration upper bound."""
    _check_split(N, n_samples)
    _check_lemma5_domain(t)
    pN = p.with_depth(N)
    kept, rejected = _split_samples(pN, t, bp, n_samples, s, jobs, strict)
    return _lemma5_report(pN, t, bp, s, kept, rejected)


def recurrence_checks(p: HierarchyParams, t: ThermoParams, bp: BoundParams, N: int, n_samples: int,
                      s: SeedSpec, jobs: int = 1, strict: bool = False) -> tuple[InequalityReport, InequalityReport]:
    """:func:`lemma3_check` and :func:`lemma5_check` evaluated on one shared set of samples."""
    _check_split(N, n_samples)
    _check_lemma5_domain(t)
    pN = p.with_depth(N)
    kept, rejected = _split_samples(pN, t, bp, n_samples, s, jobs, strict)
    return _lemma3_report(pN, t, bp, s, kept, rejected), _lemma5_report(pN, t, bp, s, kept, rejected)


def log_ratio_gradient(p: HierarchyParams, t: ThermoParams, bp: BoundParams, d: DisorderSample,
                       site: int, step: float) -> dict[int, float]:
    """Central finite difference of every usable ``g_k`` in the field at ``site``."""
    fields = np.array(d.fields)
    plus, minus = fields.copy(), fields.copy()
    plus[site] += step
    minus[site] -= step
    gp = {r.k: r.g_k for r in log_ratios(p, t, bp, DisorderSample(plus))}
    gm = {r.k: r.g_k for r in log_ratios(p, t, bp, DisorderSample(minus))}
    return {k: (gp[k] - gm[k]) / (2 * step) for k in gp.keys() & gm.keys()}


def lipschitz_check(p: HierarchyParams, t: ThermoParams, bp: BoundParams, N: int, n_trials: int,
                    s: SeedSpec, step: float = 1e-4, jobs: int = 1) -> InequalityReport:
    """Largest finite-difference ``|dg_k/dh_i|`` over random probes, against ``beta h``.

    Each probe is one disorder point and one uniformly chosen site; all usable
    ``k`` are differentiated.
    """
    if t.dist is not Distribution.GAUSSIAN:
        raise HypothesisError("Gaussian fields", "finite differences need continuous fields")
    if N < 1:
        raise HypothesisError("N >= 1", f"N={N}")
    pN = p.with_depth(N)

    def probe(j):
        d = draw_sample(t, pN, s, j)
        site = int(s.rng(j, purpose=PROBE_SITE_STREAM).integers(pN.n_sites))
        grads = log_ratio_gradient(pN, t, bp, d, site, step)
        return max((abs(v) for v in grads.values()), default=0.0)

    observed = max(map_samples(probe, n_trials, jobs))
    bound = t.beta * t.h
    slack = bound * (1 + 1e-6) - observed
    return InequalityReport(
        inequality="lipschitz",
        params=_params(pN, t, bp),
        lhs=observed,
        rhs=bound,
        slack=slack,
        verdict=Verdict.HOLDS if slack >= 0 else Verdict.VIOLATED,
        n_samples=n_trials,
        seed=_seed(s),
        extra={"step": step, "relative_tolerance": 1e-6},
    )


def binomial_upper(successes: int, trials: int, confidence: float = TAIL_CONFIDENCE) -> float:
    """One-sided Clopper-Pearson upper confidence limit."""
    if successes >= trials:
        return 1.0
    return float(beta_dist.ppf(confidence, successes + 1, trials - successes))


def tail_check(p: HierarchyParams, t: ThermoParams, bp: BoundParams, N: int, n_samples: int,
               t_values: Sequence[float], s: SeedSpec = SeedSpec(0), jobs: int = 1) -> list[InequalityReport]:
    """Empirical survival of ``g_k - mean`` against ``exp(-t^2 / (2 L^2))`` at each ``t``.

    ``k`` is the interval with the largest mean restricted log-weight over the
    sample.  A point holds when the one-sided 99% binomial upper limit sits
    below the bound.
    """
    _check_split(N, n_samples)
    if not t.h > 0:
        raise HypothesisError("h > 0", f"h={t.h}")
    pN = p.with_depth(N)
    qs = map_samples(lambda j: split_quantities(pN, t, bp, draw_sample(t, pN, s, j)), n_samples, jobs)
    z1 = np.array([q.log_z1 for q in qs])
    z2 = np.array([q.log_z2 for q in qs])
    usable = np.all(np.isfinite(z1) & np.isfinite(z2), axis=0)
    weight = np.where(usable, (z1 + z2).mean(axis=0) / 2, -np.inf)
    k = int(np.argmax(weight))
    g = z1[:, k] - z2[:, k]
    dev = g - g.mean()
    L = lipschitz_constant(pN, t)
    reports = []
    for tv in t_values:
        count = int(np.count_nonzero(dev >= tv))
        empirical = count / n_samples
        upper = binomial_upper(count, n_samples)
        bound = math.exp(-tv * tv / (2 * L * L))
        se = math.sqrt(max(empirical * (1 - empirical), 1e-300) / n_samples)
        if upper <= bound:
            verdict = Verdict.HOLDS
        elif empirical - N_SIGMA * se <= bound:
            verdict = Verdict.WITHIN_3_STDERR
        else:
            verdict = Verdict.VIOLATED
        reports.append(InequalityReport(
            inequality="tail",
            params={**_params(pN, t, bp), "t": float(tv)},
            lhs=empirical,
            rhs=bound,
            slack=bound - upper,
            verdict=verdict,
            n_samples=n_samples,
            seed=_seed(s),
            extra={"k": k, "upper_confidence": upper, "confidence": TAIL_CONFIDENCE,
                   "count": count, "lipschitz_constant": L, "t_over_L": float(tv / L)},
        ))
    return reports


def gibbs_bogoliubov_check(p: HierarchyParams, t: ThermoParams, N: int, n_samples: int, s: SeedSpec,
                           jobs: int = 1) -> InequalityReport:
    """``P_N <= 2 P_{N-1} + v_N 4**N f_N``: full pressure against decoupled halves plus first order."""
    _check_split(N, n_samples)
    pN = p.with_depth(N)
    vN = coupling_weight(pN, t, N)

    def one(j):
        left, right, root = build_halves(pN, t, draw_sample(t, pN, s, j))
        lo, ro, full = root_observables(left), root_observables(right), root_observables(root)
        return full.logZ, lo.logZ + ro.logZ + vN * full.mean_S2

    pairs = np.array(map_samples(one, n_samples, jobs))
    lhs = QuenchedEstimate.from_values(pairs[:, 0], "P_N")
    rhs = QuenchedEstimate.from_values(pairs[:, 1], "2 P_{N-1} + v_N 4^N f_N")
    slack = QuenchedEstimate.from_values(pairs[:, 1] - pairs[:, 0], "slack")
    return InequalityReport(
        inequality="gb",
        params=_params(pN, t),
        lhs=lhs,
        rhs=rhs,
        slack=slack.mean,
        verdict=_verdict(slack.mean, slack.stderr),
        n_samples=n_samples,
        seed=_seed(s),
        extra={"slack_stderr": slack.stderr, "min_sample_slack": float(np.min(pairs[:, 1] - pairs[:, 0])), "v_N": vN},
    )
