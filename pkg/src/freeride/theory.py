"""Closed-form thresholds, KL utilities, lower-bound environments and
empirical checks of the deterministic sample-count floors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bandits import ContextualBandit
from .distributions import DiscreteFeature, PointMassFeature, canonical
from .errors import BadEta, BadGap, DegenerateOptimum, SupportMismatch

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ThresholdReport:
    name: str
    inputs: dict
    value: float

    def __str__(self):
        args = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.inputs.items())
        return f"{self.name}({args}) = {self.value:.9g}"


def gamma_threshold_stochastic(delta: float) -> float:
    """Smallest exploration rate for which mean-greedy free riding has constant regret."""
    if not 0.0 < delta <= 2.0:
        raise BadGap(f"gap {delta!r} outside (0, 2]")
    return 2.0 * LN2 / delta**2


def gamma_threshold_contextual(c: Sequence[float], delta: float) -> float:
    if not delta > 0.0:
        raise BadGap(f"gap {delta!r} must be positive")
    c = np.asarray(c, dtype=float)
    return 8.0 * float(c @ c) * LN2 / delta**2


def shift_constants(mu_star: float, mu_i: float) -> tuple[float, float, float]:
    """(keep probability, its log, mean after the shift) that lifts arm i just above mu_star."""
    if mu_star >= 1.0:
        raise DegenerateOptimum("the optimum already has mean 1; no arm can be shifted above it")
    if mu_i > mu_star:
        raise ValueError("mu_i must not exceed mu_star")
    p = (1.0 - mu_star) / (2.0 * (1.0 - mu_i))
    return p, math.log(p), (1.0 + mu_star) / 2.0


def ucb_count_floor(alpha: float, eta: float, k: int, t: float) -> float:
    if not eta > 2.0:
        raise BadEta(f"eta={eta!r} must exceed 2")
    return alpha * math.log(t) / (2.0 * eta**2 * k**2)


def kl_vectors(p, q) -> float:
    """KL(p || q) in nats for probability vectors on a common index set."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    on = p > 0
    if np.any(q[on] <= 0):
        raise SupportMismatch("P puts mass where Q has none")
    return float(np.sum(p[on] * np.log(p[on] / q[on])))


def kl_discrete(P, Q) -> float:
    """KL between two finite reward laws (anything with ``support()``)."""
    pv, pp = canonical(*P.support())
    qv, qp = canonical(*Q.support())
    values = np.union1d(pv, qv)
    a = np.zeros(len(values))
    b = np.zeros(len(values))
    a[np.searchsorted(values, pv)] = pp
    b[np.searchsorted(values, qv)] = qp
    return kl_vectors(a, b)


def bh_lower_bound(T: float) -> float:
    return (math.log(T / 12.0) + 1.0) / 2.0


def build_needcontexts_pair() -> tuple[ContextualBandit, ContextualBandit]:
    """Two one-dimensional environments that look identical to player 2 but
    swap the sign of player 1's second-arm mean."""
    zero = PointMassFeature((0.0,))
    a = ContextualBandit(
        arms=(zero, DiscreteFeature(((1.0,), (-1.0,)), (1 / 3, 2 / 3))),
        contexts=((1.0,), (1.0,)),
    )
    b = ContextualBandit(
        arms=(zero, DiscreteFeature(((1.0,), (-1.0,)), (2 / 3, 1 / 3))),
        contexts=((1.0,), (-1.0,)),
    )
    return a, b


NEEDREWARDS_CONTEXTS = ((math.sqrt(2) / 2, math.sqrt(2) / 2), (1.0, 0.0), (0.0, 1.0))


def build_needrewards_pair() -> tuple[ContextualBandit, ContextualBandit]:
    """Three players, four arms in the plane; the pair differs only in arm 1,
    whose sign player 1 cannot learn from the others' actions alone."""
    x = NEEDREWARDS_CONTEXTS

    def two_point(v, p_plus):
        return DiscreteFeature((v, tuple(-c for c in v)), (p_plus, 1.0 - p_plus))

    rest = (two_point(x[1], 2 / 3), two_point(x[2], 2 / 3), PointMassFeature((0.0, 0.0)))
    f = ContextualBandit(arms=(two_point(x[0], 2 / 3),) + rest, contexts=x)
    f_prime = ContextualBandit(arms=(two_point(x[0], 1 / 3),) + rest, contexts=x)
    return f, f_prime


@dataclass
class FloorReport:
    violations: int
    worst_margin: float  # min over checks of count - floor (negative on violation)
    checks: int
    per_seed: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def verify_ucb_count_floor(
    traces: Iterable[np.ndarray], alpha: float, eta: float, k: int, t0: int, T: int
) -> FloorReport:
    """Check min_i N_i^{t-1} >= ucb_count_floor(alpha, eta, k, t) for t in [t0, T].

    Each trace is a 0-based arm sequence of length >= T - 1.
    """
    t0 = max(int(t0), 2)
    t = np.arange(t0, T + 1)
    floor = alpha * np.log(t) / (2.0 * eta**2 * k**2)
    if not eta > 2.0:
        raise BadEta(f"eta={eta!r} must exceed 2")
    total, worst, per_seed = 0, math.inf, []
    for trace in traces:
        trace = np.asarray(trace)[: T - 1]
        # counts after rounds 1..T-1; row s-1 holds N^s
        n = np.cumsum(np.eye(k, dtype=np.int64)[trace], axis=0)
        before = n[t - 2].min(axis=1)  # N^{t-1}
        margin = before - floor
        bad = int(np.sum(margin < 0))
        per_seed.append(bad)
        total += bad
        worst = min(worst, float(margin.min()))
    return FloorReport(total, worst, len(per_seed) * len(t), per_seed)


def eetc_floor_start(k: int, gamma: float) -> int:
    """First epoch j0 whose length fits a full round of exploration."""
    from .policies import ceil_count

    j = 0
    while (1 << j) < k * ceil_count(gamma * (j + 2)):
        j += 1
    return j


def verify_eetc_floor(trace: np.ndarray, k: int, gamma: float) -> FloorReport:
    """Check N_i^T >= gamma * log2(T) for every T from the end of epoch j0 on."""
    trace = np.asarray(trace)
    T_all = np.arange(1, len(trace) + 1)
    start = 1 << (eetc_floor_start(k, gamma) + 1)
    n = np.cumsum(np.eye(k, dtype=np.int64)[trace], axis=0)
    sel = T_all >= start
    margin = n[sel].min(axis=1) - gamma * np.log2(T_all[sel])
    bad = int(np.sum(margin < 0))
    return FloorReport(bad, float(margin.min()) if margin.size else math.inf, int(sel.sum()), [bad])
