"""Numerical checks behind the ``verify`` subcommand."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bandits import StochasticBandit
from .distributions import Bernoulli, DiscretePoints, shift_toward_one
from .engine import MetricOptions, PlayerSpec, SimulationConfig, run_replicas
from .errors import UnknownSuite
from .theory import kl_discrete, kl_vectors, verify_ucb_count_floor

KL_TOL = 1e-12


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def random_discrete(rng: np.random.Generator, max_support: int = 6) -> DiscretePoints:
    m = int(rng.integers(1, max_support + 1))
    values = rng.uniform(-1.0, 1.0, size=m)
    if rng.random() < 0.25:
        values[0] = 1.0  # exercise merging with the shift's atom at 1
    probs = rng.dirichlet(np.ones(m))
    probs[-1] = 1.0 - probs[:-1].sum()
    return DiscretePoints(tuple(values), tuple(probs))


def check_shift_kl(n: int = 1000, seed: int = 0) -> Check:
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(n):
        d = random_discrete(rng)
        p = float(rng.uniform(1e-3, 1.0))
        worst = max(worst, kl_discrete(d, shift_toward_one(d, p)) - math.log(1.0 / p))
    return Check("shift KL bound", worst <= KL_TOL, f"{n} draws, max KL - ln(1/p) = {worst:.3e}")


def check_pair_kl() -> Check:
    v = kl_discrete(DiscretePoints((1.0, -1.0), (1 / 3, 2 / 3)), DiscretePoints((1.0, -1.0), (2 / 3, 1 / 3)))
    err = abs(v - math.log(2) / 3)
    return Check("two-point KL", err <= 1e-9, f"KL = {v:.12f}, |KL - ln2/3| = {err:.1e}")


def check_bretagnolle_huber(n: int = 1000, seed: int = 1) -> Check:
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(n):
        m = int(rng.integers(2, 7))
        p = rng.dirichlet(np.ones(m))
        q = rng.dirichlet(np.ones(m))
        a = rng.random(m) < 0.5
        slack = p[a].sum() + q[~a].sum() - 0.5 * math.exp(-kl_vectors(p, q))
        worst = min(worst, slack)
    return Check("Bretagnolle-Huber", worst >= 0.0, f"{n} triples, min P(A)+Q(A^c)-exp(-KL)/2 = {worst:.3e}")


def kl_suite() -> list[Check]:
    return [check_shift_kl(), check_pair_kl(), check_bretagnolle_huber()]


def ucb_traces(arms, alpha: float, horizon: int, seeds: int, root_seed: int = 0) -> list[np.ndarray]:
    cfg = SimulationConfig(
        StochasticBandit(tuple(arms)),
        (PlayerSpec("ucb", alpha=alpha),),
        horizon=horizon,
        replicas=seeds,
        root_seed=root_seed,
        metrics=MetricOptions(counterfactuals=False, record_history=True),
    )
    return [h.arms[0] for h in run_replicas(cfg).histories]


def ucb_floor_suite(alpha=2.0, eta=2.5, k=3, t0=1000, T=100_000, seeds=20) -> list[Check]:
    arms = [Bernoulli(i / 10) for i in range(k)]
    rep = verify_ucb_count_floor(ucb_traces(arms, alpha, T, seeds), alpha, eta, k, t0, T)
    return [
        Check(
            "UCB count floor",
            rep.passed,
            f"alpha={alpha}, eta={eta}, k={k}, t in [{t0}, {T}], {seeds} seeds: "
            f"{rep.violations} violations, worst margin {rep.worst_margin:.3f}",
        )
    ]


def coupled_traces(configs: dict, player: int = 1):
    """Run each config and return per-replica (arms, rewards) of ``player`` (0-based)."""
    out = {}
    for label, cfg in configs.items():
        cfg = replace(cfg, metrics=replace(cfg.metrics, record_history=True))
        hs = run_replicas(cfg).histories
        out[label] = [(h.arms[player], h.rewards[player]) for h in hs]
    return out


def coupling_suite(seed: int = 0, horizon: int = 10_000) -> list[Check]:
    from .presets import needcontexts_coupling

    configs = {k: replace(v, horizon=horizon) for k, v in needcontexts_coupling(seed).items()}
    tr = coupled_traces(configs)
    a, b = tr["A"], tr["B"]
    same = [np.array_equal(x[0], y[0]) and np.array_equal(x[1], y[1]) for x, y in zip(a, b)]
    return [
        Check(
            "player-2 coupling",
            all(same) and len(a) == len(b),
            f"{sum(same)}/{len(same)} replicas identical over T={horizon}",
        )
    ]


SUITES = {"kl": kl_suite, "ucb_floor": ucb_floor_suite, "coupling": coupling_suite}


def run_suite(name: str) -> list[Check]:
    if name == "all":
        return [c for s in SUITES.values() for c in s()]
    if name not in SUITES:
        raise UnknownSuite(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    return SUITES[name]()
