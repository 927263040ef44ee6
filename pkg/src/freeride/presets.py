"""Named scenarios.  Each preset builds one or more labelled configs."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .bandits import ContextualBandit, StochasticBandit
from .distributions import Bernoulli, DiscreteFeature, PointMass, SphericalGaussian
from .engine import MetricOptions, PlayerSpec, SimulationConfig
from .errors import UnknownSuite
from .theory import (
    build_needcontexts_pair,
    build_needrewards_pair,
    gamma_threshold_contextual,
    gamma_threshold_stochastic,
)

GAMMA_MARGIN = 1.1  # run free riders 10% above their exploration threshold


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    build: Callable[..., dict]

    def configs(self, seed: int = 0, full_scale: bool = False) -> dict[str, SimulationConfig]:
        return self.build(seed=seed, full_scale=full_scale)


def fig1(seed: int = 0, full_scale: bool = False) -> dict:
    bandit = StochasticBandit(tuple(Bernoulli(i / 10) for i in range(10)))
    players = (
        PlayerSpec("count_greedy", target=2, visibility="actions_only"),
        PlayerSpec("ucb", alpha=2.0),
    )
    cfg = SimulationConfig(
        bandit, players, horizon=100_000, replicas=100, root_seed=seed,
        metrics=MetricOptions(checkpoints=(10_000, 50_000)),
    )
    return {"main": cfg}


def random_combination_instance(rng: np.random.Generator, n_players: int, n_arms: int, dim: int,
                  variance: float = 0.1, min_gap: float = 0.05, max_tries: int = 1000):
    """Random contextual instance whose first context is a known combination of the rest.

    Feature means and the other players' contexts are uniform on the cube;
    ``x_1 = sum_p c_p x_p`` with ``c`` uniform on the cube too.  All contexts are
    then scaled by one common factor (so ``c`` still works) to fit the unit ball,
    and all feature means by another so the longest has norm 1.  Instances whose
    player-1 gap is below ``min_gap`` are redrawn.
    """
    for _ in range(max_tries):
        means = rng.uniform(-1, 1, size=(n_arms, dim))
        means /= np.linalg.norm(means, axis=1).max()
        others = rng.uniform(-1, 1, size=(n_players - 1, dim))
        c = rng.uniform(-1, 1, size=n_players - 1)
        x = np.vstack([c @ others, others])
        x /= np.linalg.norm(x, axis=1).max()
        arms = tuple(SphericalGaussian(tuple(m), variance) for m in means)
        bandit = ContextualBandit(arms, tuple(map(tuple, x)))
        gaps = bandit.player_gaps()
        if not any(g.tied for g in gaps) and gaps[0].delta >= min_gap:
            return bandit, tuple(float(v) for v in c)
    raise RuntimeError("could not draw an instance with the requested gap")


def fig2_scaled(seed: int = 0, full_scale: bool = False) -> dict:
    if full_scale:
        n, k, d, T, R = 50, 30, 10, 100_000, 10
    else:
        n, k, d, T, R = 10, 10, 5, 100_000, 10
    bandit, c = random_combination_instance(np.random.default_rng(seed), n, k, d)
    delta = bandit.player_gaps()[0].delta
    gamma = GAMMA_MARGIN * gamma_threshold_contextual(c, delta)
    players = (PlayerSpec("ucb_mean_greedy", gamma=gamma, coefficients=c, visibility="full"),) + tuple(
        PlayerSpec("ucb", alpha=10.0) for _ in range(n - 1)
    )
    return {"main": SimulationConfig(bandit, players, horizon=T, replicas=R, root_seed=seed)}


def giveup_bandit() -> StochasticBandit:
    """Two deterministic arms: the opponent's give-up epochs are maximally costly to copy."""
    return StochasticBandit((PointMass(1.0), PointMass(-1.0)))


_TRIPLING_CHECKPOINTS = tuple(3**j for j in range(5, 9))


def countgreedy_fail(seed: int = 0, full_scale: bool = False) -> dict:
    players = (
        PlayerSpec("count_greedy", target=2, visibility="actions_only"),
        PlayerSpec("giveup_ucb", alpha=2.0),
    )
    cfg = SimulationConfig(
        giveup_bandit(), players, horizon=3**8, replicas=50, root_seed=seed,
        metrics=MetricOptions(checkpoints=_TRIPLING_CHECKPOINTS),
    )
    return {"main": cfg}


def samg_vs_giveup(seed: int = 0, full_scale: bool = False) -> dict:
    bandit = giveup_bandit()
    gamma = GAMMA_MARGIN * gamma_threshold_stochastic(bandit.player_gaps(1)[0].delta)
    players = (
        PlayerSpec("samg", target=2, gamma=gamma, visibility="actions_rewards"),
        PlayerSpec("giveup_ucb", alpha=2.0),
    )
    cfg = SimulationConfig(
        bandit, players, horizon=3**8, replicas=50, root_seed=seed,
        metrics=MetricOptions(checkpoints=_TRIPLING_CHECKPOINTS),
    )
    return {"main": cfg}


def needcontexts_coupling(seed: int = 0, full_scale: bool = False) -> dict:
    """Same seed, two environments; player 2 cannot tell them apart."""
    a, b = build_needcontexts_pair()
    players = (
        PlayerSpec("count_greedy", target=2, visibility="actions_only"),
        PlayerSpec("ucb", alpha=2.0),
    )
    base = SimulationConfig(
        a, players, horizon=10_000, replicas=20, root_seed=seed,
        metrics=MetricOptions(record_history=True),
    )
    return {"A": base, "B": replace(base, bandit=b)}


def needrewards(seed: int = 0, full_scale: bool = False) -> dict:
    """Players 2 and 3 run epoch explore-then-commit; an action-only free rider
    sees the same behaviour under both bandits but has different best arms."""
    f, f_prime = build_needrewards_pair()
    delta = min(g.delta for g in f.player_gaps()[1:])
    gamma = 2.0 / delta**2
    players = (
        PlayerSpec("count_greedy", target=2, visibility="actions_only"),
        PlayerSpec("eetc", gamma=gamma),
        PlayerSpec("eetc", gamma=gamma),
    )
    base = SimulationConfig(f, players, horizon=100_000, replicas=10, root_seed=seed)
    return {"F": base, "F_prime": replace(base, bandit=f_prime)}


def planar_instance(a: float = 0.95, b: float = 0.3, spread: float = 0.1,
                      best: float = 0.9, rest: float = -0.9, n_arms: int = 5) -> ContextualBandit:
    """Planar three-player instance with x_1 = (x_2 + x_3) / 2 and equal gaps for everyone.

    Arm features have mean ``(m, 0)`` so every player sees the same arm ranking and
    the same gaps; the second coordinate adds +-``spread`` noise.
    """
    def arm(m):
        return DiscreteFeature(((m, spread), (m, -spread)), (0.5, 0.5))

    arms = tuple(arm(rest) for _ in range(n_arms - 1)) + (arm(best),)
    return ContextualBandit(arms, ((a, 0.0), (a, b), (a, -b)))


def mean_greedy_contextual(seed: int = 0, full_scale: bool = False) -> dict:
    bandit = planar_instance()
    c = (0.5, 0.5)
    gamma = GAMMA_MARGIN * gamma_threshold_contextual(c, bandit.player_gaps()[0].delta)
    players = (
        PlayerSpec("ucb_mean_greedy", gamma=gamma, coefficients=c, visibility="full"),
        PlayerSpec("ucb", alpha=10.0),
        PlayerSpec("ucb", alpha=10.0),
    )
    cfg = SimulationConfig(
        bandit, players, horizon=100_000, replicas=20, root_seed=seed,
        metrics=MetricOptions(checkpoints=(50_000,)),
    )
    return {"main": cfg}


PRESETS = {
    p.name: p
    for p in (
        ExperimentPreset("fig1", "10 Bernoulli arms, 2-UCB player and a count-greedy free rider", fig1),
        ExperimentPreset("fig2_scaled", "random contextual instance, 10-UCB players and a mean-greedy free rider", fig2_scaled),
        ExperimentPreset("countgreedy_fail", "count-greedy free rider against a give-up UCB opponent", countgreedy_fail),
        ExperimentPreset("samg_vs_giveup", "sample-augmenting free rider against a give-up UCB opponent", samg_vs_giveup),
        ExperimentPreset("needcontexts_coupling", "two environments indistinguishable to player 2", needcontexts_coupling),
        ExperimentPreset("needrewards", "action-only free riding fails against explore-then-commit players", needrewards),
        ExperimentPreset("mean_greedy_contextual", "three-player contextual free riding with known coefficients", mean_greedy_contextual),
    )
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise UnknownSuite(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
