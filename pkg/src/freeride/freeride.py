"""Free-riding policies and what a free rider is allowed to see.

A free rider is always player 0.  Besides its own (arm, reward) stream it
reads an observation view of the other players, built by the engine and
gated by a :class:`Visibility` level.  The view answers three questions:

* ``counts(p)``: player ``p``'s per-arm pull counts so far (needs ACTIONS_ONLY)
* ``prefix_sums(p, s)``: sum of ``p``'s first ``min(s, N)`` rewards of each arm,
  in the order ``p`` observed them (needs ACTIONS_REWARDS)
* ``contexts``: every player's context vector (needs FULL)
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .policies import alpha_ucb_choose, ceil_count


class Visibility(enum.IntEnum):
    NONE = 0
    ACTIONS_ONLY = 1
    ACTIONS_REWARDS = 2
    FULL = 3

    @classmethod
    def parse(cls, name: str) -> "Visibility":
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise ValueError(f"unknown visibility level {name!r}") from None


@dataclass(frozen=True)
class History:
    """Per-player records for one replica; arms are 0-based, shape (players, rounds)."""

    arms: Optional[np.ndarray]
    rewards: Optional[np.ndarray]
    contexts: Optional[np.ndarray] = None
    table: Optional[np.ndarray] = None  # (players, rounds, arms) counterfactual rewards

    @property
    def empty(self) -> bool:
        return self.arms is None


def filter_history(h: History, level: Visibility) -> History:
    if level >= Visibility.FULL:
        return h
    if level == Visibility.ACTIONS_REWARDS:
        return replace(h, contexts=None, table=None)
    if level == Visibility.ACTIONS_ONLY:
        return History(arms=h.arms, rewards=None)
    return History(arms=None, rewards=None)


def epoch_of(t: int) -> int:
    if t < 1:
        raise ValueError("rounds start at 1")
    return t.bit_length() - 1


def count_greedy_choose(counts) -> np.ndarray:
    return np.argmax(counts, axis=-1)


class FreeRider:
    name = "free_rider"
    requires = Visibility.FULL

    def reset(self, n_replicas: int, n_arms: int, n_players: int, rand=None):
        self.n_replicas = n_replicas
        self.n_arms = n_arms
        self.n_players = n_players
        self._rows = np.arange(n_replicas)

    def observed_players(self) -> Sequence[int]:
        return ()

    def prefix_capacity(self, horizon: int) -> int:
        """Longest reward prefix of any observed player this policy will request."""
        return 0

    def choose(self, t: int, view) -> np.ndarray:
        raise NotImplementedError

    def update(self, t: int, arms: np.ndarray, rewards: np.ndarray) -> None:
        pass


class CountGreedy(FreeRider):
    """Copy whichever arm the target player has pulled most often."""

    name = "count_greedy"
    requires = Visibility.ACTIONS_ONLY

    def __init__(self, target: int):
        self.target = int(target)

    def observed_players(self):
        return (self.target,)

    def choose(self, t, view):
        return count_greedy_choose(view.counts(self.target))


@dataclass
class EpochPlan:
    """Augmentation schedule for one doubling epoch.

    ``need[r, i]`` own pulls of arm ``i`` are made in arm order, starting at the
    epoch's first round; the estimate of arm ``i`` is
    ``(observed_sum + own_sum) / quota`` once its pulls are done.
    """

    start: int
    length: int
    quota: int
    observed_sum: np.ndarray
    need: np.ndarray
    own_sum: np.ndarray

    def __post_init__(self):
        self.cum_need = np.cumsum(self.need, axis=-1)
        self.total_need = self.cum_need[..., -1]

    def estimates(self) -> np.ndarray:
        if self.quota == 0:
            return np.zeros_like(self.observed_sum)
        return (self.observed_sum + self.own_sum) / self.quota

    def finished(self) -> np.ndarray:
        """Rows whose augmentation fits inside the epoch (others never commit)."""
        return self.total_need < self.length


def samg_plan_epoch(j: int, counts: np.ndarray, prefix: np.ndarray, gamma: float) -> EpochPlan:
    """Plan epoch ``j`` from the target's counts and first-``quota`` reward sums through ``2**j - 1``."""
    quota = ceil_count(gamma * j)
    need = np.maximum(quota - np.asarray(counts), 0)
    return EpochPlan(
        start=1 << j,
        length=1 << j,
        quota=quota,
        observed_sum=np.asarray(prefix, dtype=float),
        need=need,
        own_sum=np.zeros(np.shape(prefix)),
    )


class SampleAugmentingMeanGreedy(FreeRider):
    """Estimate each arm from the target's first ``ceil(gamma*j)`` samples,
    topping up under-sampled arms with its own pulls, then commit to the best
    estimate for the rest of the doubling epoch."""

    name = "samg"
    requires = Visibility.ACTIONS_REWARDS

    def __init__(self, target: int, gamma: float):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.target = int(target)
        self.gamma = float(gamma)

    def observed_players(self):
        return (self.target,)

    def prefix_capacity(self, horizon):
        return ceil_count(self.gamma * epoch_of(horizon))

    def reset(self, n_replicas, n_arms, n_players, rand=None):
        super().reset(n_replicas, n_arms, n_players, rand)
        self.plan: Optional[EpochPlan] = None
        self.exploratory_pulls = np.zeros(n_replicas, dtype=np.int64)

    def choose(self, t, view):
        j = epoch_of(t)
        if t == 1 << j:
            quota = ceil_count(self.gamma * j)
            self.plan = samg_plan_epoch(
                j, view.counts(self.target), view.prefix_sums(self.target, quota), self.gamma
            )
        plan = self.plan
        offset = t - plan.start
        augmenting = offset < plan.total_need
        aug_arm = np.minimum((plan.cum_need <= offset).sum(axis=-1), self.n_arms - 1)
        commit = np.argmax(plan.estimates(), axis=-1)
        self._augmenting = augmenting
        return np.where(augmenting, aug_arm, commit)

    def update(self, t, arms, rewards):
        rows = self._rows[self._augmenting]
        self.plan.own_sum[rows, arms[rows]] += rewards[rows]
        self.exploratory_pulls += self._augmenting


class UCBMeanGreedy(FreeRider):
    """Combine other players' first-``ceil(gamma*j)`` sample means with weights
    ``c`` (player 0's context is ``sum_p c_p x_p``) and commit to the best arm
    for the doubling epoch.  When some player has too few samples of some arm,
    play 2-UCB on this epoch's own pulls only."""

    name = "ucb_mean_greedy"
    requires = Visibility.FULL
    fallback_alpha = 2.0

    def __init__(self, gamma: float, coefficients: Sequence[float]):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)
        self.coefficients = tuple(float(c) for c in coefficients)

    def observed_players(self):
        return tuple(range(1, len(self.coefficients) + 1))

    def prefix_capacity(self, horizon):
        return ceil_count(self.gamma * epoch_of(horizon))

    def reset(self, n_replicas, n_arms, n_players, rand=None):
        super().reset(n_replicas, n_arms, n_players, rand)
        self.counts = np.zeros((n_replicas, n_arms), dtype=np.int64)
        self.sums = np.zeros((n_replicas, n_arms))
        self.epoch_start = 1
        self.sufficient = np.zeros(n_replicas, dtype=bool)
        self.committed = np.zeros(n_replicas, dtype=np.int64)

    def combined_estimate(self, view, quota: int) -> tuple[np.ndarray, np.ndarray]:
        """(sufficient rows, combined per-arm estimates)."""
        ok = np.ones(self.n_replicas, dtype=bool)
        est = np.zeros((self.n_replicas, self.n_arms))
        for c, p in zip(self.coefficients, self.observed_players()):
            ok &= (view.counts(p) >= quota).all(axis=-1)
            if quota > 0:
                est += c * (view.prefix_sums(p, quota) / quota)
        return ok, est

    def choose(self, t, view):
        j = epoch_of(t)
        if t == 1 << j:
            self.epoch_start = t
            self.counts[:] = 0
            self.sums[:] = 0.0
            self.sufficient, est = self.combined_estimate(view, ceil_count(self.gamma * j))
            self.committed = np.argmax(est, axis=-1)
        ucb = alpha_ucb_choose(self.counts, self.sums, t - self.epoch_start, self.fallback_alpha)
        return np.where(self.sufficient, self.committed, ucb)

    def update(self, t, arms, rewards):
        self.counts[self._rows, arms] += 1
        self.sums[self._rows, arms] += rewards
