"""Self-reliant policies.

Every policy keeps its state as arrays with a leading replica axis, so one
object plays the same role in a whole block of independent replicas.  Arms are
0-based throughout; ties always go to the lowest index.
"""
from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .errors import ZeroCount

_CEIL_TOL = 1e-9


def ceil_count(x: float) -> int:
    """Integer sample quota ``ceil(x)``, forgiving float noise such as 0.1 * 30."""
    return max(0, math.ceil(x - _CEIL_TOL))


def sample_means(counts: np.ndarray, sums: np.ndarray) -> np.ndarray:
    """Per-arm sample means; an arm with no samples has mean 0."""
    counts = np.asarray(counts)
    return np.divide(sums, counts, out=np.zeros(np.shape(sums)), where=counts > 0)


def ucb_index(mean, count, t, alpha):
    count = np.asarray(count)
    if np.any(count <= 0):
        raise ZeroCount("UCB index is undefined for an arm with no samples")
    return mean + np.sqrt(alpha * np.log(t + 1.0) / (2.0 * count))


def alpha_ucb_choose(counts, sums, t, alpha):
    """alpha-UCB after ``t`` rounds of history; the arm axis is last.

    Unpulled arms are taken first, lowest index first.
    """
    counts = np.asarray(counts)
    unpulled = counts == 0
    safe = np.maximum(counts, 1)
    index = sums / safe + np.sqrt(alpha * math.log(t + 1.0) / (2.0 * safe))
    greedy = np.argmax(index, axis=-1)
    return np.where(unpulled.any(axis=-1), np.argmax(unpulled, axis=-1), greedy)


class Policy:
    """Base class; subclasses allocate state in ``reset``."""

    name = "policy"
    requires = None  # self-reliant policies observe nobody

    def reset(self, n_replicas: int, n_arms: int, rand: Optional[Callable[[int], np.ndarray]] = None):
        self.n_replicas = n_replicas
        self.n_arms = n_arms
        self.rand = rand
        self._rows = np.arange(n_replicas)

    def choose(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def update(self, t: int, arms: np.ndarray, rewards: np.ndarray) -> None:
        pass


class UCB(Policy):
    name = "ucb"

    def __init__(self, alpha: float = 2.0):
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        self.alpha = float(alpha)

    def reset(self, n_replicas, n_arms, rand=None):
        super().reset(n_replicas, n_arms, rand)
        self.counts = np.zeros((n_replicas, n_arms), dtype=np.int64)
        self.sums = np.zeros((n_replicas, n_arms))
        self.played = 0

    def choose(self, t):
        return alpha_ucb_choose(self.counts, self.sums, self.played, self.alpha)

    def update(self, t, arms, rewards):
        self.counts[self._rows, arms] += 1
        self.sums[self._rows, arms] += rewards
        self.played += 1


def eetc_slot(t: int, n_arms: int, gamma: float) -> int:
    """Exploration arm scheduled for round ``t`` (1-based), or -1 in the commit phase.

    Epoch ``j`` covers rounds ``2**j .. 2**(j+1) - 1``; it explores each arm
    ``ceil(gamma * (j + 2))`` times in index order, cut short at the epoch end.
    """
    j = t.bit_length() - 1
    offset = t - (1 << j)
    quota = ceil_count(gamma * (j + 2))
    if quota == 0:
        return -1
    slot = offset // quota
    return slot if slot < n_arms else -1


def eetc_choose(t: int, gamma: float, epoch_counts: np.ndarray, epoch_sums: np.ndarray):
    """EpochExploreThenCommit's arm for round ``t`` given this epoch's statistics so far."""
    slot = eetc_slot(t, np.shape(epoch_counts)[-1], gamma)
    if slot >= 0:
        return np.full(np.shape(epoch_counts)[:-1], slot, dtype=np.int64)
    return np.argmax(sample_means(epoch_counts, epoch_sums), axis=-1)


class EpochExploreThenCommit(Policy):
    name = "eetc"

    def __init__(self, gamma: float):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)

    def reset(self, n_replicas, n_arms, rand=None):
        super().reset(n_replicas, n_arms, rand)
        self.epoch_counts = np.zeros((n_replicas, n_arms), dtype=np.int64)
        self.epoch_sums = np.zeros((n_replicas, n_arms))
        self.committed = None

    def choose(self, t):
        if t & (t - 1) == 0:  # epoch start
            self.epoch_counts[:] = 0
            self.epoch_sums[:] = 0.0
            self.committed = None
        if eetc_slot(t, self.n_arms, self.gamma) < 0:
            if self.committed is None:
                self.committed = np.argmax(sample_means(self.epoch_counts, self.epoch_sums), axis=-1)
            return self.committed
        return eetc_choose(t, self.gamma, self.epoch_counts, self.epoch_sums)

    def update(self, t, arms, rewards):
        self.epoch_counts[self._rows, arms] += 1
        self.epoch_sums[self._rows, arms] += rewards


def tripling_epoch(t: int) -> tuple[int, bool]:
    """(j, starts) with ``3**j <= t < 3**(j+1)`` and whether ``t == 3**j``."""
    j, p = 0, 1
    while p * 3 <= t:
        p *= 3
        j += 1
    return j, p == t


def giveup_decision(j: int, u, counts, sums, giveup_prob=lambda j: 3.0 ** -j):
    """At the start of tripling epoch ``j``: (gives_up, arm to sink into if so)."""
    gives_up = np.asarray(u) < giveup_prob(j)
    worst = np.argmin(sample_means(counts, sums), axis=-1)
    return gives_up, worst


class GiveUpUCB(Policy):
    """alpha-UCB that, at each round ``3**j``, abandons the whole tripling epoch
    with probability ``3**-j`` and pulls its empirically worst arm instead.

    Samples from abandoned epochs still feed the UCB statistics.
    """

    name = "giveup_ucb"

    def __init__(self, alpha: float = 2.0, giveup_prob: Callable[[int], float] = lambda j: 3.0 ** -j):
        self.alpha = float(alpha)
        self.giveup_prob = giveup_prob

    def reset(self, n_replicas, n_arms, rand=None):
        if rand is None:
            raise ValueError("GiveUpUCB needs a random source")
        super().reset(n_replicas, n_arms, rand)
        self.counts = np.zeros((n_replicas, n_arms), dtype=np.int64)
        self.sums = np.zeros((n_replicas, n_arms))
        self.giving_up = np.zeros(n_replicas, dtype=bool)
        self.sink = np.zeros(n_replicas, dtype=np.int64)
        self.played = 0

    def choose(self, t):
        j, starts = tripling_epoch(t)
        if starts:
            self.giving_up, self.sink = giveup_decision(
                j, self.rand(t), self.counts, self.sums, self.giveup_prob
            )
        ucb = alpha_ucb_choose(self.counts, self.sums, self.played, self.alpha)
        return np.where(self.giving_up, self.sink, ucb)

    def update(self, t, arms, rewards):
        self.counts[self._rows, arms] += 1
        self.sums[self._rows, arms] += rewards
        self.played += 1
