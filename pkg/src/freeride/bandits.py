"""Stochastic and linear contextual bandits, gaps, and batched reward draws."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .distributions import (
    DiscretePoints,
    SphericalGaussian,
    ball_gaussian,
    canonical,
    contextual_mean,
)
from .errors import DimensionMismatch, TiedOptimum
from .rng import to_unit

TIE_TOL = 1e-12
_CTX_TOL = 1e-12


class TiedOptimumWarning(UserWarning):
    """A player's best arm is not unique; gaps are taken against the best strictly worse arm."""


@dataclass(frozen=True)
class Gap:
    i_star: int
    delta: float
    deltas: np.ndarray
    tied: bool = False

    def __eq__(self, other):
        return (
            isinstance(other, Gap)
            and self.i_star == other.i_star
            and self.delta == other.delta
            and np.array_equal(self.deltas, other.deltas)
        )


def gap_from_means(means: Sequence[float], strict: bool = True, label: str = "bandit") -> Gap:
    means = np.asarray(means, dtype=float)
    best = means.max()
    top = np.flatnonzero(means >= best - TIE_TOL)
    deltas = np.where(means >= best - TIE_TOL, 0.0, best - means)
    tied = len(top) > 1
    if tied:
        if strict:
            raise TiedOptimum(f"{label}: arms {[int(i) + 1 for i in top]} share the best mean {float(best)!r}")
        warnings.warn(
            f"{label}: arms {[int(i) + 1 for i in top]} share the best mean {float(best)!r}",
            TiedOptimumWarning,
            stacklevel=3,
        )
    below = deltas[deltas > 0]
    delta = float(below.min()) if below.size else 0.0
    return Gap(int(top[0]), delta, deltas, tied)


@dataclass(frozen=True)
class StochasticBandit:
    arms: tuple

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        if len(self.arms) < 2:
            raise ValueError("a bandit needs at least two arms")
        gap_from_means(self.means)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def means(self) -> np.ndarray:
        return np.array([a.mean() for a in self.arms])

    def player_means(self, n_players: int) -> np.ndarray:
        return np.broadcast_to(self.means, (n_players, self.n_arms)).copy()

    def player_gaps(self, n_players: int) -> list[Gap]:
        g = gap(self)
        return [g] * n_players

    def laws(self, n_players: int) -> list[list[tuple[np.ndarray, np.ndarray]]]:
        row = [a.support() for a in self.arms]
        return [row] * n_players


def gap(b: Union[StochasticBandit, "InducedBandit"]) -> Gap:
    """Best arm, gap to the runner-up, and per-arm suboptimality."""
    return gap_from_means(b.means)


@dataclass(frozen=True)
class InducedBandit:
    """What one player of a contextual bandit faces: a stochastic bandit over rewards."""

    player: int
    means: np.ndarray
    gap: Gap
    arms: tuple  # DiscretePoints per arm, or None for continuous feature laws


@dataclass(frozen=True)
class ContextualBandit:
    arms: tuple
    contexts: tuple

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        ctx = tuple(tuple(float(v) for v in np.asarray(x, dtype=float).ravel()) for x in self.contexts)
        object.__setattr__(self, "contexts", ctx)
        if len(self.arms) < 2:
            raise ValueError("a bandit needs at least two arms")
        dims = {a.dim for a in self.arms} | {len(x) for x in ctx}
        if len(dims) != 1:
            raise DimensionMismatch(f"arm and context dimensions disagree: {sorted(dims)}")
        if np.any(np.linalg.norm(np.asarray(ctx), axis=1) > 1.0 + _CTX_TOL):
            raise ValueError("contexts must lie in the closed unit ball so rewards stay in [-1, 1]")

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def n_players(self) -> int:
        return len(self.contexts)

    @property
    def dim(self) -> int:
        return len(self.contexts[0])

    def player_means(self, n_players: Optional[int] = None) -> np.ndarray:
        x = np.asarray(self.contexts)
        theta = np.array([a.mean_vector() for a in self.arms])
        return x @ theta.T

    def player_gaps(self, n_players: Optional[int] = None) -> list[Gap]:
        return [
            gap_from_means(m, strict=False, label=f"player {p + 1}")
            for p, m in enumerate(self.player_means())
        ]

    def laws(self, n_players: Optional[int] = None):
        out = []
        for x in self.contexts:
            row = []
            for a in self.arms:
                fs = a.finite_support()
                if fs is None:
                    row.append(None)
                else:
                    pts, probs = fs
                    row.append(canonical(np.clip(pts @ np.asarray(x), -1.0, 1.0), probs))
            out.append(row)
        return out


def induced_stochastic(cb: ContextualBandit, p: int) -> InducedBandit:
    """Player ``p``'s (0-based) view of ``cb``.  Ties are warned about, not raised."""
    if not 0 <= p < cb.n_players:
        raise IndexError(f"player {p} out of range")
    x = cb.contexts[p]
    means = np.array([contextual_mean(a, x) for a in cb.arms])
    g = gap_from_means(means, strict=False, label=f"player {p + 1}")
    arms = tuple(
        None if law is None else DiscretePoints(tuple(law[0]), tuple(law[1]))
        for law in cb.laws()[p]
    )
    return InducedBandit(p, means, g, arms)


Bandit = Union[StochasticBandit, ContextualBandit]


class RewardSampler:
    """Turns hashed keys into rewards for every (player, arm) of a bandit.

    Finite laws go through a padded inverse-CDF table of shape
    ``(players, arms, support)``; ball-truncated Gaussian feature laws are
    sampled as vectors and projected on the player's context.
    """

    def __init__(self, bandit: Bandit, n_players: int):
        laws = bandit.laws(n_players)
        k = bandit.n_arms
        width = max((len(l[0]) for row in laws for l in row if l is not None), default=1)
        self.values = np.zeros((n_players, k, width))
        self.cdf = np.ones((n_players, k, width))
        for p, row in enumerate(laws):
            for i, law in enumerate(row):
                if law is None:
                    continue
                v, pr = law
                c = np.cumsum(pr)
                c[-1] = 1.0
                self.values[p, i, : len(v)] = v
                self.values[p, i, len(v):] = v[-1]
                self.cdf[p, i, : len(v)] = c
        self.gaussian = np.array([isinstance(a, SphericalGaussian) for a in bandit.arms])
        if self.gaussian.any():
            self.g_mean = np.array([a.mean if g else (0.0,) * bandit.dim for a, g in zip(bandit.arms, self.gaussian)])
            self.g_sd = np.array([np.sqrt(a.variance) if g else 0.0 for a, g in zip(bandit.arms, self.gaussian)])
            self.contexts = np.asarray(bandit.contexts)

    def draw(self, keys: np.ndarray, players: np.ndarray, arms: np.ndarray) -> np.ndarray:
        keys, players, arms = np.broadcast_arrays(keys, players, arms)
        u = to_unit(keys)
        cdf = self.cdf[players, arms]
        idx = np.minimum((cdf <= u[..., None]).sum(-1), cdf.shape[-1] - 1)
        out = self.values[players, arms, idx]
        if self.gaussian.any():
            g = self.gaussian[arms]
            if g.any():
                theta = ball_gaussian(keys[g], self.g_mean[arms[g]], self.g_sd[arms[g]])
                r = np.einsum("ij,ij->i", theta, self.contexts[players[g]])
                out[g] = np.clip(r, -1.0, 1.0)
        return out
