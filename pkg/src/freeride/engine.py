"""The multi-agent round loop, regret metrics, and replica aggregation.

Replicas are simulated in blocks: every policy keeps arrays with a leading
replica axis, and one Python loop over rounds advances the whole block.
Rewards are keyed by ``(replica, player, arm, round)`` so blocks can be split
and scheduled in any way without changing a single draw.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bandits import Bandit, ContextualBandit, RewardSampler
from .errors import CoefficientMismatch, InsufficientVisibility, MissingTable, ReplicaError, ValidationError
from .freeride import (
    CountGreedy,
    FreeRider,
    History,
    SampleAugmentingMeanGreedy,
    UCBMeanGreedy,
    Visibility,
)
from .policies import UCB, EpochExploreThenCommit, GiveUpUCB
from .rng import RandomStream, to_unit

COEFF_TOL = 1e-9

SELF_RELIANT = {"ucb", "eetc", "giveup_ucb"}
FREE_RIDERS = {"count_greedy", "samg", "ucb_mean_greedy"}
_REQUIRES = {
    "count_greedy": Visibility.ACTIONS_ONLY,
    "samg": Visibility.ACTIONS_REWARDS,
    "ucb_mean_greedy": Visibility.FULL,
}


@dataclass(frozen=True)
class PlayerSpec:
    """One roster entry.  ``target`` is a 1-based player number."""

    policy: str
    alpha: Optional[float] = None
    gamma: Optional[float] = None
    target: Optional[int] = None
    coefficients: Optional[tuple] = None
    visibility: Optional[str] = None

    @property
    def free_rider(self) -> bool:
        return self.policy in FREE_RIDERS


@dataclass(frozen=True)
class MetricOptions:
    counterfactuals: bool = True
    log_base: float = 1.1
    checkpoints: tuple = ()
    record_history: bool = False


@dataclass(frozen=True)
class SimulationConfig:
    bandit: Bandit
    players: tuple
    horizon: int
    replicas: int = 1
    root_seed: int = 0
    metrics: MetricOptions = field(default_factory=MetricOptions)

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))


def validate(config: SimulationConfig) -> None:
    """Raise :class:`ValidationError` naming the offending key."""
    if config.horizon < 1:
        raise ValidationError("horizon", "must be at least 1")
    if config.replicas < 1:
        raise ValidationError("replicas", "must be at least 1")
    n = len(config.players)
    if n < 1:
        raise ValidationError("players", "roster is empty")
    b = config.bandit
    if isinstance(b, ContextualBandit) and b.n_players != n:
        raise ValidationError("bandit.contexts", f"{b.n_players} contexts for {n} players")
    for idx, spec in enumerate(config.players):
        key = f"players[{idx}]"
        if spec.policy not in SELF_RELIANT | FREE_RIDERS:
            raise ValidationError(f"{key}.policy", f"unknown policy {spec.policy!r}")
        if spec.policy in ("ucb", "giveup_ucb") and spec.alpha is None:
            raise ValidationError(f"{key}.alpha", "required")
        if spec.policy in ("eetc", "samg", "ucb_mean_greedy"):
            if spec.gamma is None or spec.gamma <= 0:
                raise ValidationError(f"{key}.gamma", "required and positive")
        if not spec.free_rider:
            if spec.visibility not in (None, "none"):
                raise ValidationError(f"{key}.visibility", "self-reliant players observe nobody")
            continue
        if idx != 0:
            raise ValidationError(f"{key}.policy", "only player 1 may free ride")
        granted = Visibility.parse(spec.visibility or "full")
        if granted < _REQUIRES[spec.policy]:
            raise ValidationError(
                f"{key}.visibility",
                f"{spec.policy} needs {_REQUIRES[spec.policy].name}, granted {granted.name}",
            )
        if spec.policy in ("count_greedy", "samg"):
            if spec.target is None or not 2 <= spec.target <= n:
                raise ValidationError(f"{key}.target", f"must name a player in 2..{n}")
            if config.players[spec.target - 1].free_rider:
                raise ValidationError(f"{key}.target", "target must be self-reliant")
        if spec.policy == "ucb_mean_greedy":
            c = spec.coefficients
            if c is None or len(c) != n - 1:
                raise ValidationError(f"{key}.coefficients", f"need {n - 1} coefficients")
            try:
                check_coefficients(b, c)
            except CoefficientMismatch as e:
                raise ValidationError(f"{key}.coefficients", str(e)) from None


def player_contexts(bandit: Bandit, n_players: int) -> np.ndarray:
    """Contexts as an (n, d) array; a stochastic bandit is the 1-d case with x_p = 1."""
    if isinstance(bandit, ContextualBandit):
        return np.asarray(bandit.contexts)
    return np.ones((n_players, 1))


def check_coefficients(bandit: Bandit, c: Sequence[float]) -> None:
    x = player_contexts(bandit, len(c) + 1)
    combo = np.asarray(c, dtype=float) @ x[1:]
    if np.any(np.abs(combo - x[0]) > COEFF_TOL):
        raise CoefficientMismatch(f"sum_p c_p x_p = {combo.tolist()} differs from x_1 = {x[0].tolist()}")


def build_policy(spec: PlayerSpec):
    if spec.policy == "ucb":
        return UCB(spec.alpha)
    if spec.policy == "giveup_ucb":
        return GiveUpUCB(spec.alpha)
    if spec.policy == "eetc":
        return EpochExploreThenCommit(spec.gamma)
    if spec.policy == "count_greedy":
        return CountGreedy(spec.target - 1)
    if spec.policy == "samg":
        return SampleAugmentingMeanGreedy(spec.target - 1, spec.gamma)
    if spec.policy == "ucb_mean_greedy":
        return UCBMeanGreedy(spec.gamma, spec.coefficients)
    raise ValueError(f"unknown policy {spec.policy!r}")


def checkpoint_schedule(horizon: int, log_base: float = 1.1, extra: Sequence[int] = ()) -> np.ndarray:
    """Rounded powers of ``log_base`` up to ``horizon``, plus ``extra`` and ``horizon``."""
    pts = {horizon}
    if log_base > 1:
        m = 0
        while True:
            v = round(log_base ** m)
            if v > horizon:
                break
            pts.add(max(v, 1))
            m += 1
    pts.update(int(e) for e in extra if 1 <= int(e) <= horizon)
    return np.array(sorted(pts), dtype=np.int64)


def pseudo_regret(counts, deltas):
    """sum_i N_i * Delta_i along the last axis."""
    return (np.asarray(counts) * np.asarray(deltas)).sum(axis=-1)


def realized_regret(arms, table, rewards=None) -> float:
    """Best single arm's counterfactual total minus the player's total.

    ``arms`` are 0-based pulls, ``table`` is (rounds, arms).  Rewards default
    to the table entries of the pulled arms.
    """
    if table is None:
        raise MissingTable("realized regret needs the counterfactual reward table")
    table = np.asarray(table, dtype=float)
    arms = np.asarray(arms)
    if rewards is None:
        rewards = table[np.arange(len(arms)), arms]
    return float(table.sum(axis=0).max() - np.sum(rewards))


class ObservationView:
    """What the free rider may read, frozen at the end of the previous round."""

    def __init__(self, world: "World", level: Visibility):
        self._w = world
        self.level = level

    def _need(self, level: Visibility, what: str):
        if self.level < level:
            raise InsufficientVisibility(f"{what} requires {level.name}, granted {self.level.name}")

    @property
    def n_players(self) -> int:
        return self._w.n_players

    def counts(self, player: int) -> np.ndarray:
        self._need(Visibility.ACTIONS_ONLY, "action counts")
        return self._w.counts[:, player, :]

    def prefix_sums(self, player: int, s: int) -> np.ndarray:
        self._need(Visibility.ACTIONS_REWARDS, "rewards")
        w = self._w
        slot = w.obs_slot[player]
        if s > w.obs_buf.shape[-1]:
            raise ValueError(f"requested prefix {s} beyond recorded capacity {w.obs_buf.shape[-1]}")
        return w.obs_buf[:, slot, :, :s].sum(axis=-1)

    @property
    def contexts(self) -> np.ndarray:
        self._need(Visibility.FULL, "contexts")
        return player_contexts(self._w.bandit, self._w.n_players)


class World:
    """State of one block of replicas between rounds."""

    def __init__(self, config: SimulationConfig, replicas: range):
        self.config = config
        self.bandit = config.bandit
        self.n_players = n = len(config.players)
        self.n_arms = k = config.bandit.n_arms
        self.R = R = len(replicas)
        self.t = 0
        stream = RandomStream(config.root_seed)
        rep = np.arange(replicas.start, replicas.stop)
        self.keys = stream.prefix(rep[:, None, None], np.arange(n)[None, :, None], np.arange(k)[None, None, :])
        self.sampler = RewardSampler(config.bandit, n)
        self.counterfactuals = config.metrics.counterfactuals
        self._players = np.arange(n)[None, :]
        self._arm_axis = np.arange(k)[None, None, :]
        self._rows = np.arange(R)[:, None]

        gaps = config.bandit.player_gaps(n)
        self.deltas = np.array([g.deltas for g in gaps])

        self.policies = []
        self.view = None
        for p, spec in enumerate(config.players):
            pol = build_policy(spec)
            pkey = stream.prefix(rep, p, k)  # arm slot k is reserved for policy coins
            rand = lambda t, pkey=pkey: to_unit(RandomStream.extend(pkey, t))
            if isinstance(pol, FreeRider):
                pol.reset(R, k, n, rand)
                self.view = ObservationView(self, Visibility.parse(spec.visibility or "full"))
            else:
                pol.reset(R, k, rand)
            self.policies.append(pol)

        self.counts = np.zeros((R, n, k), dtype=np.int64)
        self.cum_reward = np.zeros((R, n))
        self.cum_table = np.zeros((R, n, k)) if self.counterfactuals else None

        fr = self.policies[0] if isinstance(self.policies[0], FreeRider) else None
        if fr is not None and self.view.level < fr.requires:
            raise InsufficientVisibility(f"{fr.name} needs {fr.requires.name}")
        observed = tuple(fr.observed_players()) if fr is not None else ()
        cap = fr.prefix_capacity(config.horizon) if fr is not None and self.view.level >= Visibility.ACTIONS_REWARDS else 0
        self.obs_slot = {p: s for s, p in enumerate(observed)}
        self.obs_players = np.array(observed, dtype=np.int64)
        self.obs_buf = np.zeros((R, len(observed), k, cap))
        if isinstance(fr, UCBMeanGreedy):
            check_coefficients(self.bandit, fr.coefficients)

        self.record = config.metrics.record_history
        if self.record:
            T = config.horizon
            self.h_arms = np.zeros((R, n, T), dtype=np.int64)
            self.h_rewards = np.zeros((R, n, T))
            self.h_table = np.zeros((R, n, T, k)) if self.counterfactuals else None

    def step(self) -> None:
        """Advance every replica by one round."""
        t = self.t + 1
        arms = np.empty((self.R, self.n_players), dtype=np.int64)
        for p, pol in enumerate(self.policies):
            arms[:, p] = pol.choose(t, self.view) if isinstance(pol, FreeRider) else pol.choose(t)

        if self.counterfactuals:
            table = self.sampler.draw(RandomStream.extend(self.keys, t), self._players[..., None], self._arm_axis)
            rewards = np.take_along_axis(table, arms[..., None], axis=2)[..., 0]
        else:
            table = None
            keys = np.take_along_axis(self.keys, arms[..., None], axis=2)[..., 0]
            rewards = self.sampler.draw(RandomStream.extend(keys, t), self._players, arms)

        for p, pol in enumerate(self.policies):
            pol.update(t, arms[:, p], rewards[:, p])

        if self.obs_buf.shape[-1]:
            op = self.obs_players
            a = arms[:, op]
            idx = self.counts[self._rows, op[None, :], a]
            ok = idx < self.obs_buf.shape[-1]
            r_i, s_i = np.nonzero(ok)
            self.obs_buf[r_i, s_i, a[ok], idx[ok]] = rewards[:, op][ok]

        self.counts[self._rows, self._players, arms] += 1
        self.cum_reward += rewards
        if table is not None:
            self.cum_table += table
        if self.record:
            self.h_arms[:, :, t - 1] = arms
            self.h_rewards[:, :, t - 1] = rewards
            if table is not None:
                self.h_table[:, :, t - 1, :] = table
        self.t = t

    def pseudo(self) -> np.ndarray:
        return pseudo_regret(self.counts, self.deltas[None])

    def realized(self) -> np.ndarray:
        if self.cum_table is None:
            return np.full((self.R, self.n_players), np.nan)
        return self.cum_table.max(axis=-1) - self.cum_reward

    def histories(self) -> list[History]:
        ctx = player_contexts(self.bandit, self.n_players) if isinstance(self.bandit, ContextualBandit) else None
        return [
            History(
                arms=self.h_arms[r],
                rewards=self.h_rewards[r],
                contexts=ctx,
                table=None if self.h_table is None else self.h_table[r],
            )
            for r in range(self.R)
        ]


@dataclass
class BlockResult:
    replicas: range
    pseudo: np.ndarray  # (R, C, n)
    realized: np.ndarray  # (R, C, n)
    counts: np.ndarray  # (R, C, n, k)
    histories: Optional[list] = None


def simulate_block(config: SimulationConfig, replicas: range, checkpoints: np.ndarray) -> BlockResult:
    try:
        w = World(config, replicas)
        C = len(checkpoints)
        pseudo = np.zeros((w.R, C, w.n_players))
        realized = np.zeros((w.R, C, w.n_players))
        counts = np.zeros((w.R, C, w.n_players, w.n_arms), dtype=np.int64)
        c = 0
        for t in range(1, config.horizon + 1):
            w.step()
            if t == checkpoints[c]:
                pseudo[:, c] = w.pseudo()
                realized[:, c] = w.realized()
                counts[:, c] = w.counts
                c += 1
                if c == C:
                    break
        return BlockResult(replicas, pseudo, realized, counts, w.histories() if w.record else None)
    except ReplicaError:
        raise
    except Exception as e:
        raise ReplicaError(replicas, e) from e


@dataclass
class MetricsSeries:
    """Pointwise mean and sample standard deviation across replicas."""

    replicas: int
    checkpoints: np.ndarray
    pseudo_mean: np.ndarray  # (C, n)
    pseudo_std: np.ndarray
    realized_mean: np.ndarray
    realized_std: np.ndarray
    counts_mean: np.ndarray  # (C, n, k)

    def at(self, t: int) -> int:
        """Index of checkpoint ``t``."""
        hit = np.flatnonzero(self.checkpoints == t)
        if not hit.size:
            raise KeyError(f"round {t} is not a checkpoint")
        return int(hit[0])


def _std(x: np.ndarray) -> np.ndarray:
    if x.shape[0] < 2:
        return np.zeros(x.shape[1:])
    return x.std(axis=0, ddof=1)


@dataclass
class SimulationResult:
    config: SimulationConfig
    checkpoints: np.ndarray
    pseudo: np.ndarray  # per replica (R, C, n)
    realized: np.ndarray
    counts: np.ndarray  # (R, C, n, k)
    histories: Optional[list] = None

    @property
    def metrics(self) -> MetricsSeries:
        return MetricsSeries(
            replicas=self.pseudo.shape[0],
            checkpoints=self.checkpoints,
            pseudo_mean=self.pseudo.mean(axis=0),
            pseudo_std=_std(self.pseudo),
            realized_mean=self.realized.mean(axis=0),
            realized_std=_std(self.realized),
            counts_mean=self.counts.mean(axis=0),
        )


def worker_count() -> int:
    env = os.environ.get("FREERIDE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_replicas(config: SimulationConfig, workers: Optional[int] = None) -> SimulationResult:
    """Simulate every replica; the output depends only on the config."""
    validate(config)
    m = config.metrics
    checkpoints = checkpoint_schedule(config.horizon, m.log_base, m.checkpoints)
    workers = min(workers or worker_count(), config.replicas)
    size = math.ceil(config.replicas / workers)
    blocks = [range(s, min(s + size, config.replicas)) for s in range(0, config.replicas, size)]
    if len(blocks) == 1:
        results = [simulate_block(config, blocks[0], checkpoints)]
    else:
        with ProcessPoolExecutor(max_workers=len(blocks)) as ex:
            results = list(ex.map(simulate_block, [config] * len(blocks), blocks, [checkpoints] * len(blocks)))
    hist = None
    if m.record_history:
        hist = [h for r in results for h in r.histories]
    return SimulationResult(
        config=config,
        checkpoints=checkpoints,
        pseudo=np.concatenate([r.pseudo for r in results]),
        realized=np.concatenate([r.realized for r in results]),
        counts=np.concatenate([r.counts for r in results]),
        histories=hist,
    )


CSV_COLUMNS = (
    "replica_count",
    "t",
    "player",
    "cum_pseudo_regret_mean",
    "cum_pseudo_regret_std",
    "cum_realized_regret_mean",
    "cum_realized_regret_std",
)


def _fmt(v: float) -> str:
    return "%.9g" % v


def metrics_csv(m: MetricsSeries) -> str:
    """One row per checkpoint per player (1-based), floats to 9 significant digits."""
    k = m.counts_mean.shape[-1]
    header = list(CSV_COLUMNS) + [f"arm{i + 1}_count_mean" for i in range(k)]
    lines = [",".join(header)]
    for c, t in enumerate(m.checkpoints):
        for p in range(m.pseudo_mean.shape[1]):
            row = [str(m.replicas), str(int(t)), str(p + 1)]
            row += [
                _fmt(m.pseudo_mean[c, p]),
                _fmt(m.pseudo_std[c, p]),
                _fmt(m.realized_mean[c, p]),
                _fmt(m.realized_std[c, p]),
            ]
            row += [_fmt(v) for v in m.counts_mean[c, p]]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"
