import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from freeride.bandits import ContextualBandit, StochasticBandit
from freeride.distributions import Bernoulli, DiscreteFeature, DiscretePoints, PointMass, PointMassFeature
from freeride.engine import (
    MetricOptions,
    PlayerSpec,
    SimulationConfig,
    World,
    checkpoint_schedule,
    metrics_csv,
    pseudo_regret,
    realized_regret,
    run_replicas,
    validate,
)
from freeride.errors import MissingTable, ReplicaError, ValidationError
from freeride.presets import needcontexts_coupling

GOLDEN = Path(__file__).parent / "golden"
UCB2 = PlayerSpec("ucb", alpha=2.0)
BERN3 = StochasticBandit([Bernoulli(0.2), Bernoulli(0.7), Bernoulli(0.4)])


def cfg(bandit=BERN3, players=(UCB2,), T=50, R=2, seed=0, **metrics):
    return SimulationConfig(bandit, tuple(players), horizon=T, replicas=R, root_seed=seed, metrics=MetricOptions(**metrics))


class TestRound:
    def test_single_ucb_first_round(self):
        w = World(cfg(StochasticBandit([PointMass(0.0), PointMass(0.5)])), range(1))
        w.step()
        assert w.counts[0, 0].tolist() == [1, 0]
        assert w.cum_reward[0, 0] == 0.0

    def test_count_greedy_first_round_copies_empty_counts(self):
        w = World(cfg(players=(PlayerSpec("count_greedy", target=2, visibility="actions_only"), UCB2)), range(3))
        w.step()
        assert w.counts[:, 0, 0].tolist() == [1, 1, 1]

    def test_zero_context_rewards_are_zero(self):
        cb = ContextualBandit(
            [DiscreteFeature(((0.5, 0.5), (-0.3, 0.8)), (0.4, 0.6)), PointMassFeature((0.9, 0.0))],
            [(0.6, 0.8), (0.0, 0.0)],
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = run_replicas(cfg(cb, (UCB2, UCB2), T=20, record_history=True))
        for h in res.histories:
            assert np.all(h.rewards[1] == 0.0)
            assert np.all(h.table[1] == 0.0)


class TestRegretFormulas:
    def test_realized_can_be_negative(self):
        assert realized_regret([0, 1], [[1, 0], [0, 1]]) == -1.0

    def test_realized_hand_example(self):
        assert realized_regret([0, 0, 0], [[1, 0], [0, 1], [1, 1]]) == 0.0

    def test_per_round_argmax_player_nonpositive(self):
        table = np.random.default_rng(0).uniform(-1, 1, (40, 4))
        assert realized_regret(table.argmax(axis=1), table) <= 0.0

    def test_missing_table(self):
        with pytest.raises(MissingTable):
            realized_regret([0], None)

    def test_pseudo(self):
        assert pseudo_regret([10, 5], [0, 0.4]) == pytest.approx(2.0)
        assert pseudo_regret([7, 0], [0, 0.4]) == 0.0
        assert pseudo_regret([0, 9], [0, 0.25]) == 9 * 0.25


def test_checkpoint_schedule():
    c = checkpoint_schedule(1000, 1.1, extra=(333,))
    assert c[0] == 1 and c[-1] == 1000 and 333 in c
    assert np.all(np.diff(c) > 0)
    assert len(c) < 100
    assert list(checkpoint_schedule(1)) == [1]


def test_replicas_one_aggregate_is_the_run():
    res = run_replicas(cfg(R=1, T=200))
    m = res.metrics
    assert np.array_equal(m.pseudo_mean, res.pseudo[0])
    assert np.all(m.pseudo_std == 0) and np.all(m.realized_std == 0)


def test_determinism_and_block_independence():
    c = cfg(players=(PlayerSpec("samg", target=2, gamma=1.0, visibility="actions_rewards"), UCB2), R=7, T=300)
    a, b = run_replicas(c, workers=1), run_replicas(c, workers=1)
    par = run_replicas(c, workers=3)
    for x in (b, par):
        assert np.array_equal(a.pseudo, x.pseudo)
        assert np.array_equal(a.realized, x.realized)
        assert np.array_equal(a.counts, x.counts)
    assert metrics_csv(a.metrics) == metrics_csv(par.metrics)


def test_aggregation_matches_numpy():
    res = run_replicas(cfg(R=5, T=120))
    m = res.metrics
    assert np.allclose(m.realized_mean, res.realized.mean(axis=0))
    assert np.allclose(m.realized_std, res.realized.std(axis=0, ddof=1))


def test_common_random_numbers_and_invariants():
    c = cfg(players=(PlayerSpec("count_greedy", target=3, visibility="actions_only"), UCB2, PlayerSpec("eetc", gamma=1.0)),
            R=4, T=150, record_history=True, log_base=1.05)
    res = run_replicas(c)
    for h in res.histories:
        picked = np.take_along_axis(h.table, h.arms[..., None], axis=2)[..., 0]
        assert np.array_equal(h.rewards, picked)
        assert np.all(np.abs(h.rewards) <= 1)
    assert np.all(np.diff(res.pseudo, axis=1) >= 0)
    assert np.array_equal(res.counts.sum(axis=-1), np.broadcast_to(res.checkpoints[None, :, None], res.counts.shape[:-1]))


def test_self_reliant_players_ignore_the_free_rider():
    base = (UCB2, PlayerSpec("giveup_ucb", alpha=2.0))
    traces = []
    for fr in (
        PlayerSpec("count_greedy", target=2, visibility="actions_only"),
        PlayerSpec("samg", target=3, gamma=2.0, visibility="full"),
        PlayerSpec("ucb", alpha=1.0),
    ):
        res = run_replicas(cfg(players=(fr,) + base, R=3, T=400, record_history=True))
        traces.append([(h.arms[1:], h.rewards[1:]) for h in res.histories])
    for other in traces[1:]:
        for (a, r), (b, s) in zip(traces[0], other):
            assert np.array_equal(a, b) and np.array_equal(r, s)


def test_needcontexts_coupling_short():
    configs = needcontexts_coupling(seed=5)
    runs = {k: run_replicas(replace(v, horizon=500, replicas=3)).histories for k, v in configs.items()}
    for ha, hb in zip(runs["A"], runs["B"]):
        assert np.array_equal(ha.arms[1], hb.arms[1])
        assert np.array_equal(ha.rewards[1], hb.rewards[1])
    # player 1's rewards do differ between the two environments
    assert any(not np.array_equal(ha.table[0], hb.table[0]) for ha, hb in zip(runs["A"], runs["B"]))


class TestValidation:
    def test_visibility_too_low(self):
        with pytest.raises(ValidationError) as e:
            validate(cfg(players=(PlayerSpec("samg", target=2, gamma=1.0, visibility="actions_only"), UCB2)))
        assert e.value.key == "players[0].visibility"

    def test_free_rider_must_be_first(self):
        with pytest.raises(ValidationError) as e:
            validate(cfg(players=(UCB2, PlayerSpec("count_greedy", target=1, visibility="full"))))
        assert e.value.key == "players[1].policy"

    def test_target_range(self):
        with pytest.raises(ValidationError) as e:
            validate(cfg(players=(PlayerSpec("count_greedy", target=5, visibility="full"), UCB2)))
        assert e.value.key == "players[0].target"

    def test_coefficient_identity(self):
        ok = (PlayerSpec("ucb_mean_greedy", gamma=1.0, coefficients=(0.25, 0.75)), UCB2, UCB2)
        validate(cfg(players=ok))
        bad = (PlayerSpec("ucb_mean_greedy", gamma=1.0, coefficients=(0.5, 0.6)), UCB2, UCB2)
        with pytest.raises(ValidationError) as e:
            validate(cfg(players=bad))
        assert e.value.key == "players[0].coefficients"

    def test_horizon(self):
        with pytest.raises(ValidationError) as e:
            validate(cfg(T=0))
        assert e.value.key == "horizon"

    def test_context_count(self):
        cb = ContextualBandit([PointMassFeature((0.1,)), PointMassFeature((0.2,))], [(1.0,)])
        with pytest.raises(ValidationError):
            validate(cfg(cb, (UCB2, UCB2)))


def test_replica_error_carries_range(monkeypatch):
    def boom(self):
        raise ArithmeticError("synthetic")

    monkeypatch.setattr(World, "step", boom)
    with pytest.raises(ReplicaError) as e:
        run_replicas(cfg(R=4), workers=1)
    assert e.value.replicas == range(0, 4)
    assert isinstance(e.value.cause, ArithmeticError)


def test_csv_golden():
    c = SimulationConfig(
        StochasticBandit([Bernoulli(0.5), PointMass(0.25), DiscretePoints((-1.0, 1.0), (0.375, 0.625))]),
        (PlayerSpec("count_greedy", target=2, visibility="actions_only"), UCB2),
        horizon=100, replicas=3, root_seed=2024,
    )
    text = metrics_csv(run_replicas(c).metrics)
    lines = text.splitlines()
    golden = (GOLDEN / "metrics_head.csv").read_text().splitlines()
    assert lines[0] == golden[0]
    assert lines[-1] == golden[1]


def test_csv_no_counterfactuals_prints_nan():
    text = metrics_csv(run_replicas(cfg(T=5, R=1, counterfactuals=False)).metrics)
    assert text.splitlines()[1].split(",")[5] == "nan"
