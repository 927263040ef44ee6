"""TOML scenario files: parse, validate, serialize.

Every error names the offending key (``players[1].gamma``) or, for syntax
errors, the line and column reported by the TOML reader.
"""
from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Union

import tomli
import tomli_w

from .bandits import ContextualBandit, StochasticBandit
from .distributions import (
    Bernoulli,
    DiscreteFeature,
    DiscretePoints,
    PointMass,
    PointMassFeature,
    ShiftedMixture,
    SphericalGaussian,
)
from .engine import MetricOptions, PlayerSpec, SimulationConfig, validate
from .errors import ParseError, ValidationError

SCHEMA = """\
# Scenario file (TOML).  Player numbers are 1-based; player 1 may free ride.

horizon = 100000          # rounds T, >= 1                       (required)
replicas = 1              # independent runs, >= 1               (default 1)
root_seed = 0             # 64-bit seed for every random draw    (default 0)

[metrics]                 # optional table
counterfactuals = true    # per-arm reward tables -> realized regret
log_base = 1.1            # checkpoint spacing (rounded powers)
checkpoints = []          # extra checkpoint rounds
record_history = false    # keep full per-round histories in memory

[bandit]
kind = "stochastic"       # or "contextual"
# contextual only: one context vector per player, norm <= 1
# contexts = [[0.5, 0.5], [1.0, 0.0]]

# one [[bandit.arms]] table per arm, in arm order
[[bandit.arms]]
kind = "bernoulli"        # p
# kind = "discrete"       # values = [...], probs = [...]   (values in [-1, 1])
# kind = "point_mass"     # v
# kind = "shifted"        # keep_prob, base = { kind = ..., ... }
# contextual arms:
# kind = "discrete_feature"    # points = [[...], ...], probs = [...]
# kind = "point_mass_feature"  # v = [...]
# kind = "gaussian"            # mean = [...], variance (rejected into the unit ball)
p = 0.5

[[bandit.arms]]
kind = "point_mass"
v = 0.2

# one [[players]] table per player, in player order
[[players]]
policy = "ucb"            # ucb | giveup_ucb | eetc | count_greedy | samg | ucb_mean_greedy
alpha = 2.0               # ucb, giveup_ucb
# gamma = 1.5             # eetc, samg, ucb_mean_greedy
# target = 2              # count_greedy, samg: the player to imitate
# coefficients = [0.5, 0.5]   # ucb_mean_greedy: x_1 = sum_p c_p x_(p+1)
# visibility = "full"     # free riders: none | actions_only | actions_rewards | full
"""

_ARM_FIELDS = {
    "bernoulli": {"p"},
    "discrete": {"values", "probs"},
    "point_mass": {"v"},
    "shifted": {"base", "keep_prob"},
    "discrete_feature": {"points", "probs"},
    "point_mass_feature": {"v"},
    "gaussian": {"mean", "variance"},
}
_PLAYER_FIELDS = {"policy", "alpha", "gamma", "target", "coefficients", "visibility"}
_TOP_FIELDS = {"horizon", "replicas", "root_seed", "metrics", "bandit", "players"}
_METRIC_FIELDS = {"counterfactuals", "log_base", "checkpoints", "record_history"}


def _require(table: dict, name: str, key: str) -> Any:
    if name not in table:
        raise ValidationError(f"{key}.{name}" if key else name, "missing")
    return table[name]


def _no_extras(table: dict, allowed: set, key: str) -> None:
    extra = sorted(set(table) - allowed)
    if extra:
        where = f"{key}.{extra[0]}" if key else extra[0]
        raise ValidationError(where, "unknown key")


def _arm(table: dict, key: str):
    if not isinstance(table, dict):
        raise ValidationError(key, "must be a table")
    kind = _require(table, "kind", key)
    if kind not in _ARM_FIELDS:
        raise ValidationError(f"{key}.kind", f"unknown arm kind {kind!r}")
    _no_extras(table, _ARM_FIELDS[kind] | {"kind"}, key)
    args = {f: _require(table, f, key) for f in sorted(_ARM_FIELDS[kind])}
    try:
        if kind == "bernoulli":
            return Bernoulli(float(args["p"]))
        if kind == "discrete":
            return DiscretePoints(tuple(args["values"]), tuple(args["probs"]))
        if kind == "point_mass":
            return PointMass(float(args["v"]))
        if kind == "shifted":
            base = _arm(args["base"], f"{key}.base")
            if not isinstance(base, (Bernoulli, DiscretePoints, PointMass, ShiftedMixture)):
                raise ValidationError(f"{key}.base", "must be a scalar reward law")
            return ShiftedMixture(base, float(args["keep_prob"]))
        if kind == "discrete_feature":
            return DiscreteFeature(tuple(tuple(p) for p in args["points"]), tuple(args["probs"]))
        if kind == "point_mass_feature":
            return PointMassFeature(tuple(args["v"]))
        return SphericalGaussian(tuple(args["mean"]), float(args["variance"]))
    except ValidationError:
        raise
    except (ValueError, TypeError) as e:
        raise ValidationError(key, str(e)) from None


def _bandit(table: dict):
    if not isinstance(table, dict):
        raise ValidationError("bandit", "must be a table")
    kind = table.get("kind", "stochastic")
    _no_extras(table, {"kind", "arms", "contexts"}, "bandit")
    arms = [_arm(a, f"bandit.arms[{i}]") for i, a in enumerate(_require(table, "arms", "bandit"))]
    scalar = [type(a).__name__ for a in arms if isinstance(a, (Bernoulli, DiscretePoints, PointMass, ShiftedMixture))]
    try:
        if kind == "stochastic":
            if len(scalar) != len(arms):
                raise ValidationError("bandit.arms", "stochastic bandits take scalar reward laws")
            if "contexts" in table:
                raise ValidationError("bandit.contexts", "only contextual bandits have contexts")
            return StochasticBandit(tuple(arms))
        if kind == "contextual":
            if scalar:
                raise ValidationError("bandit.arms", "contextual bandits take feature laws")
            ctx = _require(table, "contexts", "bandit")
            return ContextualBandit(tuple(arms), tuple(tuple(float(v) for v in x) for x in ctx))
    except ValidationError:
        raise
    except (ValueError, TypeError) as e:
        raise ValidationError("bandit", str(e)) from None
    raise ValidationError("bandit.kind", f"unknown bandit kind {kind!r}")


def _player(table: dict, key: str) -> PlayerSpec:
    if not isinstance(table, dict):
        raise ValidationError(key, "must be a table")
    _no_extras(table, _PLAYER_FIELDS, key)
    policy = _require(table, "policy", key)
    coeffs = table.get("coefficients")
    return PlayerSpec(
        policy=policy,
        alpha=None if "alpha" not in table else float(table["alpha"]),
        gamma=None if "gamma" not in table else float(table["gamma"]),
        target=None if "target" not in table else int(table["target"]),
        coefficients=None if coeffs is None else tuple(float(c) for c in coeffs),
        visibility=table.get("visibility"),
    )


def config_from_dict(doc: dict) -> SimulationConfig:
    _no_extras(doc, _TOP_FIELDS, "")
    m = doc.get("metrics", {})
    _no_extras(m, _METRIC_FIELDS, "metrics")
    metrics = MetricOptions(
        counterfactuals=bool(m.get("counterfactuals", True)),
        log_base=float(m.get("log_base", 1.1)),
        checkpoints=tuple(int(c) for c in m.get("checkpoints", ())),
        record_history=bool(m.get("record_history", False)),
    )
    players = [_player(p, f"players[{i}]") for i, p in enumerate(_require(doc, "players", ""))]
    horizon = _require(doc, "horizon", "")
    if not isinstance(horizon, int):
        raise ValidationError("horizon", "must be an integer")
    cfg = SimulationConfig(
        bandit=_bandit(_require(doc, "bandit", "")),
        players=tuple(players),
        horizon=horizon,
        replicas=int(doc.get("replicas", 1)),
        root_seed=int(doc.get("root_seed", 0)),
        metrics=metrics,
    )
    validate(cfg)
    return cfg


def parse_config_text(text: str) -> SimulationConfig:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ParseError(str(e)) from None
    return config_from_dict(doc)


def parse_config(source: Union[str, os.PathLike]) -> SimulationConfig:
    """Parse a scenario from a file path, or from TOML text if ``source`` has a newline."""
    if isinstance(source, str) and "\n" in source:
        return parse_config_text(source)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from None
    try:
        return parse_config_text(text)
    except ParseError as e:
        raise ParseError(f"{path}: {e}") from None


def _arm_dict(a) -> dict:
    if isinstance(a, Bernoulli):
        return {"kind": "bernoulli", "p": a.p}
    if isinstance(a, DiscretePoints):
        return {"kind": "discrete", "values": list(a.values), "probs": list(a.probs)}
    if isinstance(a, PointMass):
        return {"kind": "point_mass", "v": a.v}
    if isinstance(a, ShiftedMixture):
        return {"kind": "shifted", "keep_prob": a.keep_prob, "base": _arm_dict(a.base)}
    if isinstance(a, DiscreteFeature):
        return {"kind": "discrete_feature", "points": [list(p) for p in a.points], "probs": list(a.probs)}
    if isinstance(a, PointMassFeature):
        return {"kind": "point_mass_feature", "v": list(a.v)}
    if isinstance(a, SphericalGaussian):
        return {"kind": "gaussian", "mean": list(a.mean), "variance": a.variance}
    raise TypeError(f"cannot serialize {a!r}")


def config_to_dict(cfg: SimulationConfig) -> dict:
    b = cfg.bandit
    bandit: dict = {"kind": "contextual" if isinstance(b, ContextualBandit) else "stochastic"}
    if isinstance(b, ContextualBandit):
        bandit["contexts"] = [list(x) for x in b.contexts]
    bandit["arms"] = [_arm_dict(a) for a in b.arms]
    players = []
    for p in cfg.players:
        d = {"policy": p.policy}
        for name in ("alpha", "gamma", "target", "visibility"):
            if getattr(p, name) is not None:
                d[name] = getattr(p, name)
        if p.coefficients is not None:
            d["coefficients"] = list(p.coefficients)
        players.append(d)
    m = cfg.metrics
    return {
        "horizon": cfg.horizon,
        "replicas": cfg.replicas,
        "root_seed": cfg.root_seed,
        "metrics": {
            "counterfactuals": m.counterfactuals,
            "log_base": m.log_base,
            "checkpoints": list(m.checkpoints),
            "record_history": m.record_history,
        },
        "bandit": bandit,
        "players": players,
    }


def serialize_config(cfg: SimulationConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def schema_text() -> str:
    return SCHEMA
