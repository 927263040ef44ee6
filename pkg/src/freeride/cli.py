"""Command-line entry point: ``freeride run|preset|verify|schema``."""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from .bandits import ContextualBandit
from .config import parse_config, schema_text, serialize_config
from .engine import SimulationConfig, SimulationResult, metrics_csv, run_replicas
from .errors import FreerideError
from .plotting import regret_svg
from .presets import PRESETS, get_preset
from .theory import gamma_threshold_contextual, gamma_threshold_stochastic
from .verify import run_suite


def summarize(cfg: SimulationConfig, res: SimulationResult, seconds: float | None = None) -> str:
    m = res.metrics
    n = len(cfg.players)
    gaps = cfg.bandit.player_gaps(n)
    kind = "contextual" if isinstance(cfg.bandit, ContextualBandit) else "stochastic"
    lines = [
        f"{kind} bandit, {cfg.bandit.n_arms} arms, {n} players",
        f"horizon T={cfg.horizon}, replicas={cfg.replicas}, root_seed={cfg.root_seed}",
    ]
    if seconds is not None:
        lines.append(f"wall time {seconds:.1f} s")
    lines.append("")
    lines.append("player  policy           gap        pseudo-regret (mean +- std)   realized regret (mean +- std)")
    for p, spec in enumerate(cfg.players):
        g = gaps[p]
        lines.append(
            f"{p + 1:>6}  {spec.policy:<15} {g.delta:9.6g}  "
            f"{m.pseudo_mean[-1, p]:14.6g} +- {m.pseudo_std[-1, p]:<11.6g}  "
            f"{m.realized_mean[-1, p]:14.6g} +- {m.realized_std[-1, p]:<11.6g}"
            + ("  (tied optimum)" if g.tied else "")
        )
    lines.append("")
    d1 = gaps[0].delta
    if d1 > 0:
        if 0 < d1 <= 2:
            lines.append(f"stochastic gamma threshold 2 ln2 / gap^2 (player 1) = {gamma_threshold_stochastic(d1):.9g}")
        fr = cfg.players[0]
        if fr.coefficients is not None:
            lines.append(
                f"contextual gamma threshold 8 <c,c> ln2 / gap^2 (player 1) = "
                f"{gamma_threshold_contextual(fr.coefficients, d1):.9g}"
            )
        if fr.gamma is not None:
            lines.append(f"player 1 gamma = {fr.gamma:.9g}")
    return "\n".join(lines) + "\n"


def write_outputs(cfg: SimulationConfig, res: SimulationResult, out: Path, seconds: float | None = None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    m = res.metrics
    (out / "metrics.csv").write_text(metrics_csv(m))
    (out / "summary.txt").write_text(summarize(cfg, res, seconds))
    labels = [f"player {p + 1} ({s.policy})" for p, s in enumerate(cfg.players)]
    series = m.realized_mean.T if cfg.metrics.counterfactuals else m.pseudo_mean.T
    title = "mean realized regret" if cfg.metrics.counterfactuals else "mean pseudo-regret"
    (out / "regret.svg").write_text(regret_svg(m.checkpoints, series, labels, title=title))


def _simulate(cfg: SimulationConfig, out: Path) -> None:
    t0 = time.perf_counter()
    res = run_replicas(cfg)
    dt = time.perf_counter() - t0
    write_outputs(cfg, res, out, dt)
    print(summarize(cfg, res, dt), end="")
    print(f"wrote {out}/metrics.csv, summary.txt, regret.svg")


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, root_seed=args.seed)
    _simulate(cfg, Path(args.out))
    return 0


def cmd_preset(args) -> int:
    configs = get_preset(args.name).configs(seed=args.seed or 0, full_scale=args.full_scale)
    out = Path(args.out)
    for label, cfg in configs.items():
        target = out if len(configs) == 1 else out / label
        target.mkdir(parents=True, exist_ok=True)
        (target / "config.toml").write_text(serialize_config(cfg))
        if len(configs) > 1:
            print(f"== {label}")
        _simulate(cfg, target)
    return 0


def cmd_verify(args) -> int:
    checks = run_suite(args.suite)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


def cmd_schema(args) -> int:
    print(schema_text(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freeride", description="Multi-agent bandit simulations with free riders.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario file")
    r.add_argument("config")
    r.add_argument("--out", default="out")
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_run)

    p = sub.add_parser("preset", help="simulate a named scenario")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int)
    p.add_argument("--full-scale", action="store_true", help="50 players, 30 arms, d=10 contextual instance (slow)")
    p.set_defaults(func=cmd_preset)

    v = sub.add_parser("verify", help="run numerical checks")
    v.add_argument("suite", help="kl | ucb_floor | coupling | all")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("schema", help="print the scenario file schema")
    s.set_defaults(func=cmd_schema)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FreerideError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
