"""Shared helpers for the experiment scripts."""
import time
from pathlib import Path

from freeride.cli import summarize, write_outputs
from freeride.config import serialize_config
from freeride.engine import run_replicas
from freeride.presets import get_preset


def run_preset(name, out, seed=0, full_scale=False):
    """Run every config of a preset, write outputs under ``out``, return {label: result}."""
    results = {}
    configs = get_preset(name).configs(seed=seed, full_scale=full_scale)
    for label, cfg in configs.items():
        target = Path(out) / name / (label if len(configs) > 1 else "")
        target.mkdir(parents=True, exist_ok=True)
        (target / "config.toml").write_text(serialize_config(cfg))
        t0 = time.perf_counter()
        res = run_replicas(cfg)
        dt = time.perf_counter() - t0
        write_outputs(cfg, res, target, dt)
        print(f"== {name}/{label}  ({dt:.1f} s)")
        print(summarize(cfg, res, dt))
        results[label] = res
    return results
