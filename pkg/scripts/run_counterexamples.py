#!/usr/bin/env python3
"""Counterexamples to naive free riding.

* count-greedy vs sample-augmenting free rider against a give-up UCB opponent,
* the coupled environments that an actions-only observer cannot tell apart,
* explore-then-commit opponents that defeat action-only copying.
"""
import argparse

from freeride.presets import get_preset
from freeride.verify import coupled_traces

from _common import run_preset

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--out", default="results")
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

cps = [3**j for j in range(5, 9)]
for name in ("countgreedy_fail", "samg_vs_giveup"):
    m = run_preset(name, args.out, args.seed)["main"].metrics
    vals = [float(m.pseudo_mean[m.at(t), 0]) for t in cps]
    ratios = [b / a if a > 0 else float("inf") for a, b in zip(vals, vals[1:])]
    print(f"{name}: free-rider pseudo-regret at 3^5..3^8 = {[round(v, 3) for v in vals]}, "
          f"ratios {[round(r, 3) for r in ratios]}")

tr = coupled_traces(get_preset("needcontexts_coupling").configs(seed=args.seed))
same = sum(
    (a[0] == b[0]).all() and (a[1] == b[1]).all() for a, b in zip(tr["A"], tr["B"])
)
print(f"needcontexts_coupling: player-2 traces identical in {same}/{len(tr['A'])} replicas")

res = run_preset("needrewards", args.out, args.seed)
for label, r in res.items():
    print(f"needrewards/{label}: free-rider final pseudo-regret {r.metrics.pseudo_mean[-1, 0]:.2f}")
