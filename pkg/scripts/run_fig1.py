#!/usr/bin/env python3
"""Ten Bernoulli arms: a count-greedy free rider copying a 2-UCB player.

Prints the regret table at t = 1e4, 5e4, 1e5 and writes CSV/SVG outputs.
"""
import argparse
import math

from _common import run_preset

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--out", default="results")
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

m = run_preset("fig1", args.out, args.seed)["main"].metrics
print(f"{'t':>8} {'free rider':>12} {'UCB':>12} {'UCB / ln t':>12}")
for t in (10_000, 50_000, 100_000):
    i = m.at(t)
    fr, ucb = m.realized_mean[i]
    print(f"{t:>8} {fr:12.3f} {ucb:12.3f} {ucb / math.log(t):12.3f}")
