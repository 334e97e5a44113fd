#!/usr/bin/env python3
"""Wall-clock scaling of the bounded-until sweep in the step bound.

Each sweep applies the per-state removal optimizer once per state, so the
total time should grow linearly with the bound. Prints per-step costs and
the spread between the cheapest and the most expensive run.

    python scripts/bench_bounded_until.py [--states 50] [--grade 2]
"""

import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from potl.engine import prob_bounded_until
from potl.generate import scaling_model


def measure(model, sat1, sat2, bound, grade, repeats=3):
    best = None
    for _ in range(repeats):
        start = time.perf_counter()
        prob_bounded_until(model, sat1, sat2, bound, grade, "min")
        elapsed = time.perf_counter() - start
        best = elapsed if best is None else min(best, elapsed)
    return best


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--states", type=int, default=50)
    parser.add_argument("--grade", type=int, default=2)
    parser.add_argument("--bounds", type=int, nargs="+", default=[100, 200, 400])
    args = parser.parse_args()

    model = scaling_model(args.states)
    sat1 = frozenset(q for q in model.states if "a" in model.label_of(q)) | frozenset(
        model.states[: args.states // 2]
    )
    sat2 = frozenset(q for q in model.states if "b" in model.label_of(q))

    rates = []
    print(f"{'bound':>8} {'seconds':>10} {'sec/step':>12}")
    for bound in args.bounds:
        elapsed = measure(model, sat1, sat2, bound, args.grade)
        rates.append(elapsed / bound)
        print(f"{bound:>8} {elapsed:>10.4f} {elapsed / bound:>12.6f}")
    spread = max(rates) / min(rates)
    print(f"per-step spread: {spread:.3f}x (1.0 = perfectly linear)")


if __name__ == "__main__":
    main()
