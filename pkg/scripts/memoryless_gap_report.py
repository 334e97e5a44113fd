#!/usr/bin/env python3
"""Survey where, on a random corpus, a single memoryless removal strategy
cannot match an obstructor who re-chooses removals at every step.

For the unbounded operators the two optima coincide (a stationary choice
is optimal); for the step-bounded ones the re-choosing obstructor can do
strictly better on some instances. This script counts and prints those
instances.

    python scripts/memoryless_gap_report.py [--count 200] [--seed 20260808]
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from potl.generate import corpus
from potl.oracle import oracle_optimum, step_optimum
from potl.syntax import Atom, BoundedRelease, BoundedUntil, print_path


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--count", type=int, default=200)
    parser.add_argument("--seed", type=int, default=20260808)
    parser.add_argument("--bound", type=int, default=4)
    parser.add_argument("--grades", type=int, nargs="+", default=[0, 1, 2, 4])
    args = parser.parse_args()

    thetas = [
        BoundedUntil(Atom("a"), Atom("b"), args.bound),
        BoundedRelease(Atom("a"), Atom("b"), args.bound),
    ]
    checked = 0
    gaps = []
    for i, model in enumerate(corpus(args.seed, args.count)):
        sat1 = frozenset(q for q in model.states if "a" in model.label_of(q))
        sat2 = frozenset(q for q in model.states if "b" in model.label_of(q))
        for grade in args.grades:
            for theta in thetas:
                memoryless = oracle_optimum(model, theta, sat1, sat2, grade, "min").values
                per_step = step_optimum(model, theta, sat1, sat2, grade, "min")
                checked += 1
                for q in model.states:
                    if memoryless[q] != per_step[q]:
                        gaps.append(
                            (i, grade, print_path(theta), q, per_step[q], memoryless[q])
                        )

    print(f"queries checked: {checked}")
    print(f"state-level gaps: {len(gaps)}")
    for i, grade, theta, q, general, memoryless in gaps:
        print(
            f"  model#{i} grade={grade} {theta} at {q}: "
            f"per-step {general} < memoryless {memoryless}"
        )


if __name__ == "__main__":
    main()
