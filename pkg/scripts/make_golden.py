#!/usr/bin/env python3
"""Regenerate the exact-oracle verdict file for the attack-graph model.

The engine is never trusted for these verdicts: everything here comes out
of the rational oracle. Run from the repository root:

    python scripts/make_golden.py
"""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from potl.model import load_model
from potl.oracle import oracle_query_values, oracle_sat
from potl.syntax import parse, print_state

ROOT = pathlib.Path(__file__).resolve().parent.parent
FORMULAS = [
    "<<4 < 0.1>> F (r2 | r3)",
    "<<5 < 0.2>> F r3",
]


def main() -> None:
    model = load_model(str(ROOT / "models" / "attack-graph.json"))
    entries = []
    for text in FORMULAS:
        phi = parse(text)
        satisfied = oracle_sat(model, phi)
        values = oracle_query_values(model, phi)
        entries.append(
            {
                "formula": text,
                "parsed": print_state(phi),
                "sat": sorted(satisfied),
                "initial": model.initial,
                "satisfied": model.initial in satisfied,
                "values": {
                    q: f"{v.numerator}/{v.denominator}" for q, v in sorted(values.items())
                },
            }
        )
    out = ROOT / "tests" / "golden" / "attack_graph_oracle.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"model": "models/attack-graph.json", "queries": entries}, indent=2) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
