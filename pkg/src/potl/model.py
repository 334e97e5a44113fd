"""Probabilistic obstruction structures: finite stochastic transition systems
with a non-negative integer removal cost on every edge.

Probabilities are kept twice: as exact rationals (parsed from the decimal
strings of the model file, used by the exact oracle) and as 64-bit floats
(the engine path). Costs live only on existing edges; absent pairs cost 0
and are never removal candidates.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

MAX_COST = 2**32 - 1
ROW_SUM_TOL = Fraction(1, 10**9)

Edge = tuple[str, str]


class ModelError(ValueError):
    """Raised for malformed model files and illegal model queries."""


@dataclass(frozen=True)
class Pots:
    """A finite state space with an exact stochastic matrix, a labeling and
    an integer removal cost per edge.

    Instances are immutable after construction and safe to share between
    concurrent queries. Construction does not enforce the semantic
    invariants (stochasticity, seriality); see :func:`validate`.
    """

    states: tuple[str, ...]
    initial: str
    prob: Mapping[Edge, Fraction]
    labels: Mapping[str, frozenset[str]]
    cost: Mapping[Edge, int]

    _index: dict = field(init=False, repr=False, compare=False)
    _succ: dict = field(init=False, repr=False, compare=False)
    _pred: dict = field(init=False, repr=False, compare=False)
    _trans_float: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {q: i for i, q in enumerate(self.states)}
        if len(index) != len(self.states):
            raise ModelError("duplicate state identifiers")
        succ: dict[str, list[str]] = {q: [] for q in self.states}
        pred: dict[str, list[str]] = {q: [] for q in self.states}
        for (q, r) in self.prob:
            if q not in index or r not in index:
                raise ModelError(f"edge ({q!r}, {r!r}) references unknown state")
            succ[q].append(r)
            pred[r].append(q)
        for q in self.states:
            succ[q].sort(key=index.__getitem__)
            pred[q].sort(key=index.__getitem__)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_succ", {q: tuple(v) for q, v in succ.items()})
        object.__setattr__(self, "_pred", {q: tuple(v) for q, v in pred.items()})
        object.__setattr__(
            self, "_trans_float", {e: float(p) for e, p in self.prob.items()}
        )

    @classmethod
    def build(
        cls,
        states: Iterable[str],
        initial: str,
        edges: Iterable[tuple[str, str, Fraction | str | int, int]],
        labels: Mapping[str, Iterable[str]] | None = None,
    ) -> "Pots":
        """Assemble a model from an edge list. ``prob`` entries may be exact
        rationals, decimal strings, or ints; floats are rejected to keep the
        exact path exact."""
        states = tuple(states)
        prob: dict[Edge, Fraction] = {}
        cost: dict[Edge, int] = {}
        for frm, to, p, c in edges:
            if isinstance(p, float):
                raise ModelError(
                    f"edge ({frm!r}, {to!r}): probabilities must be exact "
                    "(Fraction, decimal string or int), not float"
                )
            e = (frm, to)
            if e in prob:
                raise ModelError(f"duplicate edge ({frm!r}, {to!r})")
            value = Fraction(p)
            if value <= 0:
                raise ModelError(
                    f"edge ({frm!r}, {to!r}): probability must be positive "
                    "(omit absent edges)"
                )
            prob[e] = value
            cost[e] = int(c)
        lab = {q: frozenset(v) for q, v in (labels or {}).items()}
        for q in lab:
            if q not in states:
                raise ModelError(f"label for unknown state {q!r}")
        return cls(states=states, initial=initial, prob=prob, labels=lab, cost=cost)

    # -- adjacency queries ------------------------------------------------

    def _check_state(self, q: str) -> None:
        if q not in self._index:
            raise ModelError(f"unknown state identifier {q!r}")

    def state_index(self, q: str) -> int:
        self._check_state(q)
        return self._index[q]

    def succ(self, q: str) -> tuple[str, ...]:
        self._check_state(q)
        return self._succ[q]

    def pred(self, q: str) -> tuple[str, ...]:
        self._check_state(q)
        return self._pred[q]

    def trans(self, q: str, r: str) -> float:
        """Float transition probability; 0.0 for absent edges."""
        return self._trans_float.get((q, r), 0.0)

    def prob_exact(self, q: str, r: str) -> Fraction:
        return self.prob.get((q, r), Fraction(0))

    def cost_of(self, q: str, r: str) -> int:
        """Removal cost of an edge; absent pairs cost 0."""
        return self.cost.get((q, r), 0)

    def label_of(self, q: str) -> frozenset[str]:
        self._check_state(q)
        return self.labels.get(q, frozenset())

    def alphabet(self) -> frozenset[str]:
        out: set[str] = set()
        for props in self.labels.values():
            out |= props
        return frozenset(out)


def pre_of(model: Pots, q: str) -> frozenset[str]:
    """States with a positive-probability edge into ``q``."""
    return frozenset(model.pred(q))


def post_of(model: Pots, q: str) -> frozenset[str]:
    """States reachable from ``q`` in one positive-probability step."""
    return frozenset(model.succ(q))


def edges_of(model: Pots, q: str) -> tuple[Edge, ...]:
    """Outgoing edges of ``q`` in the model's state order."""
    return tuple((q, r) for r in model.succ(q))


def validate(model: Pots) -> list[str]:
    """Check stochasticity, seriality, cost and probability ranges.

    Returns an empty list iff the model is well formed; each entry names
    the offending state or edge and the violated rule. Side-effect free.
    """
    report = []
    if model.initial not in model.states:
        report.append(f"initial state {model.initial!r} not in state set")
    for (q, r), p in model.prob.items():
        if not (0 <= p <= 1):
            report.append(f"probability out of [0,1] on edge ({q}, {r}): {p}")
    for (q, r), c in model.cost.items():
        if not (0 <= c <= MAX_COST):
            report.append(f"cost out of range on edge ({q}, {r}): {c}")
    for q in model.states:
        row = sum((model.prob[(q, r)] for r in model.succ(q)), Fraction(0))
        if abs(row - 1) > ROW_SUM_TOL:
            report.append(f"stochasticity at {q}: row sums to {float(row)!r}")
        if not any(model.prob[(q, r)] > 0 for r in model.succ(q)):
            report.append(f"seriality at {q}: no positive-probability successor")
    return report


def prune(model: Pots, removal: Iterable[Edge]) -> Pots:
    """Substochastic view of the model with the given edges deleted.

    The original model is untouched. Removals may empty a state's row;
    strategy-level strictness is checked elsewhere.
    """
    removal = set(removal)
    for e in removal:
        if e not in model.prob:
            raise ModelError(f"cannot remove non-existent edge {e!r}")
    prob = {e: p for e, p in model.prob.items() if e not in removal}
    cost = {e: c for e, c in model.cost.items() if e not in removal}
    return Pots(
        states=model.states,
        initial=model.initial,
        prob=prob,
        labels=model.labels,
        cost=cost,
    )


# -- file format ----------------------------------------------------------

_MODEL_KEYS = {"states", "initial", "labels", "edges"}
_EDGE_KEYS = {"from", "to", "prob", "cost"}
_DECIMAL_RE = re.compile(r"\d+(\.\d+)?$")


def _parse_decimal(text: str, where: str) -> Fraction:
    if not isinstance(text, str) or not _DECIMAL_RE.fullmatch(text):
        raise ModelError(
            f"{where}: prob must be a plain decimal string like \"0.25\", "
            f"got {text!r}"
        )
    return Fraction(text)


def loads_model(text: str) -> Pots:
    """Parse the JSON model format. Unknown keys, duplicate edges and
    references to undeclared states are rejected."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelError("model file must contain a JSON object")
    unknown = set(doc) - _MODEL_KEYS
    if unknown:
        raise ModelError(f"unknown keys in model file: {sorted(unknown)}")
    for key in ("states", "initial", "edges"):
        if key not in doc:
            raise ModelError(f"model file missing key {key!r}")
    states = doc["states"]
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
        raise ModelError('"states" must be a list of strings')
    if len(states) < 1:
        raise ModelError("model must have at least one state")
    state_set = set(states)
    if len(state_set) != len(states):
        raise ModelError("duplicate entries in state list")
    initial = doc["initial"]
    if initial not in state_set:
        raise ModelError(f"initial state {initial!r} not declared")
    labels = doc.get("labels", {})
    if not isinstance(labels, dict):
        raise ModelError('"labels" must be an object')
    for q, props in labels.items():
        if q not in state_set:
            raise ModelError(f"labels reference undeclared state {q!r}")
        if not isinstance(props, list) or not all(isinstance(p, str) for p in props):
            raise ModelError(f"labels of {q!r} must be a list of strings")
    edges = []
    seen: set[Edge] = set()
    if not isinstance(doc["edges"], list):
        raise ModelError('"edges" must be a list')
    for i, entry in enumerate(doc["edges"]):
        where = f"edges[{i}]"
        if not isinstance(entry, dict):
            raise ModelError(f"{where}: must be an object")
        unknown = set(entry) - _EDGE_KEYS
        if unknown:
            raise ModelError(f"{where}: unknown keys {sorted(unknown)}")
        missing = _EDGE_KEYS - set(entry)
        if missing:
            raise ModelError(f"{where}: missing keys {sorted(missing)}")
        frm, to = entry["from"], entry["to"]
        if frm not in state_set or to not in state_set:
            raise ModelError(f"{where}: endpoint not in declared states")
        if (frm, to) in seen:
            raise ModelError(f"{where}: duplicate edge ({frm}, {to})")
        seen.add((frm, to))
        p = _parse_decimal(entry["prob"], where)
        c = entry["cost"]
        if not isinstance(c, int) or isinstance(c, bool) or c < 0:
            raise ModelError(f"{where}: cost must be a non-negative integer")
        edges.append((frm, to, p, c))
    return Pots.build(states, initial, edges, {q: v for q, v in labels.items()})


def load_model(path: str) -> Pots:
    with open(path, "r", encoding="utf-8") as handle:
        return loads_model(handle.read())


def fraction_to_decimal(value: Fraction, max_digits: int = 17) -> str:
    """Render a rational in [0, 1] as a decimal string, exactly when the
    denominator divides a power of ten, else rounded to ``max_digits``."""
    den = value.denominator
    while den % 2 == 0:
        den //= 2
    while den % 5 == 0:
        den //= 5
    if den == 1:
        # terminating expansion: scale until integral
        digits = 0
        scaled = value
        while scaled.denominator != 1 and digits < 40:
            scaled *= 10
            digits += 1
        text = str(scaled.numerator).rjust(digits + 1, "0")
        if digits == 0:
            return text
        return text[:-digits].rjust(1, "0") + "." + text[-digits:]
    scaled = round(value * 10**max_digits)
    text = str(scaled).rjust(max_digits + 1, "0")
    return (text[:-max_digits] + "." + text[-max_digits:]).rstrip("0")


def dumps_model(model: Pots) -> str:
    doc = {
        "states": list(model.states),
        "initial": model.initial,
        "labels": {
            q: sorted(model.labels[q])
            for q in model.states
            if model.labels.get(q)
        },
        "edges": [
            {
                "from": q,
                "to": r,
                "prob": fraction_to_decimal(model.prob[(q, r)]),
                "cost": model.cost[(q, r)],
            }
            for q in model.states
            for r in model.succ(q)
        ],
    }
    return json.dumps(doc, indent=2)


def save_model(model: Pots, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_model(model) + "\n")
