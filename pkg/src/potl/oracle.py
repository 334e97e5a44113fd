"""Exact ground truth over arbitrary-precision rationals.

Everything here trades speed for certainty: probabilities come from the
model's exact rationals, removal strategies are enumerated exhaustively,
fixed-strategy probabilities are computed by finite unrolling or Gaussian
elimination, and optima are pointwise extrema over the enumeration. Meant
for desk-scale models; the enumeration refuses to run past a limit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from .model import Edge, ModelError, Pots, edges_of, prune
from .obstruction import MemorylessStrategy
from .syntax import (
    And,
    Atom,
    BoundedRelease,
    BoundedUntil,
    FalseConst,
    Implies,
    Next,
    Not,
    ObstructQuery,
    Or,
    PathFormula,
    Release,
    StateFormula,
    TrueConst,
    Until,
)

DEFAULT_LIMIT = 10**6

ZERO = Fraction(0)
ONE = Fraction(1)


class EnumerationLimit(RuntimeError):
    """The strategy product space exceeds the configured limit."""

    def __init__(self, count: int, limit: int):
        super().__init__(
            f"{count} strategies exceed the enumeration limit of {limit}"
        )
        self.count = count
        self.limit = limit


# -- cylinder measure ---------------------------------------------------------


def cylinder_measure(model: Pots, prefix: Sequence[str]) -> Fraction:
    """Exact measure of all infinite paths extending the given finite
    prefix: the product of its transition probabilities."""
    if not prefix:
        raise ModelError("a path prefix needs at least one state")
    for q in prefix:
        model.state_index(q)
    out = ONE
    for q, r in zip(prefix, prefix[1:]):
        p = model.prob_exact(q, r)
        if p == 0:
            raise ModelError(f"prefix steps through a missing edge ({q}, {r})")
        out *= p
    return out


# -- strategy enumeration ------------------------------------------------------


def removal_options(model: Pots, q: str, budget: int) -> list[tuple[Edge, ...]]:
    """All strict removal subsets at ``q`` within the budget, empty set
    first, then by size and edge order."""
    edges = edges_of(model, q)
    options = []
    for size in range(len(edges)):  # strict: never all of them
        for combo in itertools.combinations(range(len(edges)), size):
            if sum(model.cost_of(*edges[i]) for i in combo) <= budget:
                options.append(tuple(edges[i] for i in combo))
    return options


def count_strategies(model: Pots, budget: int) -> int:
    count = 1
    for q in model.states:
        count *= len(removal_options(model, q, budget))
    return count


def enumerate_strategies(
    model: Pots, budget: int, limit: int = DEFAULT_LIMIT
) -> Iterator[MemorylessStrategy]:
    """Every memoryless strategy of the given grade, as the cartesian
    product of per-state removal options. Raises :class:`EnumerationLimit`
    up front when the product is too large."""
    per_state = [removal_options(model, q, budget) for q in model.states]
    count = 1
    for options in per_state:
        count *= len(options)
    if count > limit:
        raise EnumerationLimit(count, limit)
    for assignment in itertools.product(*per_state):
        removal = {
            q: frozenset(removed)
            for q, removed in zip(model.states, assignment)
            if removed
        }
        yield MemorylessStrategy(grade=budget, removal=removal)


# -- exact fixed-strategy probabilities ----------------------------------------


def _solve(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination over rationals for a square nonsingular system."""
    n = len(matrix)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ArithmeticError("singular linear system in exact solver")
        a[col], a[pivot] = a[pivot], a[col]
        inv = ONE / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [v - factor * w for v, w in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]


def _pruned(model: Pots, strategy: MemorylessStrategy) -> Pots:
    removed = strategy.all_removed()
    return prune(model, removed) if removed else model


def _backward_reachable(
    model: Pots, targets: frozenset[str], through: frozenset[str]
) -> frozenset[str]:
    """States with a positive-probability path to ``targets`` whose
    intermediate states all lie in ``through``."""
    reached = set(targets)
    frontier = list(targets)
    while frontier:
        q = frontier.pop()
        for p in model.pred(q):
            if p not in reached and p in through:
                reached.add(p)
                frontier.append(p)
    return frozenset(reached)


def _reach_exact(
    pruned: Pots, through: frozenset[str], targets: frozenset[str]
) -> dict[str, Fraction]:
    """Exact probability of hitting ``targets`` while travelling through
    ``through`` only, per start state, on an already-pruned chain."""
    values = {q: ZERO for q in pruned.states}
    for q in targets:
        values[q] = ONE
    can = _backward_reachable(pruned, targets, through)
    unknowns = [q for q in pruned.states if q in through and q in can and q not in targets]
    if not unknowns:
        return values
    index = {q: i for i, q in enumerate(unknowns)}
    matrix = [[ZERO] * len(unknowns) for _ in unknowns]
    rhs = [ZERO] * len(unknowns)
    for q in unknowns:
        i = index[q]
        matrix[i][i] = ONE
        for r in pruned.succ(q):
            p = pruned.prob_exact(q, r)
            if r in targets:
                rhs[i] += p
            elif r in index:
                matrix[i][index[r]] -= p
    solution = _solve(matrix, rhs)
    for q, v in zip(unknowns, solution):
        values[q] = v
    return values


def _stable_core(pruned: Pots, region: frozenset[str]) -> frozenset[str]:
    """Largest subset of ``region`` every state of which keeps full
    probability mass inside the subset; shrinks to a fixpoint in at most
    |region| rounds."""
    core = set(region)
    changed = True
    while changed:
        changed = False
        for q in list(core):
            mass = sum(
                (pruned.prob_exact(q, r) for r in pruned.succ(q) if r in core),
                ZERO,
            )
            if mass != 1:
                core.discard(q)
                changed = True
    return frozenset(core)


def exact_next(
    model: Pots, strategy: MemorylessStrategy, sat_body: frozenset[str]
) -> dict[str, Fraction]:
    pruned = _pruned(model, strategy)
    return {
        q: sum(
            (pruned.prob_exact(q, r) for r in pruned.succ(q) if r in sat_body),
            ZERO,
        )
        for q in pruned.states
    }


def exact_bounded_until(
    model: Pots,
    strategy: MemorylessStrategy,
    sat1: frozenset[str],
    sat2: frozenset[str],
    bound: int,
) -> dict[str, Fraction]:
    pruned = _pruned(model, strategy)
    x = {q: (ONE if q in sat2 else ZERO) for q in pruned.states}
    for _ in range(bound):
        nxt = {}
        for q in pruned.states:
            if q in sat2:
                nxt[q] = ONE
            elif q not in sat1:
                nxt[q] = ZERO
            else:
                nxt[q] = sum(
                    (pruned.prob_exact(q, r) * x[r] for r in pruned.succ(q)),
                    ZERO,
                )
        x = nxt
    return x


def exact_until(
    model: Pots,
    strategy: MemorylessStrategy,
    sat1: frozenset[str],
    sat2: frozenset[str],
) -> dict[str, Fraction]:
    pruned = _pruned(model, strategy)
    through = frozenset(sat1) - frozenset(sat2)
    return _reach_exact(pruned, through, frozenset(sat2))


def exact_bounded_release(
    model: Pots,
    strategy: MemorylessStrategy,
    sat1: frozenset[str],
    sat2: frozenset[str],
    bound: int,
) -> dict[str, Fraction]:
    pruned = _pruned(model, strategy)
    both = frozenset(sat1) & frozenset(sat2)
    x = {q: (ONE if q in sat2 else ZERO) for q in pruned.states}
    for _ in range(bound):
        nxt = {}
        for q in pruned.states:
            if q not in sat2:
                nxt[q] = ZERO
            elif q in both:
                nxt[q] = ONE
            else:
                nxt[q] = sum(
                    (pruned.prob_exact(q, r) * x[r] for r in pruned.succ(q)),
                    ZERO,
                )
        x = nxt
    return x


def exact_release(
    model: Pots,
    strategy: MemorylessStrategy,
    sat1: frozenset[str],
    sat2: frozenset[str],
) -> dict[str, Fraction]:
    """Release splits into two disjoint events: hitting a state satisfying
    both operands while staying in the right operand, or staying in the
    right operand (and off the left one) forever. The second event's mass
    concentrates on the no-leak core of that region."""
    pruned = _pruned(model, strategy)
    sat1, sat2 = frozenset(sat1), frozenset(sat2)
    both = sat1 & sat2
    within = sat2 - sat1

    hit = _reach_exact(pruned, within, both)
    core = _stable_core(pruned, within)
    forever = _reach_exact(pruned, within, core) if core else None

    values = {}
    for q in pruned.states:
        if q in both:
            values[q] = ONE
        elif q not in sat2:
            values[q] = ZERO
        else:
            values[q] = hit[q] + (forever[q] if forever else ZERO)
    return values


def exact_prob(
    model: Pots,
    strategy: MemorylessStrategy,
    theta: PathFormula,
    sat1: frozenset[str],
    sat2: frozenset[str],
) -> dict[str, Fraction]:
    """Exact satisfaction probability of a core path formula under a fixed
    memoryless strategy; operand satisfaction sets are supplied resolved
    (``sat2`` alone matters for next)."""
    if isinstance(theta, Next):
        return exact_next(model, strategy, sat2)
    if isinstance(theta, BoundedUntil):
        return exact_bounded_until(model, strategy, sat1, sat2, theta.bound)
    if isinstance(theta, Until):
        return exact_until(model, strategy, sat1, sat2)
    if isinstance(theta, BoundedRelease):
        return exact_bounded_release(model, strategy, sat1, sat2, theta.bound)
    if isinstance(theta, Release):
        return exact_release(model, strategy, sat1, sat2)
    raise TypeError(f"not a core path formula: {theta!r}")


def exact_bounded_by_paths(
    model: Pots,
    strategy: MemorylessStrategy,
    theta: PathFormula,
    sat1: frozenset[str],
    sat2: frozenset[str],
    start: str,
) -> Fraction:
    """Bounded-operator probability by direct enumeration of minimal
    witnessing prefixes; an independent cross-check for the recursions."""
    pruned = _pruned(model, strategy)
    both = sat1 & sat2

    if isinstance(theta, Next):
        return sum(
            (pruned.prob_exact(start, r) for r in pruned.succ(start) if r in sat2),
            ZERO,
        )

    if isinstance(theta, BoundedUntil):
        def until_walk(q: str, depth: int, measure: Fraction) -> Fraction:
            if q in sat2:
                return measure
            if q not in sat1 or depth == theta.bound:
                return ZERO
            return sum(
                (
                    until_walk(r, depth + 1, measure * pruned.prob_exact(q, r))
                    for r in pruned.succ(q)
                ),
                ZERO,
            )

        return until_walk(start, 0, ONE)

    if isinstance(theta, BoundedRelease):
        def release_walk(q: str, depth: int, measure: Fraction) -> Fraction:
            if q not in sat2:
                return ZERO
            if q in both or depth == theta.bound:
                return measure
            return sum(
                (
                    release_walk(r, depth + 1, measure * pruned.prob_exact(q, r))
                    for r in pruned.succ(q)
                ),
                ZERO,
            )

        return release_walk(start, 0, ONE)

    raise TypeError(f"not a bounded path formula: {theta!r}")


# -- optima ---------------------------------------------------------------------


@dataclass(frozen=True)
class OptimumResult:
    values: Mapping[str, Fraction]
    witnesses: Mapping[str, MemorylessStrategy]


def oracle_optimum(
    model: Pots,
    theta: PathFormula,
    sat1: frozenset[str],
    sat2: frozenset[str],
    budget: int,
    mode: str,
    limit: int = DEFAULT_LIMIT,
) -> OptimumResult:
    """Pointwise min or max of :func:`exact_prob` over every memoryless
    strategy of the grade, with the first strategy attaining each state's
    optimum kept as witness."""
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
    best: dict[str, Fraction] = {}
    witness: dict[str, MemorylessStrategy] = {}
    for strategy in enumerate_strategies(model, budget, limit):
        values = exact_prob(model, strategy, theta, sat1, sat2)
        for q, v in values.items():
            if q not in best or (v < best[q] if mode == "min" else v > best[q]):
                best[q] = v
                witness[q] = strategy
    return OptimumResult(values=best, witnesses=witness)


def step_optimum(
    model: Pots,
    theta: PathFormula,
    sat1: frozenset[str],
    sat2: frozenset[str],
    budget: int,
    mode: str,
) -> dict[str, Fraction]:
    """Exact optimum for next and the step-bounded operators when the
    obstructing player may re-choose removals at every step (the optimum
    over unrestricted strategies, by backward induction). Per-state choices
    are enumerated outright rather than optimized."""
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
    pick = min if mode == "min" else max
    options = {q: removal_options(model, q, budget) for q in model.states}

    def step(q: str, x: Mapping[str, Fraction]) -> Fraction:
        candidates = []
        for removed in options[q]:
            gone = set(removed)
            candidates.append(
                sum(
                    (
                        model.prob_exact(q, r) * x[r]
                        for r in model.succ(q)
                        if (q, r) not in gone
                    ),
                    ZERO,
                )
            )
        return pick(candidates)

    if isinstance(theta, Next):
        indicator = {q: (ONE if q in sat2 else ZERO) for q in model.states}
        return {q: step(q, indicator) for q in model.states}

    if isinstance(theta, BoundedUntil):
        x = {q: (ONE if q in sat2 else ZERO) for q in model.states}
        for _ in range(theta.bound):
            x = {
                q: ONE
                if q in sat2
                else (step(q, x) if q in sat1 else ZERO)
                for q in model.states
            }
        return x

    if isinstance(theta, BoundedRelease):
        both = sat1 & sat2
        x = {q: (ONE if q in sat2 else ZERO) for q in model.states}
        for _ in range(theta.bound):
            x = {
                q: (ONE if q in both else (step(q, x) if q in sat2 else ZERO))
                for q in model.states
            }
        return x

    raise TypeError(f"step_optimum handles next and bounded operators: {theta!r}")


# -- formula-level exact satisfaction -------------------------------------------


def oracle_sat(
    model: Pots,
    phi: StateFormula,
    limit: int = DEFAULT_LIMIT,
) -> frozenset[str]:
    """Exact satisfaction set of a (desugared) state formula. Unbounded
    operators take the optimum over the memoryless enumeration; bounded
    ones take the step-wise optimum, which matches strategies free to
    re-choose per step."""
    if isinstance(phi, TrueConst):
        return frozenset(model.states)
    if isinstance(phi, FalseConst):
        return frozenset()
    if isinstance(phi, Atom):
        return frozenset(q for q in model.states if phi.name in model.label_of(q))
    if isinstance(phi, Not):
        return frozenset(model.states) - oracle_sat(model, phi.body, limit)
    if isinstance(phi, And):
        return oracle_sat(model, phi.left, limit) & oracle_sat(model, phi.right, limit)
    if isinstance(phi, Or):
        return oracle_sat(model, phi.left, limit) | oracle_sat(model, phi.right, limit)
    if isinstance(phi, Implies):
        left = oracle_sat(model, phi.left, limit)
        right = oracle_sat(model, phi.right, limit)
        return (frozenset(model.states) - left) | right
    if isinstance(phi, ObstructQuery):
        values = oracle_query_values(model, phi, limit)
        return frozenset(q for q, v in values.items() if _compare(v, phi.cmp, phi.threshold))
    raise TypeError(f"not a desugared state formula: {phi!r}")


def oracle_query_values(
    model: Pots, phi: ObstructQuery, limit: int = DEFAULT_LIMIT
) -> dict[str, Fraction]:
    """The per-state optimum the query's comparison is decided against."""
    sat1, sat2 = _operand_sets(model, phi.body, limit)
    mode = "min" if phi.cmp in ("<", "<=") else "max"
    if isinstance(phi.body, (Next, BoundedUntil, BoundedRelease)):
        return step_optimum(model, phi.body, sat1, sat2, phi.grade, mode)
    return dict(
        oracle_optimum(model, phi.body, sat1, sat2, phi.grade, mode, limit).values
    )


def _operand_sets(
    model: Pots, theta: PathFormula, limit: int
) -> tuple[frozenset[str], frozenset[str]]:
    if isinstance(theta, Next):
        body = oracle_sat(model, theta.body, limit)
        return frozenset(), body
    if isinstance(theta, (Until, BoundedUntil, Release, BoundedRelease)):
        return (
            oracle_sat(model, theta.left, limit),
            oracle_sat(model, theta.right, limit),
        )
    raise TypeError(f"not a core path formula: {theta!r}")


def _compare(value: Fraction, cmp: str, threshold: Fraction) -> bool:
    if cmp == "<":
        return value < threshold
    if cmp == "<=":
        return value <= threshold
    if cmp == ">":
        return value > threshold
    return value >= threshold


def evaluate_strategy(
    model: Pots,
    strategy: MemorylessStrategy,
    theta: PathFormula,
    limit: int = DEFAULT_LIMIT,
) -> dict[str, Fraction]:
    """Exact value of a path formula under a fixed strategy, resolving the
    operand sets exactly first."""
    sat1, sat2 = _operand_sets(model, theta, limit)
    return exact_prob(model, strategy, theta, sat1, sat2)


def qualitative_sets(
    model: Pots,
    theta: PathFormula,
    sat1: frozenset[str],
    sat2: frozenset[str],
    budget: int,
    mode: str,
    limit: int = DEFAULT_LIMIT,
) -> tuple[frozenset[str], frozenset[str]]:
    """Exact zero and one sets of the optimum, for conformance reports."""
    if isinstance(theta, (Next, BoundedUntil, BoundedRelease)):
        values = step_optimum(model, theta, sat1, sat2, budget, mode)
    else:
        values = dict(
            oracle_optimum(model, theta, sat1, sat2, budget, mode, limit).values
        )
    zero = frozenset(q for q, v in values.items() if v == 0)
    one = frozenset(q for q, v in values.items() if v == 1)
    return zero, one
