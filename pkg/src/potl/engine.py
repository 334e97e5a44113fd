"""Satisfaction-set computation over the float path.

Formulas are processed bottom-up; each obstruction query turns into a
per-state optimum over removal strategies, computed operator by operator:
one-step sums for next, finite sweeps for the bounded operators, and
fixed-point iteration (or policy iteration with a power-method inner
solve) for unbounded until and release.

Measure convention: pruned probability mass vanishes, nothing is
renormalized, and release is never complemented through until.

Every entry point is a pure function of (model, formula, options); models
are immutable, so concurrent queries against a shared model are safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .model import Pots, prune
from .obstruction import (
    MemorylessStrategy,
    Removal,
    best_removal,
    obstruct_pred,
)
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
    print_path,
    print_state,
)

NEG_CLAMP = 1e-12


class ConvergenceError(RuntimeError):
    """Fixed-point iteration failed to meet the tolerance in time."""


@dataclass(frozen=True)
class EngineOptions:
    epsilon: float = 1e-10
    max_iterations: int = 10**6
    solver: str = "vi"  # "vi" value iteration | "pi" policy iteration + power method

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.solver not in ("vi", "pi"):
            raise ValueError(f"solver must be 'vi' or 'pi', got {self.solver!r}")


DEFAULT_OPTIONS = EngineOptions()


def _clamp(x: float) -> float:
    if abs(x) < NEG_CLAMP:
        return 0.0
    if x > 1.0:
        return 1.0 if x - 1.0 < NEG_CLAMP else x
    return x


def clamp_vector(values: dict[str, float]) -> dict[str, float]:
    return {q: _clamp(v) for q, v in values.items()}


@dataclass
class Stats:
    iterations: int = 0
    warnings: list = field(default_factory=list)


def _sweep_value(
    model: Pots, q: str, budget: int, x: Mapping[str, float], mode: str
) -> float:
    if mode == "min":
        return best_removal(model, q, budget, x)[1]
    return sum(model.trans(q, r) * x[r] for r in model.succ(q))


# -- next ---------------------------------------------------------------------


def prob_next(
    model: Pots, sat_body: frozenset[str], budget: int, mode: str
) -> dict[str, float]:
    indicator = {q: (1.0 if q in sat_body else 0.0) for q in model.states}
    return clamp_vector(
        {q: _sweep_value(model, q, budget, indicator, mode) for q in model.states}
    )


# -- bounded until / release ---------------------------------------------------


def _bounded_sweeps(
    model: Pots,
    sat1: frozenset[str],
    sat2: frozenset[str],
    bound: int,
    budget: int,
    mode: str,
    release: bool,
    stats: Stats | None = None,
    keep_previous: bool = False,
) -> tuple[dict[str, float], dict[str, float]]:
    """Runs the step recursion; returns (final, previous) vectors. The
    previous vector backs witness extraction (the first decision taken
    from the full horizon)."""
    both = sat1 & sat2
    x = {q: (1.0 if q in sat2 else 0.0) for q in model.states}
    prev = x
    for _ in range(bound):
        prev = x
        nxt = {}
        for q in model.states:
            if release:
                if q not in sat2:
                    nxt[q] = 0.0
                elif q in both:
                    nxt[q] = 1.0
                else:
                    nxt[q] = _sweep_value(model, q, budget, x, mode)
            else:
                if q in sat2:
                    nxt[q] = 1.0
                elif q not in sat1:
                    nxt[q] = 0.0
                else:
                    nxt[q] = _sweep_value(model, q, budget, x, mode)
        x = nxt
        if stats is not None:
            stats.iterations += 1
    return x, (prev if keep_previous else x)


def prob_bounded_until(
    model: Pots,
    sat1: frozenset[str],
    sat2: frozenset[str],
    bound: int,
    budget: int,
    mode: str,
    stats: Stats | None = None,
) -> dict[str, float]:
    x, _ = _bounded_sweeps(model, sat1, sat2, bound, budget, mode, False, stats)
    return clamp_vector(x)


def prob_bounded_release(
    model: Pots,
    sat1: frozenset[str],
    sat2: frozenset[str],
    bound: int,
    budget: int,
    mode: str,
    stats: Stats | None = None,
) -> dict[str, float]:
    x, _ = _bounded_sweeps(model, sat1, sat2, bound, budget, mode, True, stats)
    return clamp_vector(x)


# -- unbounded until -------------------------------------------------------------


def _backward_reachable(
    model: Pots, targets: frozenset[str], through: frozenset[str]
) -> frozenset[str]:
    reached = set(targets)
    frontier = list(targets)
    while frontier:
        q = frontier.pop()
        for p in model.pred(q):
            if p not in reached and p in through:
                reached.add(p)
                frontier.append(p)
    return frozenset(reached)


def _until_frame(
    model: Pots, sat1: frozenset[str], sat2: frozenset[str]
) -> tuple[dict[str, float], list[str]]:
    """Initial vector and undetermined states. States that cannot reach the
    target through the left operand in the unpruned graph are pinned to 0,
    which is sound for both modes."""
    can = _backward_reachable(model, sat2, sat1 - sat2)
    x = {q: (1.0 if q in sat2 else 0.0) for q in model.states}
    undetermined = [q for q in model.states if q in (sat1 - sat2) and q in can]
    return x, undetermined


def _iterate_to_fixpoint(
    model: Pots,
    x: dict[str, float],
    undetermined: list[str],
    budget: int,
    mode: str,
    opts: EngineOptions,
    stats: Stats | None,
) -> dict[str, float]:
    for _ in range(opts.max_iterations):
        delta = 0.0
        nxt = dict(x)
        for q in undetermined:
            v = _sweep_value(model, q, budget, x, mode)
            delta = max(delta, abs(v - x[q]))
            nxt[q] = v
        x = nxt
        if stats is not None:
            stats.iterations += 1
        if delta < opts.epsilon:
            return x
    raise ConvergenceError(
        f"no convergence within {opts.max_iterations} iterations"
    )


def _evaluate_policy(
    model: Pots,
    policy: Mapping[str, Removal],
    x: dict[str, float],
    undetermined: list[str],
    opts: EngineOptions,
    stats: Stats | None,
    from_above: bool,
) -> dict[str, float]:
    """Power-method solve of the linear system induced by a fixed removal
    policy: determined states act as identity rows, undetermined rows are
    the pruned transition rows."""
    survivors = {}
    for q in undetermined:
        gone = set(policy.get(q, ()))
        survivors[q] = [
            (r, model.trans(q, r)) for r in model.succ(q) if (q, r) not in gone
        ]
    x = dict(x)
    for q in undetermined:
        x[q] = 1.0 if from_above else 0.0
    for _ in range(opts.max_iterations):
        delta = 0.0
        nxt = dict(x)
        for q in undetermined:
            v = sum(p * x[r] for r, p in survivors[q])
            delta = max(delta, abs(v - x[q]))
            nxt[q] = v
        x = nxt
        if stats is not None:
            stats.iterations += 1
        if delta < opts.epsilon:
            return x
    raise ConvergenceError(
        f"policy evaluation did not converge within {opts.max_iterations} iterations"
    )


_POLICY_ROUNDS = 10_000


def _policy_iteration(
    model: Pots,
    x0: dict[str, float],
    undetermined: list[str],
    budget: int,
    mode: str,
    opts: EngineOptions,
    stats: Stats | None,
    from_above: bool,
) -> dict[str, float]:
    if mode == "max":
        return _evaluate_policy(model, {}, x0, undetermined, opts, stats, from_above)
    policy: dict[str, Removal] = {q: () for q in undetermined}
    for _ in range(_POLICY_ROUNDS):
        x = _evaluate_policy(model, policy, x0, undetermined, opts, stats, from_above)
        # conservative improvement: the inner solve carries up to about an
        # epsilon of residual, so switching on smaller gains just makes
        # near-tied argmins flip forever
        gate = 10 * opts.epsilon
        improved = {}
        for q in undetermined:
            removal, value = best_removal(model, q, budget, x)
            improved[q] = removal if value < x[q] - gate else policy[q]
        if improved == policy:
            return x
        policy = improved
    raise ConvergenceError("policy iteration failed to stabilize")


def prob_until(
    model: Pots,
    sat1: frozenset[str],
    sat2: frozenset[str],
    budget: int,
    mode: str,
    opts: EngineOptions = DEFAULT_OPTIONS,
    stats: Stats | None = None,
) -> dict[str, float]:
    """Least fixed point of the bounded-until update, from below."""
    x, undetermined = _until_frame(model, sat1, sat2)
    if opts.solver == "pi":
        x = _policy_iteration(
            model, x, undetermined, budget, mode, opts, stats, from_above=False
        )
    else:
        x = _iterate_to_fixpoint(model, x, undetermined, budget, mode, opts, stats)
    return clamp_vector(x)


# -- unbounded release -------------------------------------------------------------


def _release_frame(
    model: Pots, sat1: frozenset[str], sat2: frozenset[str]
) -> tuple[dict[str, float], list[str]]:
    both = sat1 & sat2
    x = {}
    undetermined = []
    for q in model.states:
        if q in both:
            x[q] = 1.0
        elif q not in sat2:
            x[q] = 0.0
        else:
            x[q] = 1.0
            undetermined.append(q)
    return x, undetermined


def prob_release(
    model: Pots,
    sat1: frozenset[str],
    sat2: frozenset[str],
    budget: int,
    mode: str,
    opts: EngineOptions = DEFAULT_OPTIONS,
    stats: Stats | None = None,
) -> dict[str, float]:
    """Greatest fixed point of the bounded-release update, from above,
    pinned 1 where both operands hold and 0 outside the right operand."""
    x, undetermined = _release_frame(model, sat1, sat2)
    if opts.solver == "pi":
        x = _policy_iteration(
            model, x, undetermined, budget, mode, opts, stats, from_above=True
        )
    else:
        x = _iterate_to_fixpoint(model, x, undetermined, budget, mode, opts, stats)
    return clamp_vector(x)


# -- fixed-strategy evaluation -----------------------------------------------------


def prob_fixed(
    model: Pots,
    strategy: MemorylessStrategy,
    theta: PathFormula,
    sat1: frozenset[str],
    sat2: frozenset[str],
    opts: EngineOptions = DEFAULT_OPTIONS,
    stats: Stats | None = None,
) -> dict[str, float]:
    """Float evaluation of a core path formula under one fixed strategy
    (no optimization): the pruned chain's plain probabilities."""
    removed = strategy.all_removed()
    pruned = prune(model, removed) if removed else model
    if isinstance(theta, Next):
        return prob_next(pruned, sat2, 0, "max")
    if isinstance(theta, BoundedUntil):
        return prob_bounded_until(pruned, sat1, sat2, theta.bound, 0, "max", stats)
    if isinstance(theta, Until):
        return prob_until(pruned, sat1, sat2, 0, "max", opts, stats)
    if isinstance(theta, BoundedRelease):
        return prob_bounded_release(pruned, sat1, sat2, theta.bound, 0, "max", stats)
    if isinstance(theta, Release):
        return prob_release(pruned, sat1, sat2, 0, "max", opts, stats)
    raise TypeError(f"not a core path formula: {theta!r}")


# -- witness synthesis ----------------------------------------------------------------


def synthesize(
    model: Pots,
    theta: PathFormula,
    sat1: frozenset[str],
    sat2: frozenset[str],
    budget: int,
    opts: EngineOptions = DEFAULT_OPTIONS,
    stats: Stats | None = None,
) -> tuple[MemorylessStrategy, dict[str, float]]:
    """Extract a memoryless witness from the argmin removal sets of the
    converged minimization, then report that witness's own value (its
    fixed-strategy evaluation, which an exact re-run must reproduce)."""
    if isinstance(theta, Next):
        indicator = {q: (1.0 if q in sat2 else 0.0) for q in model.states}
        basis = indicator
        relevant = list(model.states)
    elif isinstance(theta, (BoundedUntil, BoundedRelease)):
        release = isinstance(theta, BoundedRelease)
        _, basis = _bounded_sweeps(
            model, sat1, sat2, theta.bound, budget, "min", release, stats, True
        )
        relevant = [
            q
            for q in model.states
            if (q in sat2 - sat1 if release else q in sat1 - sat2)
        ]
    elif isinstance(theta, Until):
        basis = prob_until(model, sat1, sat2, budget, "min", opts, stats)
        relevant = [q for q in model.states if q in sat1 - sat2]
    elif isinstance(theta, Release):
        basis = prob_release(model, sat1, sat2, budget, "min", opts, stats)
        relevant = [q for q in model.states if q in sat2 - sat1]
    else:
        raise TypeError(f"not a core path formula: {theta!r}")

    removal = {}
    for q in relevant:
        removed, _ = best_removal(model, q, budget, basis)
        if removed:
            removal[q] = frozenset(removed)
    strategy = MemorylessStrategy(grade=budget, removal=removal)
    values = prob_fixed(model, strategy, theta, sat1, sat2, opts, stats)
    return strategy, values


# -- transcribed qualitative backward searches (conformance artifacts) ----------------


@dataclass(frozen=True)
class QualPartition:
    q_yes: frozenset[str]
    q_no: frozenset[str]
    q_maybe: frozenset[str]


def qual_partition(
    model: Pots, sat1: frozenset[str], sat2: frozenset[str], budget: int
) -> QualPartition:
    """The three-way split driving the bounded computation, as stated:
    yes-states from the obstruction predecessor of the right operand."""
    states = frozenset(model.states)
    q_yes = obstruct_pred(model, budget, sat2)
    q_no = states - (obstruct_pred(model, budget, sat1) | obstruct_pred(model, budget, sat2))
    q_maybe = states - q_yes - q_no
    return QualPartition(q_yes=q_yes, q_no=q_no, q_maybe=q_maybe)


def _qual_backward(
    model: Pots,
    seed: frozenset[str],
    grow_from: frozenset[str],
    budget: int,
    use_union: bool,
) -> frozenset[str]:
    """Transcription of the backward searches: grow the seed by states of
    ``grow_from`` that see the current set, combined (by intersection, or
    union for the release variants) with the obstruction predecessor of the
    previous set; return the complement of the result."""
    y = set(seed)
    x: set[str] | None = None
    while y != x:
        x = set(y)
        grew = {
            q
            for q in grow_from
            if any(model.trans(qp, q) > 0 for qp in y)
        }
        pred = obstruct_pred(model, budget, frozenset(x))
        y |= (grew | pred) if use_union else (grew & pred)
    return frozenset(model.states) - frozenset(y)


def qual_zero_search(
    model: Pots,
    sat1: frozenset[str],
    sat2: frozenset[str],
    budget: int,
    release: bool = False,
) -> frozenset[str]:
    """Backward search for the zero-probability states, as written."""
    return _qual_backward(model, sat2, sat1, budget, release)


def qual_one_search(
    model: Pots,
    sat1: frozenset[str],
    sat2: frozenset[str],
    budget: int,
    q_no: frozenset[str],
    release: bool = False,
) -> frozenset[str]:
    """Backward search for the probability-one states, as written."""
    return _qual_backward(model, q_no, sat1 - sat2, budget, release)


# -- formula-level checking --------------------------------------------------------


@dataclass
class CheckResult:
    formula: str
    sat: frozenset[str]
    values: dict[str, float] | None
    mode: str | None
    grade: int | None
    iterations: int
    warnings: list[str]


def _compare_exact(value: float, cmp: str, threshold: Fraction) -> bool:
    v = Fraction(value)
    if cmp == "<":
        return v < threshold
    if cmp == "<=":
        return v <= threshold
    if cmp == ">":
        return v > threshold
    return v >= threshold


def path_values(
    model: Pots,
    theta: PathFormula,
    budget: int,
    mode: str,
    opts: EngineOptions = DEFAULT_OPTIONS,
    stats: Stats | None = None,
) -> dict[str, float]:
    """Optimal per-state probability of a core path formula, resolving the
    operand state formulas first."""
    if stats is None:
        stats = Stats()
    sat1, sat2 = operand_sets(model, theta, opts, stats)
    return _dispatch_path(model, theta, sat1, sat2, budget, mode, opts, stats)


def _dispatch_path(
    model: Pots,
    theta: PathFormula,
    sat1: frozenset[str],
    sat2: frozenset[str],
    budget: int,
    mode: str,
    opts: EngineOptions,
    stats: Stats,
) -> dict[str, float]:
    if isinstance(theta, Next):
        return prob_next(model, sat2, budget, mode)
    if isinstance(theta, BoundedUntil):
        return prob_bounded_until(model, sat1, sat2, theta.bound, budget, mode, stats)
    if isinstance(theta, Until):
        return prob_until(model, sat1, sat2, budget, mode, opts, stats)
    if isinstance(theta, BoundedRelease):
        return prob_bounded_release(
            model, sat1, sat2, theta.bound, budget, mode, stats
        )
    if isinstance(theta, Release):
        return prob_release(model, sat1, sat2, budget, mode, opts, stats)
    raise TypeError(f"not a core path formula: {theta!r}")


def operand_sets(
    model: Pots, theta: PathFormula, opts: EngineOptions, stats: Stats
) -> tuple[frozenset[str], frozenset[str]]:
    if isinstance(theta, Next):
        return frozenset(), _sat(model, theta.body, opts, stats)
    if isinstance(theta, (Until, BoundedUntil, Release, BoundedRelease)):
        return (
            _sat(model, theta.left, opts, stats),
            _sat(model, theta.right, opts, stats),
        )
    raise TypeError(f"not a core path formula: {theta!r}")


def _sat(
    model: Pots, phi: StateFormula, opts: EngineOptions, stats: Stats
) -> frozenset[str]:
    states = frozenset(model.states)
    if isinstance(phi, TrueConst):
        return states
    if isinstance(phi, FalseConst):
        return frozenset()
    if isinstance(phi, Atom):
        if phi.name not in model.alphabet():
            message = f"atom {phi.name!r} not in the model's label alphabet"
            if message not in stats.warnings:
                stats.warnings.append(message)
        return frozenset(q for q in states if phi.name in model.label_of(q))
    if isinstance(phi, Not):
        return states - _sat(model, phi.body, opts, stats)
    if isinstance(phi, And):
        return _sat(model, phi.left, opts, stats) & _sat(model, phi.right, opts, stats)
    if isinstance(phi, Or):
        return _sat(model, phi.left, opts, stats) | _sat(model, phi.right, opts, stats)
    if isinstance(phi, Implies):
        return (states - _sat(model, phi.left, opts, stats)) | _sat(
            model, phi.right, opts, stats
        )
    if isinstance(phi, ObstructQuery):
        _, satisfied = _decide_query(model, phi, opts, stats)
        return satisfied
    raise TypeError(f"not a state formula: {phi!r}")


def _decide_query(
    model: Pots, phi: ObstructQuery, opts: EngineOptions, stats: Stats
) -> tuple[dict[str, float], frozenset[str]]:
    values = _query_values(model, phi, opts, stats)
    out = set()
    for q, v in values.items():
        if _compare_exact(v, phi.cmp, phi.threshold):
            out.add(q)
        if abs(v - float(phi.threshold)) < 10 * opts.epsilon:
            message = (
                f"boundary: value {v!r} at {q} within 10*epsilon of "
                f"threshold {phi.threshold} in {print_state(phi)}"
            )
            stats.warnings.append(message)
    return values, frozenset(out)


def _query_values(
    model: Pots, phi: ObstructQuery, opts: EngineOptions, stats: Stats
) -> dict[str, float]:
    mode = "min" if phi.cmp in ("<", "<=") else "max"
    sat1, sat2 = operand_sets(model, phi.body, opts, stats)
    return _dispatch_path(model, phi.body, sat1, sat2, phi.grade, mode, opts, stats)


def sat(
    model: Pots, phi: StateFormula, opts: EngineOptions = DEFAULT_OPTIONS
) -> frozenset[str]:
    """Satisfaction set of a (desugared) state formula."""
    return _sat(model, phi, opts, Stats())


def check(
    model: Pots, phi: StateFormula, opts: EngineOptions = DEFAULT_OPTIONS
) -> CheckResult:
    """Full query result: satisfaction set plus, when the formula itself is
    an obstruction query, the optimal probability vector it was decided by."""
    stats = Stats()
    values = None
    mode = None
    grade = None
    if isinstance(phi, ObstructQuery):
        values, satisfied = _decide_query(model, phi, opts, stats)
        mode = "min" if phi.cmp in ("<", "<=") else "max"
        grade = phi.grade
    else:
        satisfied = _sat(model, phi, opts, stats)
    return CheckResult(
        formula=print_state(phi),
        sat=satisfied,
        values=values,
        mode=mode,
        grade=grade,
        iterations=stats.iterations,
        warnings=stats.warnings,
    )


def check_path(
    model: Pots,
    theta: PathFormula,
    budget: int,
    mode: str,
    opts: EngineOptions = DEFAULT_OPTIONS,
) -> CheckResult:
    """Query result for a bare path formula at a given grade and mode."""
    stats = Stats()
    values = path_values(model, theta, budget, mode, opts, stats)
    return CheckResult(
        formula=print_path(theta),
        sat=frozenset(),
        values=values,
        mode=mode,
        grade=budget,
        iterations=stats.iterations,
        warnings=stats.warnings,
    )
