"""Seeded random model generation for experiments and the test corpus.

Transition rows are built from small random integer weights so every
probability is an exact rational with a modest denominator; the exact
oracle can then solve the same instances the float engine sees.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .model import Pots


def random_pots(
    rng: random.Random,
    n_states: int,
    max_out_degree: int = 3,
    max_cost: int = 3,
    min_cost: int = 0,
    atoms: tuple[str, ...] = ("a", "b"),
    label_prob: float = 0.4,
) -> Pots:
    """One valid model: serial, exactly stochastic rows, integer costs.

    Rows are forward-biased: at least three quarters of each non-final
    state's mass moves to higher-indexed states, the final state absorbs.
    Cycles and self-loops still occur but shed mass quickly, so bounded
    sweeps reach the unbounded fixed points at moderate step bounds.
    """
    states = [f"S{i}" for i in range(n_states)]
    edges = []
    for i, q in enumerate(states):
        ahead = states[i + 1 :]
        if not ahead:
            edges.append((q, q, Fraction(1), rng.randint(min_cost, max_cost)))
            continue
        degree = rng.randint(1, min(max_out_degree, n_states))
        forward = rng.sample(ahead, rng.randint(1, min(degree, len(ahead))))
        backward = rng.sample(states[: i + 1], min(degree - len(forward), i + 1))
        fweights = [rng.randint(3, 9) for _ in forward]
        bweights = [1 for _ in backward]
        if sum(fweights) < 3 * sum(bweights):
            fweights[0] += 3 * sum(bweights) - sum(fweights)
        total = sum(fweights) + sum(bweights)
        for r, w in sorted(
            zip(forward + backward, fweights + bweights),
            key=lambda pair: states.index(pair[0]),
        ):
            edges.append((q, r, Fraction(w, total), rng.randint(min_cost, max_cost)))
    labels = {}
    for q in states:
        props = frozenset(p for p in atoms if rng.random() < label_prob)
        if props:
            labels[q] = props
    return Pots.build(states, states[0], edges, labels)


def corpus(
    seed: int,
    count: int,
    min_states: int = 2,
    max_states: int = 5,
    **kwargs,
) -> list[Pots]:
    """A reproducible list of random models of varying size."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(min_states, max_states)
        out.append(random_pots(rng, n, **kwargs))
    return out


def chain_model() -> Pots:
    """Two states: a coin-flip loop at q that eventually falls into an
    absorbing goal; the goal edge can be severed for cost 1."""
    return Pots.build(
        states=["q", "goal"],
        initial="q",
        edges=[
            ("q", "q", Fraction(1, 2), 1),
            ("q", "goal", Fraction(1, 2), 1),
            ("goal", "goal", Fraction(1), 1),
        ],
        labels={"goal": ["goal"]},
    )


def scaling_model(n_states: int = 50, seed: int = 2024) -> Pots:
    """Fixed mid-size model for step-bound scaling measurements; costs stay
    at least 1 so a small grade keeps the removal optimizer engaged."""
    rng = random.Random(seed)
    return random_pots(
        rng, n_states, max_out_degree=3, max_cost=3, min_cost=1, label_prob=0.3
    )
