import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from astgen import random_state
from potl.syntax import (
    FALSE,
    TRUE,
    And,
    Atom,
    BoundedRelease,
    BoundedUntil,
    Eventually,
    Globally,
    Implies,
    Not,
    ObstructQuery,
    Or,
    ParseError,
    Release,
    Until,
    WeakUntil,
    desugar,
    formula_size,
    parse,
    parse_path_formula,
    print_path,
    print_state,
    subformulas,
)


class TestParse:
    def test_threshold_query_with_eventually(self):
        phi = parse("<<4 < 0.1>> F (r2 | r3)")
        assert phi == ObstructQuery(
            4, "<", Fraction(1, 10), Until(TRUE, Or(Atom("r2"), Atom("r3")))
        )

    def test_true_literal(self):
        assert parse("true") == TRUE

    def test_bounded_until_query(self):
        phi = parse("<<2 >= 0.5>> (a U<=3 b)")
        assert phi == ObstructQuery(
            2, ">=", Fraction(1, 2), BoundedUntil(Atom("a"), Atom("b"), 3)
        )

    def test_fraction_threshold_is_exact(self):
        assert parse("<<1 < 1/3>> X a").threshold == Fraction(1, 3)

    def test_decimal_threshold_is_exact(self):
        assert parse("<<1 < 0.1>> X a").threshold == Fraction(1, 10)

    def test_precedence_not_and_or_implies(self):
        phi = parse("!p & q | r -> s")
        assert phi == Implies(Or(And(Not(Atom("p")), Atom("q")), Atom("r")), Atom("s"))

    def test_implies_right_associative(self):
        assert parse("a -> b -> c") == Implies(Atom("a"), Implies(Atom("b"), Atom("c")))

    def test_and_left_associative(self):
        assert parse("a & b & c") == And(And(Atom("a"), Atom("b")), Atom("c"))

    def test_parenthesized_path_formula(self):
        assert parse("<<1 < 0.5>> ((a | b) U c)") == ObstructQuery(
            1, "<", Fraction(1, 2), Until(Or(Atom("a"), Atom("b")), Atom("c"))
        )

    def test_path_formula_entry_point(self):
        assert parse_path_formula("F goal") == Until(TRUE, Atom("goal"))

    def test_weak_until_desugared_at_parse(self):
        phi = parse("<<1 < 0.5>> a W b")
        assert phi.body == Release(Atom("b"), Or(Atom("a"), Atom("b")))

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "(",
            "a &",
            "a | | b",
            "<<",
            "<<x < 0.5>> X a",
            "<<1 0.5>> X a",
            "<<1 < 1.5>> X a",
            "<<1 < 2/1>> X a",
            "<<1 < 1/0>> X a",
            "<<1 < 0.5>>",
            "<<1 < 0.5>> a",
            "<<1 < 0.5>> a U",
            "<<1 < 0.5>> U a",
            "<<1 < 0.5>> a W<=3 b",
            "a U b",
            "true true",
            "!",
            "# nope",
            "<<1 < 0.5>> X a extra",
        ],
    )
    def test_malformed_inputs_raise_positioned_errors(self, text):
        with pytest.raises(ParseError) as err:
            parse(text)
        assert err.value.position >= 0
        assert "position" in str(err.value)

    def test_keywords_are_not_atoms(self):
        with pytest.raises(ParseError):
            parse("U")


class TestDesugar:
    def test_globally_becomes_release(self):
        phi = ObstructQuery(1, "<", Fraction(1, 2), Globally(Atom("p")))
        assert desugar(phi).body == Release(FALSE, Atom("p"))

    def test_weak_until_becomes_release(self):
        phi = ObstructQuery(1, "<", Fraction(1, 2), WeakUntil(Atom("a"), Atom("b")))
        assert desugar(phi).body == Release(Atom("b"), Or(Atom("a"), Atom("b")))

    def test_eventually_becomes_until(self):
        phi = ObstructQuery(1, "<", Fraction(1, 2), Eventually(Atom("p")))
        assert desugar(phi).body == Until(TRUE, Atom("p"))

    def test_bounded_sugar(self):
        phi = parse("<<1 < 0.5>> F<=3 p")
        assert phi.body == BoundedUntil(TRUE, Atom("p"), 3)
        phi = parse("<<1 < 0.5>> G<=3 p")
        assert phi.body == BoundedRelease(FALSE, Atom("p"), 3)

    def test_core_formula_unchanged(self):
        phi = parse("<<1 < 0.5>> a U b & c")
        assert desugar(phi) == phi

    @settings(max_examples=50)
    @given(seed=st.integers(0, 10**9))
    def test_idempotent_and_core_only(self, seed):
        phi = random_state(random.Random(seed), 4)
        lowered = desugar(phi)
        assert desugar(lowered) == lowered
        subformulas(lowered)  # raises if any sugar node survived


class TestSubformulas:
    def test_single_atom(self):
        assert subformulas(Atom("p")) == [Atom("p")]

    def test_and_not(self):
        phi = And(Atom("p"), Not(Atom("q")))
        assert subformulas(phi) == [Atom("p"), Atom("q"), Not(Atom("q")), phi]

    def test_threshold_query_expansion(self):
        phi = parse("<<4 < 0.1>> F (r2 | r3)")
        assert subformulas(phi) == [
            TRUE,
            Atom("r2"),
            Atom("r3"),
            Or(Atom("r2"), Atom("r3")),
            phi,
        ]

    def test_duplicates_collapse(self):
        phi = And(Atom("p"), Atom("p"))
        assert subformulas(phi) == [Atom("p"), phi]

    @settings(max_examples=80)
    @given(seed=st.integers(0, 10**9))
    def test_every_formula_follows_its_parts_and_length_bound(self, seed):
        phi = random_state(random.Random(seed), 4)
        subs = subformulas(phi)
        assert subs[-1] == phi
        seen = set()
        for sub in subs:
            for part in subformulas(sub)[:-1]:
                assert part in seen
            seen.add(sub)
        leaves = {s for s in subs if isinstance(s, (Atom,)) or s in (TRUE, FALSE)}
        assert len(subs) <= formula_size(phi) + len(leaves) + 1


class TestPrint:
    @pytest.mark.parametrize(
        "text",
        [
            "<<4 < 0.1>> F (r2 | r3)",
            "true",
            "<<2 >= 0.5>> (a U<=3 b)",
            "!p & (q | r)",
            "<<0 <= 1>> X (a -> b)",
            "<<3 > 1/3>> (a & b) R<=7 !c",
        ],
    )
    def test_round_trip_examples(self, text):
        phi = parse(text)
        assert parse(print_state(phi)) == phi

    def test_print_is_idempotent_through_parse(self):
        phi = parse("<<4 < 0.1>> F (r2 | r3)")
        assert print_state(parse(print_state(phi))) == print_state(phi)

    @settings(max_examples=300)
    @given(seed=st.integers(0, 10**9), depth=st.integers(0, 6))
    def test_round_trip_random_asts(self, seed, depth):
        phi = random_state(random.Random(seed), depth)
        assert parse(print_state(phi)) == phi

    def test_sugar_prints_readably(self):
        assert print_path(Globally(Atom("p"))) == "G p"
        assert print_path(Eventually(Atom("p"))) == "F p"
