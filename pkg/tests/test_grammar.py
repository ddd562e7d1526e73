import math
import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from fact.expr import Add, CosPi, Mod, Mult, NConst, PeriodicWrap, Pow, PrimeIdx, SinPi, Sub, parse
from fact.grammar import (
    BudgetInfeasible, Grammar, GrammarError, MetaCategoryHasNoGrammar, NoGrammar,
    builtin_grammar, sample_exact, sample_formula, sample_text, target_length,
)
from fact.records import GENERATIVE_CATEGORIES

SAMPLED = [c for c in GENERATIVE_CATEGORIES if c.value != "finite"]
OPERATORS = (Add, Sub, Mult, Pow, Mod, PrimeIdx, SinPi, CosPi, PeriodicWrap)


def length_bounds(e):
    """Derivation length is pinned by the tree up to single-digit literals,
    which may come from the counted literal rule or the free terminal rule."""
    ops = digits = singles = 0
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, OPERATORS):
            ops += 1
        if isinstance(node, NConst):
            digits += len(str(node.value))
        elif type(node).__name__ == "Const":
            singles += 1
        stack.extend(getattr(node, f) for f in ("left", "right", "base", "exponent", "arg", "body")
                     if hasattr(node, f))
    return ops + digits, ops + digits + singles


def test_meta_and_finite_have_no_grammar():
    with pytest.raises(MetaCategoryHasNoGrammar):
        builtin_grammar("increasing")
    with pytest.raises(NoGrammar):
        builtin_grammar("finite")
    with pytest.raises(ValueError):
        builtin_grammar("nonsense")


def test_minimal_lengths():
    for c in SAMPLED:
        g = builtin_grammar(c)
        assert g.min_size() == (2 if c.value == "periodic" else 0)


def test_grammar_validation():
    with pytest.raises(GrammarError):
        Grammar("polynomial", "N", {"N": (("Missing",),)})
    with pytest.raises(GrammarError):
        Grammar("polynomial", "N", {"N": (("(", "N", ")"),)})
    with pytest.raises(GrammarError):
        Grammar("polynomial", "S", {"N": (("x",),)})


def test_budget_below_minimum():
    with pytest.raises(BudgetInfeasible):
        sample_text(builtin_grammar("periodic"), 1, random.Random(0))


@pytest.mark.parametrize("category", SAMPLED, ids=lambda c: c.value)
@given(budget=st.integers(2, 20), seed=st.integers(0, 2 ** 32))
def test_budget_window_property(category, budget, seed):
    g = builtin_grammar(category)
    text, length = sample_text(g, budget, random.Random(seed))
    assert max(1, budget - 2) <= length <= budget
    extra = 0
    if text.startswith("periodic("):
        # the period literal is counted digit by digit but is not a tree node
        head, k = text[:-1].rsplit(", ", 1)
        extra, text = len(k), f"{head}, 1)"
    lo, hi = length_bounds(parse(text))
    assert lo + extra <= length <= hi + extra


@given(budget=st.integers(1, 20), seed=st.integers(0, 2 ** 32))
def test_exact_sampler_window(budget, seed):
    g = builtin_grammar("exponential")
    text, length = sample_exact(g, budget, random.Random(seed))
    assert max(1, budget - 2) <= length <= budget
    assert length in g.feasible_sizes(budget)


def test_polynomial_exponents_are_literals():
    g = builtin_grammar("polynomial")
    rng = random.Random(3)
    for _ in range(300):
        stack = [sample_formula(g, rng.randint(2, 20), rng)]
        while stack:
            node = stack.pop()
            if isinstance(node, Pow):
                assert type(node.exponent).__name__ in ("Const", "NConst")
            stack.extend(getattr(node, f) for f in ("left", "right", "base", "arg") if hasattr(node, f))


def test_category_operators_present():
    rng = random.Random(5)
    seen = {c.value: Counter() for c in SAMPLED}
    for c in SAMPLED:
        g = builtin_grammar(c)
        for _ in range(200):
            text, _ = sample_text(g, 10, rng)
            for op in ("prime(", "sin(", "cos(", " % ", "periodic("):
                seen[c.value][op] += op in text
    assert seen["prime"]["prime("] > 0 and seen["polynomial"]["prime("] == 0
    assert seen["modulo"][" % "] > 0 and seen["exponential"][" % "] == 0
    assert seen["trigonometric"]["sin("] > 0 and seen["trigonometric"]["cos("] > 0
    assert seen["periodic"]["periodic("] == 200


def test_sampling_is_seed_deterministic():
    g = builtin_grammar("modulo")
    a = [sample_text(g, 12, random.Random(f"s{i}")) for i in range(50)]
    b = [sample_text(g, 12, random.Random(f"s{i}")) for i in range(50)]
    assert a == b


def test_schedule_endpoints_and_range():
    assert target_length(0, 100) == 2
    assert target_length(99, 100) == 20
    assert target_length(0, 1, 4, 9) == 4
    with pytest.raises(ValueError):
        target_length(100, 100)
    with pytest.raises(ValueError):
        target_length(0, 5, 9, 4)


def test_schedule_is_monotone_and_log_shaped():
    total = 20_000
    lengths = [target_length(i, total) for i in range(total)]
    assert lengths == sorted(lengths)
    counts = Counter(lengths)
    assert set(counts) == set(range(2, 21))
    # share of L is ln((L+1)/L) / ln(21/2), give or take one slot
    norm = math.log(21 / 2)
    for length, c in counts.items():
        assert abs(c - total * math.log((length + 1) / length) / norm) <= 1


def test_large_budget_never_exceeded():
    rng = random.Random(11)
    for c in SAMPLED:
        g = builtin_grammar(c)
        for _ in range(200):
            assert sample_text(g, 50, rng)[1] <= 50
