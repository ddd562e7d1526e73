import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fact.annotate import (
    FIBONACCI_LIKE, AnnotatorSpec, BadPattern, EmptyVerdicts, InvalidBase, MethodSpec, Score,
    UnknownField, UnknownMethod, UnknownPolicy, Verdict, aggregate, annotate_corpus, annotate_record,
    annotators_from_config, boundedness_check, default_annotators, degree_by_divided_differences,
    exponential_quotient_check, extend_polynomial, is_palindrome, palindrome_check,
    periodicity_check, polynomial_fit_check, primality_check, regex_match, register_policy,
    smallest_period, text_search,
)
from fact.generate import GenConfig, generate
from fact.records import SequenceRecord

polys = st.lists(st.integers(-50, 50), min_size=1, max_size=6)


def poly_values(coeffs, n):
    return [sum(c * x ** i for i, c in enumerate(coeffs)) for x in range(n)]


def naive_period(values):
    for p in range(1, len(values) + 1):
        if all(values[i] == values[i - p] for i in range(p, len(values))):
            return p


@given(polys, st.integers(12, 30))
def test_degree_matches_coefficients(coeffs, n):
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs = coeffs[:-1]
    vals = poly_values(coeffs, n)
    expected = 0 if not any(coeffs) else len(coeffs) - 1
    assert degree_by_divided_differences(vals, 10) == expected
    assert extend_polynomial(vals[:expected + 1], n) == vals
    assert polynomial_fit_check(vals).score == Score.STRONG_YES


def test_degree_against_numpy_fit():
    rng = random.Random(1)
    for _ in range(50):
        d = rng.randrange(0, 6)
        coeffs = [rng.randrange(-9, 10) for _ in range(d)] + [rng.choice([-3, -1, 1, 2])]
        vals = poly_values(coeffs, 20)
        fitted = np.polynomial.polynomial.polyfit(np.arange(20), vals, d)
        assert np.allclose(fitted, coeffs, atol=1e-6)
        assert degree_by_divided_differences(vals, 10) == d


def test_polynomial_rejections():
    assert polynomial_fit_check([2 ** i for i in range(20)]).score == Score.WEAK_NO
    assert polynomial_fit_check([1, 4, 9]).score == Score.INCONCLUSIVE
    # degree 4 on 9 points leaves only 4 held out
    assert polynomial_fit_check([i ** 4 for i in range(9)]).score == Score.WEAK_YES


def test_exponential_quotients():
    v = exponential_quotient_check([3 ** i for i in range(11)])
    assert v.score == Score.STRONG_YES and v.detail.endswith("1/3")
    tail = exponential_quotient_check([2 ** n + n for n in range(1, 61)])
    assert tail.score == Score.WEAK_YES
    assert exponential_quotient_check([n ** 3 for n in range(1, 61)]).score == Score.WEAK_NO
    assert exponential_quotient_check([0, 1, 2, 4]).score == Score.INCONCLUSIVE
    assert exponential_quotient_check([5, 7, 11, 13, 17]).score == Score.INCONCLUSIVE


def test_primality():
    assert primality_check([2, 3, 5, 7, 11]).score == Score.STRONG_YES
    assert primality_check([2, 3, 9]).score == Score.WEAK_NO
    v = primality_check([2 ** 89 - 1])
    assert v.score == Score.STRONG_YES and "probabilistic" in v.detail


def test_boundedness():
    verdict, bound = boundedness_check([0, -7, 3])
    assert verdict.score == Score.STRONG_YES and bound == 10
    verdict, bound = boundedness_check([10 ** 7])
    assert verdict.score == Score.WEAK_NO and bound is None


@given(st.integers(0, 10 ** 12), st.integers(2, 40))
def test_palindrome_against_numpy_repr(n, base):
    digits = np.base_repr(n, base) if base <= 36 else None
    if digits is not None:
        assert is_palindrome(n, base) == (digits == digits[::-1])


def test_palindrome_examples():
    assert is_palindrome(12321, 10) and not is_palindrome(12321, 2)
    assert not is_palindrome(-1)
    assert palindrome_check([1, 22, 303]).score == Score.STRONG_YES
    with pytest.raises(InvalidBase):
        palindrome_check([1], base=1)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=60))
def test_smallest_period_oracle(values):
    assert smallest_period(values) == naive_period(values)


def test_periodicity_needs_three_repeats():
    assert periodicity_check([1, 2, 3] * 3)[1] == 3
    assert periodicity_check([1, 2, 3] * 2 + [1])[0].score == Score.WEAK_NO


def test_text_methods():
    fields = {"name": "Number of finite groups", "keywords": ["nonn", "fini"], "formulas": None}
    assert text_search(fields, "name", ["FINITE"]).score == Score.WEAK_YES
    assert text_search(fields, "name", ["finite"], case_insensitive=False).score == Score.WEAK_YES
    assert text_search(fields, "keywords", ["fini"]).score == Score.WEAK_YES
    assert text_search(fields, "formulas", ["x"]).score == Score.INCONCLUSIVE
    assert text_search(fields, "comments", ["x"]).score == Score.INCONCLUSIVE
    with pytest.raises(UnknownField):
        text_search(fields, "nonsense", ["x"])
    shown = {"formulas": "a(n)=2*a(n-3)+5*a(n-5)-17a(n-5)"}
    assert regex_match(shown, "formulas", "fibonacci_like").score == Score.WEAK_YES
    assert regex_match({"formulas": "a(n)=n^2"}, "formulas", FIBONACCI_LIKE).score == Score.WEAK_NO
    with pytest.raises(BadPattern):
        regex_match(shown, "formulas", "(")


def test_method_specs_are_total():
    rec = SequenceRecord("r", "synth", [1, 2, 3])
    for name in ["divided_difference_degree", "polynomial_fit", "exponential_quotient", "primality",
                 "boundedness", "palindrome", "periodicity", "text_search", "regex_match"]:
        spec = MethodSpec.of(name, **({"needles": ["a"]} if name == "text_search" else
                                      {"pattern": "a"} if name == "regex_match" else {}))
        assert isinstance(spec.run(rec), Verdict)
    assert MethodSpec.of("primality").run(SequenceRecord("e", "oeis", [])).score == Score.INCONCLUSIVE
    with pytest.raises(UnknownMethod):
        MethodSpec.of("astrology")
    with pytest.raises(InvalidBase):
        MethodSpec.of("palindrome", base=0)


def test_aggregation_policies():
    v = lambda *scores: [Verdict(Score(s), "t") for s in scores]
    assert aggregate(v(4, 3, 2)) == 4
    assert aggregate(v(0, 1)) == 0
    assert aggregate(v(4, 0)) == 2
    assert aggregate(v(2, 2)) == 2
    assert aggregate(v(4, 0), "max") == 4 and aggregate(v(4, 0), "min") == 0
    assert aggregate(v(1, 2), "max") == 2
    with pytest.raises(EmptyVerdicts):
        aggregate([])
    with pytest.raises(UnknownPolicy):
        aggregate(v(1), "vote")
    register_policy("always-three", lambda scores: 3)
    assert aggregate(v(0), "always-three") == 3


@given(st.lists(st.integers(0, 4), min_size=1, max_size=6), st.data())
def test_aggregation_monotonicity(scores, data):
    i = data.draw(st.integers(0, len(scores) - 1))
    if scores[i] == 4:
        return
    raised = list(scores)
    raised[i] = data.draw(st.integers(scores[i] + 1, 4))
    for policy in ("confident-max-with-conflict-damping", "max", "min"):
        before = aggregate([Verdict(Score(s), "t") for s in scores], policy)
        after = aggregate([Verdict(Score(s), "t") for s in raised], policy)
        assert after >= before


def test_config_loading():
    cfg = [{"category": "finite", "methods": [{"name": "text_search",
                                               "params": {"field": "keywords", "needles": ["fini"]}}],
            "aggregator": {"name": "max"}}]
    (spec,) = annotators_from_config(cfg)
    assert spec.category == "finite" and spec.aggregator == "max"
    with pytest.raises(ValueError):
        AnnotatorSpec("x", ())


def test_annotate_is_idempotent_and_never_downgrades():
    recs = []
    for cat in ("polynomial", "exponential", "periodic"):
        recs += generate(cat, GenConfig(count=40, terms_per_sequence=40))
    organic = SequenceRecord("A000040", "oeis", [2, 3, 5, 7, 11, 13, 17, 19])
    organic.fields = {"keywords": ["nonn", "fini"]}
    recs.append(organic)
    once = annotate_corpus(recs)
    twice = annotate_corpus(once)
    assert [r.to_json() for r in once] == [r.to_json() for r in twice]
    for before, after in zip(recs, once):
        assert all(after.level(c) >= lv for c, lv in before.categories.items())
    a = once[-1]
    assert a.level("prime") == 4 and a.level("finite") == 3 and a.level("increasing") == 4
    assert organic.categories == {}  # input left untouched


def test_annotate_record_respects_meta_flag():
    r = annotate_record(SequenceRecord("A1", "oeis", [3, 2, 1]), default_annotators(), meta=False)
    assert "increasing" not in r.categories
