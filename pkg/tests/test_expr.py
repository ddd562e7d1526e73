import random

import pytest
from hypothesis import assume, given, strategies as st

from conftest import exprs, random_expr, roots
from fact.expr import (
    EVAL_ERRORS, Add, Const, CosPi, DomainError, EvalLimits, Mod, ModuloByZero, Mult, NConst,
    NegativeExponent, Overflow, ParseError, PeriodicWrap, Pow, PrimeIdx, SinPi, Sub, Var,
    compile_expr, contains, eval_sequence, evaluate, literal, naive_eval, node_count, parse, render,
)
from fact.primes import PrimeIndexOutOfRange, nth_prime

x = Var()


def outcome(fn, *args):
    try:
        return ("ok", fn(*args))
    except EVAL_ERRORS as err:
        return ("err", type(err))


def test_literal_splits_digits():
    assert literal(7) == Const(7)
    assert literal(10) == NConst(10)
    with pytest.raises(ValueError):
        Const(12)
    with pytest.raises(ValueError):
        NConst(3)


def test_periodic_only_at_root():
    with pytest.raises(ValueError):
        PeriodicWrap(Add(x, PeriodicWrap(x, 2)), 3)
    with pytest.raises(ValueError):
        PeriodicWrap(x, 0)
    with pytest.raises(DomainError):
        compile_expr(Mult(x, _smuggled_periodic()))


def _smuggled_periodic():
    p = object.__new__(PeriodicWrap)
    object.__setattr__(p, "body", Var())
    object.__setattr__(p, "k", 2)
    return p


def test_basic_arithmetic():
    e = parse("((x ** 2) + (3 * x))")
    assert [evaluate(e, n) for n in range(5)] == [0, 4, 10, 18, 28]
    assert evaluate(parse("(x - 9)"), 2) == -7


def test_modulo_is_euclidean():
    assert evaluate(Mod(NConst(17), Const(5)), 0) == 2
    assert evaluate(Mod(Sub(Const(0), NConst(17)), Const(5)), 0) == 3
    assert evaluate(Mod(NConst(17), Sub(Const(0), Const(5))), 0) == 2
    with pytest.raises(ModuloByZero):
        evaluate(Mod(x, Const(0)), 3)


@given(st.integers(-10 ** 30, 10 ** 30), st.integers(-10 ** 6, 10 ** 6).filter(bool))
def test_modulo_range_property(a, m):
    r = evaluate(Mod(x, literal(abs(m)) if m > 0 else Sub(Const(0), literal(-m))), a)
    assert 0 <= r < abs(m)
    assert (a - r) % abs(m) == 0


def test_trig_on_integers():
    assert [evaluate(SinPi(x), n) for n in range(-3, 4)] == [0] * 7
    assert [evaluate(CosPi(x), n) for n in range(-3, 4)] == [-1, 1, -1, 1, -1, 1, -1]


@given(st.integers(-10 ** 40, 10 ** 40))
def test_cos_parity_property(n):
    assert evaluate(CosPi(x), n) == (1 if n % 2 == 0 else -1)


def test_prime_index():
    assert [evaluate(PrimeIdx(x), n) for n in range(1, 6)] == [2, 3, 5, 7, 11]
    with pytest.raises(PrimeIndexOutOfRange):
        evaluate(PrimeIdx(x), 0)
    with pytest.raises(PrimeIndexOutOfRange):
        evaluate(PrimeIdx(x), 11, EvalLimits(max_prime_index=10))


def test_negative_exponent_and_overflow():
    with pytest.raises(NegativeExponent):
        evaluate(Pow(Const(2), Sub(Const(0), x)), 3)
    with pytest.raises(Overflow):
        evaluate(Pow(Const(2), x), 500)
    assert evaluate(Pow(Const(1), x), 10 ** 50 // 10 ** 48) == 1
    assert evaluate(Pow(Sub(Const(0), Const(1)), x), 7) == -1
    assert evaluate(Pow(Const(0), Const(0)), 0) == 1


def test_digit_cap_boundary():
    limits = EvalLimits(max_digits=5)
    assert evaluate(Mult(x, Const(1)), 10 ** 5, limits) == 10 ** 5
    with pytest.raises(Overflow):
        evaluate(Add(x, Const(1)), 10 ** 5, limits)


def test_periodic_wrap():
    e = PeriodicWrap(Add(x, Const(1)), 3)
    assert [evaluate(e, n) for n in range(7)] == [1, 2, 3, 1, 2, 3, 1]
    with pytest.raises(DomainError):
        evaluate(e, -1)


def test_eval_sequence_reports_failing_index():
    e = Mod(Const(5), Sub(x, Const(3)))
    with pytest.raises(ModuloByZero) as info:
        eval_sequence(e, 0, 10)
    assert info.value.index == 3
    assert eval_sequence(Mult(x, x), 2, 3) == [4, 9, 16]


def test_folded_constant_errors_are_deferred():
    f = compile_expr(Add(x, Mod(Const(1), Const(0))))
    with pytest.raises(ModuloByZero):
        f(0)
    with pytest.raises(ModuloByZero):
        f(1)


def test_node_count_and_contains():
    e = parse("prime((x + 12))")
    assert node_count(e) == 4
    assert contains(e, PrimeIdx) and not contains(e, CosPi)


@given(roots)
def test_render_parse_round_trip(e):
    assert parse(render(e)) == e
    assert render(parse(render(e))) == render(e)


@given(roots, st.integers(0, 60))
def test_dual_evaluator_property(e, n):
    limits = EvalLimits(max_prime_index=300)
    assert outcome(evaluate, e, n, limits) == outcome(naive_eval, e, n, limits)


@given(exprs.filter(lambda e: not (contains(e, SinPi) or contains(e, CosPi) or contains(e, Mod))),
       st.integers(0, 40))
def test_python_eval_oracle(e, n):
    # without %, sin and cos the surface text is valid Python with prime() bound
    fast = outcome(evaluate, e, n)
    assume(fast[0] == "ok")
    assert eval(render(e), {"prime": nth_prime, "x": n}) == fast[1]


@pytest.mark.parametrize("text,offset", [
    ("(x + )", 5), ("(x ^ 2)", 3), ("x + 1", 2), ("periodic(x, 0)", 12),
    ("(periodic(x, 2) + 1)", 1), ("007", 0), ("", 0), ("sin(x)", 4),
])
def test_parse_errors_carry_offset(text, offset):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.offset == offset
    assert info.value.expected


def test_parse_tolerates_spacing():
    assert parse("(  x+1 )") == Add(x, Const(1))
    assert parse("cos(pi*(x))") == CosPi(x)


def test_random_formulas_cross_check():
    rng = random.Random(7)
    for _ in range(500):
        e = random_expr(rng)
        n = rng.randrange(0, 30)
        assert outcome(evaluate, e, n, EvalLimits(max_prime_index=300)) == \
            outcome(naive_eval, e, n, EvalLimits(max_prime_index=300))
