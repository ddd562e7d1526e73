import random

from hypothesis import settings, strategies as st

from fact.expr import (
    Add, Const, CosPi, Mod, Mult, NConst, PeriodicWrap, Pow, PrimeIdx, SinPi, Sub, Var,
)

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")

_leaves = st.one_of(
    st.just(Var()),
    st.integers(0, 9).map(Const),
    st.integers(10, 10 ** 40).map(NConst),
)


def _grow(children):
    pair = st.tuples(children, children)
    return st.one_of(
        pair.map(lambda p: Add(*p)),
        pair.map(lambda p: Sub(*p)),
        pair.map(lambda p: Mult(*p)),
        pair.map(lambda p: Mod(*p)),
        st.tuples(children, st.integers(0, 6).map(Const)).map(lambda p: Pow(*p)),
        children.map(PrimeIdx),
        children.map(SinPi),
        children.map(CosPi),
    )


exprs = st.recursive(_leaves, _grow, max_leaves=12)
roots = st.one_of(exprs, st.tuples(exprs, st.integers(1, 12)).map(lambda p: PeriodicWrap(*p)))


def random_expr(rng: random.Random, depth: int = 5):
    """Plain-random formula generator used where hypothesis would be too slow."""
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.45:
            return Var()
        if r < 0.8:
            return Const(rng.randrange(10))
        return NConst(rng.choice([rng.randrange(10, 1000), 10 ** rng.randrange(30, 45) + rng.randrange(10 ** 6)]))
    kind = rng.randrange(9)
    sub = lambda: random_expr(rng, depth - 1)
    if kind == 0:
        return Add(sub(), sub())
    if kind == 1:
        return Sub(sub(), sub())
    if kind in (2, 3):
        return Mult(sub(), sub())
    if kind == 4:
        return Pow(sub(), Const(rng.randrange(7)))
    if kind == 5:
        return Mod(sub(), sub())
    if kind == 6:
        return PrimeIdx(sub())
    if kind == 7:
        return CosPi(sub())
    return SinPi(sub())


# acceptance criteria report one line each in the terminal summary
_ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def record_acceptance(line: str) -> None:
    _ACCEPTANCE.append(line)
