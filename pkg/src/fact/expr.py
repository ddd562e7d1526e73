"""Formula AST over the single variable ``x`` with exact big-integer evaluation.

Surface syntax is fully parenthesised: ``(a + b)``, ``(a - b)``, ``(a * b)``,
``(a ** b)``, ``(a % b)``, ``prime(e)``, ``sin(pi * (e))``, ``cos(pi * (e))``
and ``periodic(e, k)`` (root only).
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

from .primes import PrimeIndexOutOfRange, nth_prime

__all__ = [
    "Const", "NConst", "Var", "Add", "Sub", "Mult", "Pow", "Mod", "PrimeIdx",
    "SinPi", "CosPi", "PeriodicWrap", "Expr", "literal",
    "EvalLimits", "EvalError", "NegativeExponent", "ModuloByZero",
    "PrimeIndexOutOfRange", "Overflow", "DomainError", "EVAL_ERRORS",
    "evaluate", "eval_sequence", "compile_expr", "naive_eval",
    "render", "parse", "ParseError", "node_count", "contains",
]


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Const:
    value: int

    def __post_init__(self):
        if not (isinstance(self.value, int) and 0 <= self.value <= 9):
            raise ValueError(f"Const must be a digit, got {self.value!r}")


@dataclass(frozen=True, slots=True)
class NConst:
    """Multi-digit literal. Single digits are always ``Const``."""
    value: int

    def __post_init__(self):
        if not (isinstance(self.value, int) and self.value >= 10):
            raise ValueError(f"NConst must be >= 10, got {self.value!r}")


@dataclass(frozen=True, slots=True)
class Var:
    pass


@dataclass(frozen=True, slots=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Mult:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Pow:
    base: "Expr"
    exponent: "Expr"


@dataclass(frozen=True, slots=True)
class Mod:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class PrimeIdx:
    arg: "Expr"


@dataclass(frozen=True, slots=True)
class SinPi:
    arg: "Expr"


@dataclass(frozen=True, slots=True)
class CosPi:
    arg: "Expr"


@dataclass(frozen=True, slots=True)
class PeriodicWrap:
    body: "Expr"
    k: int

    def __post_init__(self):
        if not (isinstance(self.k, int) and self.k >= 1):
            raise ValueError(f"period must be a positive integer, got {self.k!r}")
        if contains(self.body, PeriodicWrap):
            raise ValueError("periodic(...) may only appear at the root")


Expr = Union[Const, NConst, Var, Add, Sub, Mult, Pow, Mod, PrimeIdx, SinPi, CosPi, PeriodicWrap]

_BINARY = {Add: "+", Sub: "-", Mult: "*", Pow: "**", Mod: "%"}
_UNARY = (PrimeIdx, SinPi, CosPi)


def literal(value: int) -> Const | NConst:
    return Const(value) if value < 10 else NConst(value)


def _children(e) -> tuple:
    if isinstance(e, (Add, Sub, Mult, Mod)):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base, e.exponent)
    if isinstance(e, _UNARY):
        return (e.arg,)
    if isinstance(e, PeriodicWrap):
        return (e.body,)
    return ()


def node_count(e) -> int:
    return 1 + sum(node_count(c) for c in _children(e))


def contains(e, node_type) -> bool:
    if isinstance(e, node_type):
        return True
    return any(contains(c, node_type) for c in _children(e))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalLimits:
    max_digits: int = 120
    max_prime_index: int = 100_000

    def __post_init__(self):
        if self.max_digits < 1:
            raise ValueError("max_digits must be >= 1")
        if self.max_prime_index < 1:
            raise ValueError("max_prime_index must be >= 1")

    @property
    def bound(self) -> int:
        return _pow10(self.max_digits)


@lru_cache(maxsize=64)
def _pow10(d: int) -> int:
    return 10 ** d


class EvalError(ArithmeticError):
    """Base class for evaluation failures. ``index`` is set by eval_sequence."""
    index: int | None = None


class NegativeExponent(EvalError):
    pass


class ModuloByZero(EvalError):
    pass


class Overflow(EvalError):
    pass


class DomainError(EvalError):
    pass


# PrimeIndexOutOfRange lives in the prime module (a ValueError); catch both.
EVAL_ERRORS = (EvalError, PrimeIndexOutOfRange)

_LOG10_2 = math.log10(2)


def _checked(v: int, bound: int) -> int:
    if v > bound or v < -bound:
        raise Overflow("magnitude exceeds the digit cap")
    return v


def _power(b: int, e: int, bound: int, max_digits: int) -> int:
    if e < 0:
        raise NegativeExponent(f"negative exponent {e}")
    if e == 0:
        return 1
    if b in (0, 1):
        return b
    if b == -1:
        return -1 if e & 1 else 1
    # |b|^e >= 2^((bits-1) e); reject before materialising huge powers
    if (abs(b).bit_length() - 1) * e * _LOG10_2 > max_digits + 1:
        raise Overflow(f"{b}**{e} exceeds 10^{max_digits}")
    return _checked(b ** e, bound)


def _modulo(a: int, m: int) -> int:
    if m == 0:
        raise ModuloByZero("modulo by zero")
    return a % abs(m)


def _prime(k: int, max_index: int) -> int:
    return nth_prime(k, max_index)


def _compile(e, limits: EvalLimits):
    """Return (fn, const) where const is the folded value when ``e`` has no
    variable; folding errors are deferred into fn so error order is kept."""
    bound = limits.bound
    digits = limits.max_digits
    max_index = limits.max_prime_index

    if isinstance(e, Var):
        return (lambda x: x), None
    if isinstance(e, (Const, NConst)):
        v = e.value
        if v > bound:
            def fail(x, v=v):
                raise Overflow(f"literal {v} exceeds 10^{digits}")
            return fail, None
        return (lambda x: v), (v,)

    if isinstance(e, PeriodicWrap):
        raise DomainError("periodic(...) is only valid at the root")

    if isinstance(e, _UNARY):
        f, c = _compile(e.arg, limits)
        if isinstance(e, PrimeIdx):
            def op(a):
                return _prime(a, max_index)
        elif isinstance(e, SinPi):
            def op(a):
                return 0
        else:
            def op(a):
                return -1 if a & 1 else 1
        if c is not None:
            try:
                v = op(c[0])
            except EVAL_ERRORS as err:
                def fail(x, err=err):
                    raise copy.copy(err)
                return fail, None
            return (lambda x: v), (v,)
        return (lambda x: op(f(x))), None

    lf, lc = _compile(_children(e)[0], limits)
    rf, rc = _compile(_children(e)[1], limits)
    if isinstance(e, Add):
        def op(a, b):
            return _checked(a + b, bound)
    elif isinstance(e, Sub):
        def op(a, b):
            return _checked(a - b, bound)
    elif isinstance(e, Mult):
        def op(a, b):
            return _checked(a * b, bound)
    elif isinstance(e, Pow):
        def op(a, b):
            return _power(a, b, bound, digits)
    elif isinstance(e, Mod):
        op = _modulo
    else:
        raise TypeError(f"not an Expr node: {e!r}")

    if lc is not None and rc is not None:
        try:
            v = op(lc[0], rc[0])
        except EVAL_ERRORS as err:
            def fail(x, err=err):
                raise copy.copy(err)
            return fail, None
        return (lambda x: v), (v,)
    if lc is not None:
        a = lc[0]
        return (lambda x: op(a, rf(x))), None
    if rc is not None:
        b = rc[0]
        return (lambda x: op(lf(x), b)), None
    return (lambda x: op(lf(x), rf(x))), None


def compile_expr(expr, limits: EvalLimits = EvalLimits()) -> Callable[[int], int]:
    """Compile ``expr`` into a function of n. Variable-free subtrees are folded."""
    if isinstance(expr, PeriodicWrap):
        body, _ = _compile(expr.body, limits)
        k = expr.k
        bound = limits.bound

        def periodic(n: int) -> int:
            if n < 0:
                raise DomainError(f"periodic(...) evaluated at negative n={n}")
            return body(_checked(n, bound) % k)
        return periodic

    fn, _ = _compile(expr, limits)
    bound = limits.bound

    def run(n: int) -> int:
        return fn(_checked(n, bound))
    return run


def evaluate(expr, n: int, limits: EvalLimits = EvalLimits()) -> int:
    """Exact value of ``expr`` at x = n."""
    return compile_expr(expr, limits)(n)


def eval_sequence(expr, start: int, count: int, limits: EvalLimits = EvalLimits()) -> list[int]:
    """Values at x = start .. start+count-1; the first failing point aborts
    the whole call and the raised error carries its ``index``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    fn = compile_expr(expr, limits)
    out = []
    for i in range(count):
        try:
            out.append(fn(start + i))
        except EVAL_ERRORS as err:
            err.index = i
            raise
    return out


def naive_eval(expr, n: int, limits: EvalLimits = EvalLimits()) -> int:
    """Direct recursive interpreter with its own arithmetic and trial-division
    primes. Used as an independent check on ``evaluate``."""
    cap = 10 ** limits.max_digits

    def ok(v):
        if abs(v) > cap:
            raise Overflow("naive: magnitude cap")
        return v

    def kth_prime(k):
        if k < 1 or k > limits.max_prime_index:
            raise PrimeIndexOutOfRange(k, limits.max_prime_index)
        count, cand = 0, 1
        while count < k:
            cand += 1
            if all(cand % d for d in range(2, int(cand ** 0.5) + 1)):
                count += 1
        return cand

    def go(e, x):
        if isinstance(e, Var):
            return ok(x)
        if isinstance(e, (Const, NConst)):
            return ok(e.value)
        if isinstance(e, Add):
            a = go(e.left, x)
            return ok(a + go(e.right, x))
        if isinstance(e, Sub):
            a = go(e.left, x)
            return ok(a - go(e.right, x))
        if isinstance(e, Mult):
            a = go(e.left, x)
            return ok(a * go(e.right, x))
        if isinstance(e, Pow):
            b = go(e.base, x)
            p = go(e.exponent, x)
            if p < 0:
                raise NegativeExponent("naive")
            if abs(b) >= 2 and p > limits.max_digits * 4:
                # 2^p > 10^max_digits already
                raise Overflow("naive: power")
            return ok(b ** p)
        if isinstance(e, Mod):
            a = go(e.left, x)
            m = go(e.right, x)
            if m == 0:
                raise ModuloByZero("naive")
            r = a - abs(m) * (a // abs(m))
            return r
        if isinstance(e, PrimeIdx):
            return kth_prime(go(e.arg, x))
        if isinstance(e, SinPi):
            go(e.arg, x)
            return 0
        if isinstance(e, CosPi):
            return (-1) ** (go(e.arg, x) % 2)
        raise DomainError("naive: periodic(...) below the root")

    if isinstance(expr, PeriodicWrap):
        if n < 0:
            raise DomainError("naive: negative n")
        return go(expr.body, ok(n) % expr.k)
    return go(expr, n)


# ---------------------------------------------------------------------------
# Surface syntax
# ---------------------------------------------------------------------------

def render(e) -> str:
    if isinstance(e, Var):
        return "x"
    if isinstance(e, (Const, NConst)):
        return str(e.value)
    op = _BINARY.get(type(e))
    if op is not None:
        left, right = _children(e)
        return f"({render(left)} {op} {render(right)})"
    if isinstance(e, PrimeIdx):
        return f"prime({render(e.arg)})"
    if isinstance(e, SinPi):
        return f"sin(pi * ({render(e.arg)}))"
    if isinstance(e, CosPi):
        return f"cos(pi * ({render(e.arg)}))"
    if isinstance(e, PeriodicWrap):
        return f"periodic({render(e.body)}, {e.k})"
    raise TypeError(f"not an Expr node: {e!r}")


class ParseError(ValueError):
    def __init__(self, offset: int, expected):
        self.offset = offset
        self.expected = frozenset(expected)
        super().__init__(f"at offset {offset}: expected one of {sorted(self.expected)}")


_OPS = {"+": Add, "-": Sub, "*": Mult, "**": Pow, "%": Mod}
_FUNCS = ("prime", "sin", "cos", "periodic")


class _Parser:

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _ws(self):
        t = self.text
        while self.pos < len(t) and t[self.pos] in " \t":
            self.pos += 1

    def _expect(self, token: str):
        self._ws()
        if not self.text.startswith(token, self.pos):
            raise ParseError(self.pos, [token])
        self.pos += len(token)

    def _number(self) -> int:
        self._ws()
        t, start = self.text, self.pos
        end = start
        while end < len(t) and t[end].isdigit():
            end += 1
        if end == start:
            raise ParseError(start, ["<integer>"])
        if t[start] == "0" and end - start > 1:
            raise ParseError(start, ["<integer without leading zeros>"])
        self.pos = end
        return int(t[start:end])

    def expr(self, root: bool = False):
        self._ws()
        t, pos = self.text, self.pos
        if pos >= len(t):
            raise ParseError(pos, ["(", "x", "<integer>", *_FUNCS])
        c = t[pos]
        if c == "(":
            self.pos += 1
            left = self.expr()
            self._ws()
            for sym in ("**", "+", "-", "*", "%"):
                if t.startswith(sym, self.pos):
                    self.pos += len(sym)
                    break
            else:
                raise ParseError(self.pos, list(_OPS))
            right = self.expr()
            self._expect(")")
            return _OPS[sym](left, right)
        if c.isdigit():
            return literal(self._number())
        if c == "x" and not t[pos + 1:pos + 2].isalpha():
            self.pos += 1
            return Var()
        for name in _FUNCS:
            if t.startswith(name + "(", pos):
                if name == "periodic" and not root:
                    raise ParseError(pos, ["(", "x", "<integer>", "prime", "sin", "cos"])
                self.pos += len(name) + 1
                if name == "prime":
                    arg = self.expr()
                    self._expect(")")
                    return PrimeIdx(arg)
                if name == "periodic":
                    body = self.expr()
                    self._expect(",")
                    self._ws()
                    kpos = self.pos
                    k = self._number()
                    if k < 1:
                        raise ParseError(kpos, ["<positive integer>"])
                    self._expect(")")
                    return PeriodicWrap(body, k)
                self._expect("pi")
                self._expect("*")
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                self._expect(")")
                return SinPi(arg) if name == "sin" else CosPi(arg)
        raise ParseError(pos, ["(", "x", "<integer>", *_FUNCS])


def parse(text: str):
    """Parse the surface syntax back into an Expr; ``parse(render(e)) == e``."""
    p = _Parser(text)
    e = p.expr(root=True)
    p._ws()
    if p.pos != len(text):
        raise ParseError(p.pos, ["<end of input>"])
    return e
