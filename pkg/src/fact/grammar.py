"""Per-category formula grammars and size-budgeted random derivation.

Formula length counts expansions of the operator non-terminals (Add, Sub,
Mult, Pow, NConst and the category extras). The grouping symbols ``N`` and
``T`` and the logical terminals ``Var``, ``Const``, ``ConstPos`` are free, so a
bare ``x`` has length 0 and an n-digit constant costs n.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .expr import parse
from .records import Category

__all__ = [
    "Grammar", "GrammarError", "NoGrammar", "MetaCategoryHasNoGrammar",
    "BudgetInfeasible", "builtin_grammar", "target_length", "sample_formula",
    "sample_text", "sample_exact",
]

UNCOUNTED = frozenset({"Var", "Const", "ConstPos"})
GROUPING = UNCOUNTED | {"N", "T"}


class GrammarError(ValueError):
    pass


class NoGrammar(GrammarError):
    pass


class MetaCategoryHasNoGrammar(NoGrammar):
    pass


class BudgetInfeasible(GrammarError):
    pass


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def _sumset(a: int, b: int, cap_mask: int) -> int:
    out = 0
    for i in _bits(a):
        out |= b << i
    return out & cap_mask


@dataclass
class Grammar:
    category: Category
    start: str
    productions: dict[str, tuple[tuple[str, ...], ...]]
    uncounted: frozenset = UNCOUNTED
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for lhs, alts in self.productions.items():
            if not alts:
                raise GrammarError(f"{lhs} has no alternatives")
            for alt in alts:
                for sym in alt:
                    if sym[:1].isupper() and sym.isidentifier() and sym not in self.productions:
                        raise GrammarError(f"{sym} (used by {lhs}) has no productions")
        if self.start not in self.productions:
            raise GrammarError(f"start symbol {self.start} has no productions")
        if self.min_size(self.start) is None:
            raise GrammarError("start symbol cannot derive a finite string")
        # every reachable non-terminal must terminate
        for lhs in self.productions:
            if self.min_size(lhs) is None:
                raise GrammarError(f"{lhs} cannot derive a finite string")

    def is_nonterminal(self, sym: str) -> bool:
        return sym in self.productions

    def weight(self, sym: str) -> int:
        return 0 if sym in self.uncounted else 1

    def _size_tables(self, cap: int):
        """Bitsets of achievable derivation sizes (< cap) per non-terminal and
        per alternative suffix."""
        tables = self._tables.get(cap)
        if tables is not None:
            return tables
        mask = (1 << cap) - 1
        sizes = {nt: 0 for nt in self.productions}

        def seq_sizes(seq):
            acc = 1
            for sym in seq:
                if sym in sizes:
                    acc = _sumset(acc, sizes[sym], mask)
                    if not acc:
                        break
            return acc

        changed = True
        while changed:
            changed = False
            for nt, alts in self.productions.items():
                new = sizes[nt]
                for alt in alts:
                    new |= (seq_sizes(alt) << self.weight(nt)) & mask
                if new != sizes[nt]:
                    sizes[nt] = new
                    changed = True
        suffixes = {}
        for nt, alts in self.productions.items():
            for alt in alts:
                suf = [1] * (len(alt) + 1)
                for j in range(len(alt) - 1, -1, -1):
                    sym = alt[j]
                    suf[j] = _sumset(sizes[sym], suf[j + 1], mask) if sym in sizes else suf[j + 1]
                suffixes[alt] = suf
        tables = (sizes, suffixes)
        self._tables[cap] = tables
        return tables

    def min_size(self, sym: str | None = None) -> int | None:
        sizes, _ = self._size_tables(64)
        mask = sizes[sym or self.start]
        if not mask:
            return None
        return (mask & -mask).bit_length() - 1

    def feasible_sizes(self, upto: int, sym: str | None = None) -> list[int]:
        sizes, _ = self._size_tables(max(64, upto + 1))
        return [s for s in _bits(sizes[sym or self.start]) if s <= upto]


_DIGITS = tuple((str(d),) for d in range(10))

_BASE = {
    "T": (("Var",), ("Const",)),
    "Add": (("(", "N", " + ", "N", ")"),),
    "Sub": (("(", "N", " - ", "N", ")"),),
    "Mult": (("(", "N", " * ", "N", ")"),),
    "NConst": (("ConstPos", "NConst"), ("Const",)),
    "Var": (("x",),),
    "Const": _DIGITS,
    "ConstPos": _DIGITS[1:],
}
_POW_CONST = (("(", "N", " ** ", "NConst", ")"),)
_POW_FREE = (("(", "N", " ** ", "N", ")"),)
_N_CORE = (("Add",), ("Sub",), ("Mult",), ("Pow",), ("NConst",))


def _grammar(category, extra_n=(), extra_rules=None, pow_rule=_POW_FREE, start="N", root=None):
    rules = dict(_BASE)
    rules["N"] = _N_CORE + tuple((s,) for s in extra_n) + (("T",),)
    rules["Pow"] = pow_rule
    rules.update(extra_rules or {})
    if root:
        rules.update(root)
    return Grammar(category=category, start=start, productions=rules, uncounted=GROUPING)


def builtin_grammar(category) -> Grammar:
    """The category grammar as listed for synthetic generation."""
    category = Category(category)
    if category.is_meta:
        raise MetaCategoryHasNoGrammar(f"{category} is a meta-category; it is inferred, not sampled")
    if category is Category.POLYNOMIAL:
        return _grammar(category, pow_rule=_POW_CONST)
    if category is Category.EXPONENTIAL:
        return _grammar(category)
    if category is Category.PRIME:
        return _grammar(category, extra_n=("Prime",),
                        extra_rules={"Prime": (("prime(", "x", ")"),)})
    if category is Category.MODULO:
        return _grammar(category, extra_n=("Modulo",),
                        extra_rules={"Modulo": (("(", "N", " % ", "N", ")"),)})
    if category is Category.TRIGONOMETRIC:
        return _grammar(category, extra_n=("Sin", "Cos"), extra_rules={
            "Sin": (("sin(pi * (", "N", "))"),),
            "Cos": (("cos(pi * (", "N", "))"),),
        })
    if category is Category.PERIODIC:
        return _grammar(category, start="Periodic",
                        root={"Periodic": (("periodic(", "N", ", ", "NConst", ")"),)})
    raise NoGrammar(f"{category} has no grammar of its own; it reuses the base grammars")


def target_length(i: int, total: int, len_min: int = 2, len_max: int = 20) -> int:
    """Formula-length budget for slot ``i`` of ``total``.

    Lengths are spread evenly on a logarithmic scale between ``len_min`` and
    ``len_max``, so each length L receives a share of slots proportional to
    ln((L+1)/L): short formulas get the most slots, long ones still appear.
    """
    if not 0 <= i < total:
        raise ValueError(f"slot {i} outside [0, {total})")
    if len_min > len_max:
        raise ValueError("len_min must not exceed len_max")
    if total == 1:
        return len_min
    u = i / (total - 1)
    length = math.floor(len_min * math.exp(u * math.log((len_max + 1) / len_min)))
    return min(max(length, len_min), len_max)


SLACK = 2
MAX_REJECTS = 64


def _min_tables(grammar: Grammar):
    tables = grammar._tables.get("min")
    if tables is None:
        mins = {nt: grammar.min_size(nt) for nt in grammar.productions}
        alt_min = {alt: sum(mins.get(s, 0) for s in alt)
                   for alts in grammar.productions.values() for alt in alts}
        tables = grammar._tables["min"] = (mins, alt_min)
    return tables


def _derive(grammar: Grammar, budget: int, rng: random.Random) -> tuple[str, int]:
    """Leftmost derivation choosing uniformly among alternatives whose minimal
    completion, together with that of every pending symbol, fits the budget."""
    mins, alt_min = _min_tables(grammar)
    prods = grammar.productions
    uncounted = grammar.uncounted
    out: list[str] = []
    used = 0
    stack = [grammar.start]
    reserve = mins[grammar.start]  # minimal cost of everything still pending
    while stack:
        sym = stack.pop()
        if sym not in prods:
            out.append(sym)
            continue
        w = 0 if sym in uncounted else 1
        reserve -= mins[sym]
        room = budget - used - reserve - w
        alts = [a for a in prods[sym] if alt_min[a] <= room]
        if not alts:
            alt = min(prods[sym], key=alt_min.__getitem__)
        else:
            alt = alts[0] if len(alts) == 1 else rng.choice(alts)
        used += w
        reserve += alt_min[alt]
        stack.extend(reversed(alt))
    return "".join(out), used


def sample_text(grammar: Grammar, budget: int, rng: random.Random) -> tuple[str, int]:
    """Sample a derivation of the start symbol; return (text, length).

    Draws come from ``_derive`` and are rejected until the length lands in
    [max(1, budget - SLACK), budget]. After MAX_REJECTS misses the exact-size
    sampler takes over, so the window is always honoured when reachable.
    """
    lo_size = grammar.min_size()
    if budget < lo_size:
        raise BudgetInfeasible(f"budget {budget} below minimal formula length {lo_size}")
    floor = max(1, budget - SLACK)
    for _ in range(MAX_REJECTS):
        text, length = _derive(grammar, budget, rng)
        if length >= floor:
            return text, length
    return sample_exact(grammar, budget, rng)


def sample_exact(grammar: Grammar, budget: int, rng: random.Random) -> tuple[str, int]:
    """Pick a length uniformly from the achievable sizes in the slack window
    (or the largest achievable size below it), then expand top-down choosing
    uniformly among alternatives and size splits that hit it exactly."""
    lo_size = grammar.min_size()
    if budget < lo_size:
        raise BudgetInfeasible(f"budget {budget} below minimal formula length {lo_size}")
    cap = max(64, budget + 1)
    sizes, suffixes = grammar._size_tables(cap)
    reachable = [s for s in _bits(sizes[grammar.start]) if s <= budget]
    window = [s for s in reachable if s >= max(1, budget - SLACK)]
    target = rng.choice(window) if window else reachable[-1]

    memo = grammar._tables.setdefault(("choices", cap), {})
    prods = grammar.productions
    uncounted = grammar.uncounted
    out: list[str] = []

    def alternatives(sym, rem):
        key = (sym, rem)
        alts = memo.get(key)
        if alts is None:
            alts = memo[key] = [a for a in prods[sym] if (suffixes[a][0] >> rem) & 1]
        return alts

    def splits(alt, j, sym, rem):
        key = (alt, j, rem)
        opts = memo.get(key)
        if opts is None:
            rest = suffixes[alt][j + 1]
            opts = memo[key] = [k for k in _bits(sizes[sym]) if k <= rem and (rest >> (rem - k)) & 1]
        return opts

    def expand(sym: str, t: int):
        rem = t if sym in uncounted else t - 1
        alts = alternatives(sym, rem)
        alt = alts[0] if len(alts) == 1 else rng.choice(alts)
        for j, s in enumerate(alt):
            if s not in prods:
                out.append(s)
                continue
            opts = splits(alt, j, s, rem)
            k = opts[0] if len(opts) == 1 else rng.choice(opts)
            expand(s, k)
            rem -= k

    expand(grammar.start, target)
    return "".join(out), target


def sample_formula(grammar: Grammar, budget: int, rng: random.Random):
    """Sample an Expr whose derivation length is within the budget window."""
    text, _ = sample_text(grammar, budget, rng)
    return parse(text)
