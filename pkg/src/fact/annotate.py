"""Category annotation: classification methods, aggregation and corpus runs.

Every method is exact (integers and Fractions only) and total: a method that
cannot apply, or that fails, yields an inconclusive verdict instead of raising.
"""

from __future__ import annotations

import copy
import json
import logging
import re
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .generate import DEFAULT_BOUNDS, label_meta
from .primes import is_prime_certain
from .records import SequenceRecord

log = logging.getLogger(__name__)


class Score(IntEnum):
    STRONG_NO = 0
    WEAK_NO = 1
    INCONCLUSIVE = 2
    WEAK_YES = 3
    STRONG_YES = 4


@dataclass(frozen=True)
class Verdict:
    score: Score
    method_name: str
    detail: str | None = None


class TooShort(ValueError):
    pass


class InvalidBase(ValueError):
    pass


class UnknownField(KeyError):
    pass


class BadPattern(ValueError):
    pass


class EmptyVerdicts(ValueError):
    pass


class UnknownMethod(ValueError):
    pass


class UnknownPolicy(ValueError):
    pass


# ---------------------------------------------------------------------------
# value methods
# ---------------------------------------------------------------------------

def _diff(row):
    return [b - a for a, b in zip(row, row[1:])]


def degree_by_divided_differences(values, max_degree: int) -> int | None:
    """Smallest d <= max_degree whose (d+1)-th forward difference vanishes.

    Points are consecutive integers, so divided differences are forward
    differences up to a factorial, and vanishing is unaffected.
    """
    if len(values) < 2:
        raise TooShort("need at least 2 values")
    if max_degree < 0:
        raise ValueError("max_degree must be non-negative")
    row = list(values)
    for d in range(min(max_degree, len(values) - 2) + 1):
        row = _diff(row)
        if not any(row):
            return d
    return None


def extend_polynomial(prefix, total: int) -> list[int]:
    """Continue the degree len(prefix)-1 interpolant of ``prefix`` to ``total`` terms."""
    table = [list(prefix)]
    while len(table[-1]) > 1:
        table.append(_diff(table[-1]))
    edges = [row[-1] for row in table]  # last entry of each difference row
    out = list(prefix)
    while len(out) < total:
        for k in range(len(edges) - 2, -1, -1):
            edges[k] += edges[k + 1]
        out.append(edges[0])
    return out


def polynomial_fit_check(values, holdout_min: int = 5, max_degree: int | None = None) -> Verdict:
    name = "polynomial_fit"
    n = len(values)
    if n < holdout_min + 1 or n < 2:
        return Verdict(Score.INCONCLUSIVE, name, f"only {n} values")
    limit = n - 2 if max_degree is None else max_degree
    d = degree_by_divided_differences(values, limit)
    if d is None:
        return Verdict(Score.WEAK_NO, name, f"no degree <= {min(limit, n - 2)} fits")
    predicted = extend_polynomial(values[:d + 1], n)
    if predicted != list(values):  # cannot happen when the differences vanish
        return Verdict(Score.WEAK_NO, name, f"degree {d} extension mismatch")
    holdout = n - d - 1
    score = Score.STRONG_YES if holdout >= holdout_min else Score.WEAK_YES
    return Verdict(score, name, f"degree {d}, {holdout} held-out values exact")


def exponential_quotient_check(values, tail: int = 30, tolerance=Fraction(1, 100)) -> Verdict:
    name = "exponential_quotient"
    tolerance = Fraction(tolerance)
    if any(v == 0 for v in values):
        return Verdict(Score.INCONCLUSIVE, name, "zero value, quotients undefined")
    if len(values) < 4:
        return Verdict(Score.INCONCLUSIVE, name, f"only {len(values)} values")
    qs = [Fraction(a, b) for a, b in zip(values, values[1:])]
    final = qs[-1]
    if all(q == final for q in qs):
        return Verdict(Score.STRONG_YES, name, f"constant quotient {final}")
    if len(qs) < tail:
        return Verdict(Score.INCONCLUSIVE, name, f"{len(qs)} quotients, tail needs {tail}")
    if all(abs(q - final) <= tolerance for q in qs[-tail:]):
        return Verdict(Score.WEAK_YES, name, f"quotients settle near {final}")
    return Verdict(Score.WEAK_NO, name, "quotients do not settle")


def primality_check(values) -> Verdict:
    name = "primality"
    if not values:
        return Verdict(Score.INCONCLUSIVE, name, "no values")
    probabilistic = False
    for v in values:
        prime, certain = is_prime_certain(v)
        if not prime:
            return Verdict(Score.WEAK_NO, name, f"{v} is not prime")
        probabilistic |= not certain
    detail = "all prime"
    if probabilistic:
        detail += " (values >= 2**64 tested probabilistically)"
    return Verdict(Score.STRONG_YES, name, detail)


def boundedness_check(values, thresholds=DEFAULT_BOUNDS) -> tuple[Verdict, int | None]:
    name = "boundedness"
    if not values:
        return Verdict(Score.INCONCLUSIVE, name, "no values"), None
    peak = max(abs(v) for v in values)
    for bound in sorted(thresholds):
        if peak <= bound:
            return Verdict(Score.STRONG_YES, name,
                           f"|a| <= {bound} on the first {len(values)} terms only"), bound
    return Verdict(Score.WEAK_NO, name, f"max |a| exceeds {max(thresholds)}"), None


def digits(n: int, base: int) -> str:
    if base < 2:
        raise InvalidBase(f"base must be >= 2, got {base}")
    if base == 10:
        return str(n)
    if base == 2:
        return bin(n)[2:]
    if base == 16:
        return hex(n)[2:]
    if n == 0:
        return "0"
    out = []
    while n:
        n, r = divmod(n, base)
        out.append(chr(48 + r) if r < 10 else f"[{r}]")
    return "".join(reversed(out))


def is_palindrome(n: int, base: int = 10) -> bool:
    if base < 2:
        raise InvalidBase(f"base must be >= 2, got {base}")
    if n < 0:
        return False
    # string forms only where every digit is one character
    if base in (2, 10, 16):
        s = digits(n, base)
        return s == s[::-1]
    ds = []
    while n:
        n, r = divmod(n, base)
        ds.append(r)
    return ds == ds[::-1]


def palindrome_check(values, base: int = 10) -> Verdict:
    name = "palindrome"
    if base < 2:
        raise InvalidBase(f"base must be >= 2, got {base}")
    if not values:
        return Verdict(Score.INCONCLUSIVE, name, "no values")
    for v in values:
        if not is_palindrome(v, base):
            return Verdict(Score.WEAK_NO, name, f"{v} not palindromic in base {base}")
    return Verdict(Score.STRONG_YES, name, f"all palindromic in base {base}")


def smallest_period(values) -> int:
    """Smallest p with values[i] == values[i - p] for all i >= p (prefix function)."""
    n = len(values)
    pi = [0] * n
    k = 0
    for i in range(1, n):
        while k and values[i] != values[k]:
            k = pi[k - 1]
        if values[i] == values[k]:
            k += 1
        pi[i] = k
    return n - pi[-1]


def periodicity_check(values, max_period: int = 10_000) -> tuple[Verdict, int | None]:
    name = "periodicity"
    if not values:
        return Verdict(Score.INCONCLUSIVE, name, "no values"), None
    limit = min(max_period, len(values) // 3)
    p = smallest_period(values)
    if p <= limit:
        return Verdict(Score.STRONG_YES, name, f"period {p}"), p
    return Verdict(Score.WEAK_NO, name, f"no period <= {limit} with 3 full repeats"), None


# ---------------------------------------------------------------------------
# text methods
# ---------------------------------------------------------------------------

KNOWN_FIELDS = frozenset({
    "identification", "name", "comments", "detailed_references", "links",
    "formulas", "examples", "maple_programs", "mathematica_programs",
    "other_programs", "cross_references", "author", "extensions_and_errors",
    "keywords",
})

FIBONACCI_LIKE = (
    r"a\(n\)=[0-9]*\*?a\(n[\+\-][0-9]+\)[\+\-][0-9]*\*?"
    r"a\(n[\+\-][0-9]+\)([\+\-][0-9]*\*?a\(n[\+\-][0-9]+\))*"
)
BUILTIN_PATTERNS = {"fibonacci_like": FIBONACCI_LIKE}


def _field_text(entry_fields: Mapping | None, name: str) -> str | None:
    if name not in KNOWN_FIELDS:
        raise UnknownField(name)
    if entry_fields is None:
        return None
    v = entry_fields.get(name)
    if isinstance(v, list):
        v = ",".join(v)
    return v


def text_search(entry_fields, field: str, needles, case_insensitive: bool = True) -> Verdict:
    name = "text_search"
    text = _field_text(entry_fields, field)
    if text is None:
        return Verdict(Score.INCONCLUSIVE, name, f"{field} is null")
    hay = text.casefold() if case_insensitive else text
    for needle in needles:
        if (needle.casefold() if case_insensitive else needle) in hay:
            return Verdict(Score.WEAK_YES, name, f"{needle!r} found in {field}")
    return Verdict(Score.WEAK_NO, name, f"no needle in {field}")


def compile_pattern(pattern: str) -> re.Pattern:
    try:
        return re.compile(BUILTIN_PATTERNS.get(pattern, pattern))
    except re.error as err:
        raise BadPattern(f"{pattern!r}: {err}") from None


def regex_match(entry_fields, field: str, pattern) -> Verdict:
    name = "regex_match"
    rx = pattern if isinstance(pattern, re.Pattern) else compile_pattern(pattern)
    text = _field_text(entry_fields, field)
    if text is None:
        return Verdict(Score.INCONCLUSIVE, name, f"{field} is null")
    m = rx.search(text)
    if m:
        return Verdict(Score.WEAK_YES, name, f"matched {m.group(0)!r}")
    return Verdict(Score.WEAK_NO, name, "no match")


# ---------------------------------------------------------------------------
# method specs
# ---------------------------------------------------------------------------

def _degree_verdict(values, max_degree: int = 10, holdout_min: int = 5) -> Verdict:
    name = "divided_difference_degree"
    try:
        d = degree_by_divided_differences(values, max_degree)
    except TooShort as err:
        return Verdict(Score.INCONCLUSIVE, name, str(err))
    if d is None:
        return Verdict(Score.WEAK_NO, name, f"no degree <= {max_degree}")
    spare = len(values) - d - 2
    return Verdict(Score.STRONG_YES if spare >= holdout_min else Score.WEAK_YES, name, f"degree {d}")


# name -> (callable, input kind)
_METHODS: dict[str, tuple[Callable, str]] = {
    "divided_difference_degree": (_degree_verdict, "values"),
    "polynomial_fit": (polynomial_fit_check, "values"),
    "exponential_quotient": (exponential_quotient_check, "values"),
    "primality": (primality_check, "values"),
    "boundedness": (boundedness_check, "values"),
    "palindrome": (palindrome_check, "values"),
    "periodicity": (periodicity_check, "values"),
    "text_search": (text_search, "fields"),
    "regex_match": (regex_match, "fields"),
}


@dataclass(frozen=True)
class MethodSpec:
    name: str
    params: tuple = ()

    def __post_init__(self):
        if self.name not in _METHODS:
            raise UnknownMethod(self.name)
        params = dict(self.params)
        if self.name == "regex_match":
            compile_pattern(params.get("pattern", ""))
        if self.name == "text_search" or self.name == "regex_match":
            _field_text(None, params.get("field", "name"))
        if self.name == "palindrome" and params.get("base", 10) < 2:
            raise InvalidBase(f"base must be >= 2, got {params['base']}")

    @classmethod
    def of(cls, name: str, **params) -> "MethodSpec":
        return cls(name, tuple(sorted((k, tuple(v) if isinstance(v, list) else v)
                                      for k, v in params.items())))

    def applicable(self, record: SequenceRecord) -> bool:
        kind = _METHODS[self.name][1]
        return bool(record.values) if kind == "values" else True

    def run(self, record: SequenceRecord) -> Verdict:
        if not self.applicable(record):
            return Verdict(Score.INCONCLUSIVE, self.name, "required fields missing")
        fn, kind = _METHODS[self.name]
        params = dict(self.params)
        try:
            if kind == "values":
                out = fn(record.values, **params)
            else:
                params.setdefault("field", "name")
                out = fn(record.fields, **params)
        except Exception as err:  # methods must be total
            log.warning("%s failed on %s: %s", self.name, record.id, err)
            return Verdict(Score.INCONCLUSIVE, self.name, f"error: {err}")
        return out[0] if isinstance(out, tuple) else out


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def _confident_max(scores: list[int]) -> int:
    decided = [s for s in scores if s != Score.INCONCLUSIVE]
    if not decided:
        return 2
    if all(s >= 3 for s in decided):
        return max(decided)
    if all(s <= 1 for s in decided):
        return min(decided)
    return 2


# inconclusive verdicts take part here; dropping them would break monotonicity
def _plain_max(scores: list[int]) -> int:
    return max(scores)


def _plain_min(scores: list[int]) -> int:
    return min(scores)


POLICIES: dict[str, Callable[[list[int]], int]] = {
    "confident-max-with-conflict-damping": _confident_max,
    "max": _plain_max,
    "min": _plain_min,
}
DEFAULT_POLICY = "confident-max-with-conflict-damping"


def register_policy(name: str, fn: Callable[[list[int]], int]) -> None:
    POLICIES[name] = fn


def aggregate(verdicts: Iterable[Verdict], policy: str = DEFAULT_POLICY) -> int:
    verdicts = list(verdicts)
    if not verdicts:
        raise EmptyVerdicts("aggregate needs at least one verdict")
    try:
        fn = POLICIES[policy]
    except KeyError:
        raise UnknownPolicy(policy) from None
    level = int(fn([int(v.score) for v in verdicts]))
    if not 0 <= level <= 4:
        raise ValueError(f"policy {policy} returned {level}")
    return level


# ---------------------------------------------------------------------------
# annotators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnotatorSpec:
    category: str
    methods: tuple
    aggregator: str = DEFAULT_POLICY

    def __post_init__(self):
        if not self.methods:
            raise ValueError(f"annotator for {self.category} needs at least one method")
        if self.aggregator not in POLICIES:
            raise UnknownPolicy(self.aggregator)

    def verdicts(self, record: SequenceRecord) -> list[Verdict]:
        return [m.run(record) for m in self.methods]

    def level(self, record: SequenceRecord) -> int:
        return aggregate(self.verdicts(record), self.aggregator)


def default_annotators() -> list[AnnotatorSpec]:
    return [
        AnnotatorSpec("polynomial", (MethodSpec.of("polynomial_fit"),)),
        AnnotatorSpec("exponential", (MethodSpec.of("exponential_quotient"),)),
        AnnotatorSpec("prime", (MethodSpec.of("primality"),)),
        AnnotatorSpec("periodic", (MethodSpec.of("periodicity"),)),
        AnnotatorSpec("finite", (MethodSpec.of("text_search", field="keywords", needles=["fini"]),)),
    ]


def annotators_from_config(config) -> list[AnnotatorSpec]:
    """Build annotators from the JSON config shape (a list of objects)."""
    if isinstance(config, str):
        config = json.loads(config)
    out = []
    for entry in config:
        methods = tuple(MethodSpec.of(m["name"], **(m.get("params") or {})) for m in entry["methods"])
        agg = entry.get("aggregator") or {}
        out.append(AnnotatorSpec(entry["category"], methods, agg.get("name", DEFAULT_POLICY)))
    return out


def annotate_record(record: SequenceRecord, annotators, meta: bool = True) -> SequenceRecord:
    rec = copy.copy(record)
    rec.categories = dict(record.categories)
    rec.meta = dict(record.meta)
    if meta and rec.source == "oeis" and rec.values:
        label_meta(rec)
    for ann in annotators:
        level = ann.level(rec)
        # labels only move up, which also makes a second pass a no-op
        rec.categories[ann.category] = max(rec.categories.get(ann.category, 0), level)
    return rec


def annotate_corpus(records: Iterable[SequenceRecord], annotators=None, meta: bool = True) -> list[SequenceRecord]:
    annotators = default_annotators() if annotators is None else list(annotators)
    return [annotate_record(r, annotators, meta) for r in records]
