"""Synthetic sequence generation from the category grammars.

Each slot owns a deterministic stream of attempts: attempt ``j`` of slot ``i``
draws from an RNG keyed by (seed, category, i, j). The merge walks slots in
order and resamples on evaluation errors and duplicate value tuples, so the
output only depends on the config, never on how attempts were computed.
"""

from __future__ import annotations

import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .expr import EVAL_ERRORS, EvalLimits, eval_sequence, parse, render
from .grammar import (
    BudgetInfeasible, MetaCategoryHasNoGrammar, builtin_grammar,
    sample_text, target_length,
)
from .records import Category, SequenceRecord

log = logging.getLogger(__name__)

DEFAULT_BOUNDS = (1, 10, 100, 1000, 10 ** 6)
FINITE_BASES = (Category.POLYNOMIAL, Category.EXPONENTIAL, Category.MODULO)


class GenerationStarved(RuntimeError):
    pass


def _default_starts():
    return {Category.PRIME.value: 1}


@dataclass(frozen=True)
class GenConfig:
    count: int
    terms_per_sequence: int = 64
    len_min: int = 2
    len_max: int = 20
    seed: int = 1234
    limits: EvalLimits = EvalLimits()
    start_index: dict = field(default_factory=_default_starts, hash=False)
    max_attempts: int = 200
    bounds: tuple = DEFAULT_BOUNDS
    unique_window: int = 500

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be positive")
        if self.terms_per_sequence < 3:
            raise ValueError("terms_per_sequence must be >= 3")
        if not 1 <= self.len_min <= self.len_max:
            raise ValueError("need 1 <= len_min <= len_max")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be positive")

    def start_for(self, category) -> int:
        return int(self.start_index.get(str(category), 0))


def label_meta(record: SequenceRecord, bounds=DEFAULT_BOUNDS, unique_window: int = 500) -> SequenceRecord:
    """Attach increasing / bounded / unique levels inferred from the values."""
    vals = record.values
    if not vals:
        raise ValueError("label_meta needs at least one value")
    cats = record.categories
    cats["increasing"] = 4 if all(a <= b for a, b in zip(vals, vals[1:])) else 0
    peak = max(abs(v) for v in vals)
    satisfied = [b for b in sorted(bounds) if peak <= b]
    if satisfied:
        cats["bounded"] = 4
        record.meta["bound"] = satisfied[0]
    else:
        cats["bounded"] = 0
        record.meta.pop("bound", None)
    window = vals[:unique_window]
    if len(set(window)) != len(window):
        cats["unique"] = 0
    else:
        cats["unique"] = 4 if len(vals) >= unique_window else 3
    return record


# ---------------------------------------------------------------------------
# attempts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Context:
    category: Category
    config: GenConfig
    grammars: tuple  # (Grammar, ...) for finite, (Grammar,) otherwise
    len_min: int


def _context(category: Category, config: GenConfig) -> _Context:
    if category.is_meta:
        raise MetaCategoryHasNoGrammar(f"{category} is a meta-category and cannot be generated")
    if category is Category.FINITE:
        grammars = tuple(builtin_grammar(c) for c in FINITE_BASES)
    else:
        grammars = (builtin_grammar(category),)
    floor = min(g.min_size() for g in grammars)
    if config.len_max < floor:
        raise BudgetInfeasible(f"len_max {config.len_max} below minimal {category} formula length {floor}")
    return _Context(category, config, grammars, max(config.len_min, floor))


def _rng(ctx: _Context, slot: int, attempt: int) -> random.Random:
    return random.Random(f"{ctx.config.seed}/{ctx.category.value}/{slot}/{attempt}")


def _budget(ctx: _Context, slot: int) -> int:
    cfg = ctx.config
    return target_length(slot, cfg.count, ctx.len_min, cfg.len_max)


def _draw(ctx: _Context, slot: int, attempt: int):
    """Sample the formula text for one attempt: (text, length, cut)."""
    rng = _rng(ctx, slot, attempt)
    cfg = ctx.config
    grammar = ctx.grammars[0] if len(ctx.grammars) == 1 else rng.choice(ctx.grammars)
    budget = max(_budget(ctx, slot), grammar.min_size())
    text, length = sample_text(grammar, budget, rng)
    if ctx.category is Category.PERIODIC:
        head, k = text[:-1].rsplit(", ", 1)
        k = min(max(int(k), 2), cfg.terms_per_sequence // 3)
        text = f"{head}, {k})"
    cut = rng.randint(1, cfg.terms_per_sequence) if ctx.category is Category.FINITE else None
    return text, length, cut


def _realize(ctx: _Context, text: str, cut):
    """Evaluate a drawn formula; returns the value tuple or an error string."""
    cfg = ctx.config
    try:
        expr = parse(text)
        values = eval_sequence(expr, cfg.start_for(ctx.category), cfg.terms_per_sequence, cfg.limits)
    except EVAL_ERRORS as err:
        return f"{type(err).__name__}: {err}"
    if cut is not None:
        values = values[:cut]
    return tuple(values)


def _first_valid(ctx: _Context, slot: int):
    for j in range(ctx.config.max_attempts):
        text, length, cut = _draw(ctx, slot, j)
        values = _realize(ctx, text, cut)
        if not isinstance(values, str):
            return slot, j, (text, length, cut, values)
    return slot, ctx.config.max_attempts, None


def _prefetch_chunk(args):
    category, config, slots = args
    ctx = _context(category, config)
    return [_first_valid(ctx, s) for s in slots]


@dataclass
class GenerationReport:
    category: str
    slots: int
    produced: int = 0
    skipped: int = 0
    resamples: int = 0
    skip_reasons: dict = field(default_factory=dict)


def run_generation(category, config: GenConfig, jobs: int = 1) -> tuple[list[SequenceRecord], GenerationReport]:
    category = Category(category)
    ctx = _context(category, config)
    report = GenerationReport(category.value, config.count)

    prefetched = {}
    if jobs > 1 and config.count > 1:
        chunk = max(1, -(-config.count // (jobs * 4)))
        work = [(category, config, range(s, min(s + chunk, config.count)))
                for s in range(0, config.count, chunk)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for results in pool.map(_prefetch_chunk, work):
                for slot, j, cand in results:
                    prefetched[slot] = (j, cand)

    seen: set = set()
    realized: dict = {}  # (text, cut) -> values or error string
    saturated: set = set()
    records = []
    width = len(str(config.count - 1))
    for slot in range(config.count):
        budget = _budget(ctx, slot)
        if budget in saturated:
            report.skipped += 1
            report.skip_reasons["saturated budget"] = report.skip_reasons.get("saturated budget", 0) + 1
            log.debug("slot %d skipped: budget %d saturated", slot, budget)
            continue
        start = 0
        accepted = None
        dups = 0
        if slot in prefetched:
            start, cand = prefetched.pop(slot)
            if cand is not None:
                text, length, cut, values = cand
                realized[(text, cut)] = values
                if values in seen:
                    dups += 1
                    start += 1
                else:
                    accepted = cand
        if accepted is None:
            for j in range(start, config.max_attempts):
                text, length, cut = _draw(ctx, slot, j)
                values = realized.get((text, cut))
                if values is None:
                    values = realized[(text, cut)] = _realize(ctx, text, cut)
                if isinstance(values, str):
                    report.resamples += 1
                    continue
                if values in seen:
                    dups += 1
                    report.resamples += 1
                    continue
                accepted = (text, length, cut, values)
                break
        if accepted is None:
            reason = "duplicates" if dups else "evaluation errors"
            report.skipped += 1
            report.skip_reasons[reason] = report.skip_reasons.get(reason, 0) + 1
            if dups:
                saturated.add(budget)
            log.info("slot %d (budget %d) exhausted %d attempts: %s",
                     slot, budget, config.max_attempts, reason)
            continue
        text, length, cut, values = accepted
        seen.add(values)
        rec = SequenceRecord(
            id=f"{category.value}-{slot:0{width}d}",
            source="synth",
            values=list(values),
            formula=render(parse(text)),
            formula_length=length,
            categories={category.value: 4},
            offset=config.start_for(category),
        )
        records.append(label_meta(rec, config.bounds, config.unique_window))
    report.produced = len(records)
    if report.skipped * 2 > config.count:
        raise GenerationStarved(
            f"{category}: {report.skipped} of {config.count} slots exhausted resampling")
    return records, report


def generate(category, config: GenConfig, jobs: int = 1) -> list[SequenceRecord]:
    """Generate up to ``config.count`` distinct sequences for ``category``."""
    return run_generation(category, config, jobs)[0]
