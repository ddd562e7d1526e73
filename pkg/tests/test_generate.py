import pytest

from fact.expr import EvalLimits, eval_sequence, parse
from fact.generate import GenConfig, GenerationStarved, generate, label_meta, run_generation
from fact.grammar import BudgetInfeasible, MetaCategoryHasNoGrammar, target_length
from fact.records import SequenceRecord


def small(**kw):
    kw.setdefault("count", 150)
    kw.setdefault("terms_per_sequence", 40)
    return GenConfig(**kw)


@pytest.mark.parametrize("category", ["polynomial", "exponential", "prime", "modulo", "trigonometric"])
def test_values_match_formula(category):
    cfg = small()
    recs = generate(category, cfg)
    assert len(recs) >= cfg.count * 0.8
    for r in recs:
        assert r.values == eval_sequence(parse(r.formula), r.offset, cfg.terms_per_sequence)
        assert r.categories[category] == 4
        assert 1 <= r.formula_length <= cfg.len_max


def test_prime_offset_and_ids():
    recs = generate("prime", small(count=40))
    assert all(r.offset == 1 for r in recs)
    assert all(r.id.startswith("prime-") and len(r.id) == len("prime-00") for r in recs)
    assert len({r.id for r in recs}) == len(recs)


def test_sequences_are_distinct():
    recs = generate("modulo", small(count=300))
    assert len({tuple(r.values) for r in recs}) == len(recs)


def test_periodic_records_repeat():
    cfg = small(count=100, terms_per_sequence=30)
    for r in generate("periodic", cfg):
        k = int(r.formula[:-1].rsplit(", ", 1)[1])
        assert 2 <= k <= 10
        assert all(r.values[i] == r.values[i - k] for i in range(k, len(r.values)))


def test_finite_records_are_truncated():
    cfg = small(count=100)
    recs = generate("finite", cfg)
    lengths = {len(r.values) for r in recs}
    assert min(lengths) >= 1 and max(lengths) <= cfg.terms_per_sequence
    assert len(lengths) > 5


def test_same_seed_same_output_and_jobs_invariance():
    cfg = small(count=200)
    a = [r.to_json() for r in generate("exponential", cfg)]
    b = [r.to_json() for r in generate("exponential", cfg)]
    c = [r.to_json() for r in generate("exponential", cfg, jobs=3)]
    assert a == b == c
    d = [r.to_json() for r in generate("exponential", small(count=200, seed=99))]
    assert d != a


def test_report_accounts_for_every_slot():
    recs, report = run_generation("polynomial", small(count=400))
    assert report.produced == len(recs)
    assert report.produced + report.skipped == report.slots == 400
    assert sum(report.skip_reasons.values()) == report.skipped


def test_meta_category_rejected():
    with pytest.raises(MetaCategoryHasNoGrammar):
        generate("bounded", small())


def test_budget_infeasible_for_periodic():
    with pytest.raises(BudgetInfeasible):
        generate("periodic", small(len_min=1, len_max=1))


def test_starvation():
    # one-digit cap: nearly every formula overflows
    with pytest.raises(GenerationStarved):
        generate("exponential", small(count=50, limits=EvalLimits(max_digits=1), max_attempts=2))


@pytest.mark.parametrize("kw", [dict(count=0), dict(terms_per_sequence=2), dict(len_min=5, len_max=4),
                                dict(max_attempts=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        small(**kw)


def test_label_meta():
    r = label_meta(SequenceRecord("a", "synth", [1, 2, 2, 50]))
    assert r.categories == {"increasing": 4, "bounded": 4, "unique": 0}
    assert r.meta["bound"] == 100
    r = label_meta(SequenceRecord("b", "synth", [3, -2, 10 ** 7]))
    assert r.categories == {"increasing": 0, "bounded": 0, "unique": 3}
    assert "bound" not in r.meta
    r = label_meta(SequenceRecord("c", "synth", list(range(600))))
    assert r.categories["unique"] == 4
    with pytest.raises(ValueError):
        label_meta(SequenceRecord("d", "synth", []))


@pytest.mark.parametrize("category", ["polynomial", "periodic", "finite"])
def test_budget_law(category):
    cfg = small(count=300)
    for r in generate(category, cfg):
        slot = int(r.id.rsplit("-", 1)[1])
        assert r.formula_length <= max(target_length(slot, cfg.count, cfg.len_min, cfg.len_max), 2)


def test_label_meta_alternating_signs():
    r = label_meta(SequenceRecord("e", "synth", [(-1) ** n for n in range(64)]))
    assert r.categories == {"increasing": 0, "bounded": 4, "unique": 0} and r.meta["bound"] == 1
    r = label_meta(SequenceRecord("f", "synth", [1, 1, 2, 3, 5]))
    assert r.categories["increasing"] == 4
