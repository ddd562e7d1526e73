"""Benchmark splits, the five task builders, and task / prediction JSONL.

Builders are pure functions of (records, params, seed). Any randomness comes
from an RNG keyed by the seed and the record id, so an instance never depends
on which other records happen to be in the corpus.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

from .records import GENERATIVE_CATEGORIES, SequenceRecord, primary_category

TASK_KINDS = ("classify_ovr", "classify_multi", "similarity", "nspp", "continuation", "unmasking")
SPLIT_NAMES = ("train", "val", "test_synth", "test_oeis")
WINDOW = 50


class EmptySource(ValueError):
    pass


class InsufficientClass(ValueError):
    pass


class InsufficientCategory(ValueError):
    pass


class TooShort(ValueError):
    pass


def _key(seed, *parts) -> str:
    return hashlib.sha256(":".join(map(str, (seed,) + parts)).encode()).hexdigest()


def _rng(seed, *parts) -> random.Random:
    return random.Random(_key(seed, *parts))


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple = (9, 1, 1, 1)
    seed: int = 1234
    stratify_by_category: bool = True

    def __post_init__(self):
        if len(self.ratios) not in (3, 4) or any(r <= 0 for r in self.ratios):
            raise ValueError(f"ratios must be 3 or 4 positive numbers, got {self.ratios}")

    @classmethod
    def parse(cls, text: str, seed: int = 1234, stratify: bool = True) -> "SplitSpec":
        try:
            ratios = tuple(float(r) if "." in r else int(r) for r in text.split(":"))
        except ValueError:
            raise ValueError(f"bad ratio string {text!r}") from None
        return cls(ratios, seed, stratify)


def _allocate(n: int, ratios) -> list[int]:
    """Largest-remainder apportionment of n items; every share is within 1 of exact."""
    total = sum(ratios)
    exact = [n * r / total for r in ratios]
    counts = [int(e) for e in exact]
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def split(records: Iterable[SequenceRecord], spec: SplitSpec = SplitSpec()) -> dict[str, list[SequenceRecord]]:
    records = list(records)
    synth = [r for r in records if r.source == "synth"]
    organic = [r for r in records if r.source == "oeis"]
    if not synth:
        raise EmptySource("no synthetic records to split")
    want_oeis = len(spec.ratios) == 4
    if want_oeis and not organic:
        raise EmptySource("test_oeis requested but there are no organic records")

    strata: dict[str, list[SequenceRecord]] = {}
    for r in synth:
        strata.setdefault(primary_category(r) if spec.stratify_by_category else "all", []).append(r)
    assign: dict[str, str] = {}
    for name in sorted(strata):
        members = sorted(strata[name], key=lambda r: (_key(spec.seed, r.id), r.id))
        counts = _allocate(len(members), spec.ratios[:3])
        i = 0
        for split_name, c in zip(SPLIT_NAMES, counts):
            for r in members[i:i + c]:
                assign[r.id] = split_name
            i += c

    out = {name: [] for name in SPLIT_NAMES[: len(spec.ratios)]}
    for r in synth:
        out[assign[r.id]].append(r)
    if want_oeis:
        cap = round(len(synth) * spec.ratios[3] / sum(spec.ratios[:3]))
        chosen = sorted(organic, key=lambda r: (_key(spec.seed, r.id), r.id))[: max(1, cap)]
        keep = {r.id for r in chosen}
        out["test_oeis"] = [r for r in organic if r.id in keep]
    return out


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------

@dataclass
class TaskInstance:
    task: str
    id: str
    input: list  # ints, None marks a masked position
    target: Any
    scope: str = "across"
    category: str | None = None
    mask_positions: list | None = None
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "id": self.id,
            "scope": self.scope,
            "category": self.category,
            "input": [None if v is None else str(v) for v in self.input],
            "target": _encode_target(self.task, self.target),
            "mask_positions": self.mask_positions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "TaskInstance":
        task = d["task"]
        if task not in TASK_KINDS:
            raise ValueError(f"unknown task kind {task!r}")
        return cls(
            task=task,
            id=d["id"],
            scope=d.get("scope", "across"),
            category=d.get("category"),
            input=[None if v is None else int(v) for v in d["input"]],
            target=_decode_target(task, d["target"]),
            mask_positions=d.get("mask_positions"),
        )


def _encode_target(task, target):
    if task == "continuation":
        return str(target)
    if task == "unmasking":
        return [[p, str(v)] for p, v in target]
    if task == "classify_multi":
        return sorted(target)
    return target


def _decode_target(task, target):
    if task == "continuation":
        return int(target)
    if task == "unmasking":
        return [(int(p), int(v)) for p, v in target]
    if task == "classify_multi":
        return sorted(target)
    return target


def encode_payload(task: str, payload):
    """One prediction candidate. Unmasking candidates list values in mask order;
    a similarity candidate is one category label."""
    if task == "unmasking":
        return [str(v) for v in payload]
    return payload if task == "similarity" else _encode_target(task, payload)


def decode_payload(task: str, payload):
    if task == "unmasking":
        return [int(v) for v in payload]
    return payload if task == "similarity" else _decode_target(task, payload)


def _window(records, length):
    return [r for r in records if len(r.values) >= length]


def build_ovr(records, category: str, window: int = WINDOW, seed: int = 1234, scope: str = "within") -> list[TaskInstance]:
    """Balanced one-vs-rest instances; level-2 records are left out."""
    eligible = _window(records, window)
    pos = [r for r in eligible if r.level(category) >= 3]
    neg = [r for r in eligible if r.level(category) <= 1]
    if not pos or not neg:
        raise InsufficientClass(f"{category}: {len(pos)} positive, {len(neg)} negative records")
    m = min(len(pos), len(neg))

    def keep(side):
        ranked = sorted(side, key=lambda r: (_key(seed, "ovr", category, r.id), r.id))
        return {r.id for r in ranked[:m]}

    chosen = keep(pos) | keep(neg)
    return [
        TaskInstance("classify_ovr", f"ovr:{category}:{r.id}", r.values[:window],
                     r.level(category) >= 3, scope, category)
        for r in eligible if r.id in chosen
    ]


def build_multiclass(records, window: int = WINDOW, scope: str = "across") -> list[TaskInstance]:
    out = []
    for r in _window(records, window):
        labels = sorted(c for c, lv in r.categories.items() if lv >= 3)
        if labels:
            out.append(TaskInstance("classify_multi", f"multi:{r.id}", r.values[:window], labels, scope))
    return out


def build_nspp(records, window: int = 25, seed: int = 1234, scope: str = "across") -> list[TaskInstance]:
    """Positive and negative continuation-window pairs, exactly balanced.

    The negative for a record borrows the second window of another record:
    from the same primary category or a different one, with equal odds,
    falling back to the other group when the first has no usable donor.
    """
    eligible = _window(records, 2 * window)
    if not eligible:
        raise TooShort(f"no record has {2 * window} values")
    if len(eligible) < 2:
        raise InsufficientClass("negatives need at least two records")
    groups: dict[str, list[SequenceRecord]] = {}
    for r in eligible:
        groups.setdefault(primary_category(r), []).append(r)

    out = []
    for r in eligible:
        first, second = r.values[:window], r.values[window:2 * window]
        cat = primary_category(r)
        rng = _rng(seed, "nspp", r.id)
        same = [d for d in groups[cat] if d.id != r.id]
        cross = [d for c, g in sorted(groups.items()) if c != cat for d in g]
        pools = [same, cross] if rng.random() < 0.5 else [cross, same]
        donor = None
        for pool in pools:
            usable = [d for d in pool if d.values[window:2 * window] != second]
            if usable:
                donor = rng.choice(usable)
                break
        if donor is None:
            continue  # dropping both sides keeps the balance exact
        out.append(TaskInstance("nspp", f"nspp:{r.id}:pos", first + second, True, scope, cat))
        neg = TaskInstance("nspp", f"nspp:{r.id}:neg", first + donor.values[window:2 * window], False, scope, cat)
        neg.meta["donor"] = donor.id
        out.append(neg)
    if not out:
        raise InsufficientClass("no record has a usable negative donor")
    return out


def build_continuation(records, prefix_len: int = WINDOW, scope: str = "across") -> list[TaskInstance]:
    eligible = _window(records, prefix_len + 1)
    if not eligible:
        raise TooShort(f"continuation needs records longer than {prefix_len} values")
    return [
        TaskInstance("continuation", f"cont:{r.id}", r.values[:prefix_len], r.values[prefix_len],
                     scope, primary_category(r))
        for r in eligible
    ]


def build_unmasking(records, window: int = WINDOW, mask_prob: float = 0.25, seed: int = 1234,
                    scope: str = "across") -> list[TaskInstance]:
    if not 0 < mask_prob < 1:
        raise ValueError("mask_prob must lie strictly between 0 and 1")
    eligible = _window(records, window)
    if not eligible:
        raise TooShort(f"unmasking needs records with {window} values")
    out = []
    for r in eligible:
        rng = _rng(seed, "unmask", r.id)
        masked = [i for i in range(window) if rng.random() < mask_prob]
        if not masked:
            masked = [window - 1]
        out.append(_masked_instance(f"unmask:{r.id}", r.values[:window], masked, scope, primary_category(r)))
    return out


def _masked_instance(iid, values, masked, scope, category) -> TaskInstance:
    hidden = set(masked)
    shown = [None if i in hidden else v for i, v in enumerate(values)]
    return TaskInstance("unmasking", iid, shown, [(i, values[i]) for i in masked], scope, category, list(masked))


def continuation_as_unmasking(inst: TaskInstance) -> TaskInstance:
    """The unmasking instance that hides only the last element."""
    if inst.task != "continuation":
        raise ValueError("expected a continuation instance")
    values = list(inst.input) + [inst.target]
    return _masked_instance(inst.id.replace("cont:", "unmask-last:", 1), values,
                            [len(values) - 1], inst.scope, inst.category)


def build_similarity_queries(records, per_category: int = 5, window: int = WINDOW, seed: int = 1234,
                             categories=None, scope: str = "across") -> list[TaskInstance]:
    """One query per record with a candidate pool of ``per_category`` records per category."""
    eligible = _window(records, window)
    if categories is None:
        present = {c for r in eligible for c, lv in r.categories.items() if lv >= 3}
        categories = [c.value for c in GENERATIVE_CATEGORIES if c.value in present]
    members = {c: [r for r in eligible if r.level(c) >= 3] for c in categories}
    for c, ms in members.items():
        if len(ms) < per_category:
            raise InsufficientCategory(f"{c} has {len(ms)} records, need {per_category}")
    out = []
    for q in eligible:
        truth = sorted(c for c in categories if q.level(c) >= 3)
        if not truth:
            continue
        rng = _rng(seed, "sim", q.id)
        pool = []
        for c in categories:
            cands = [r for r in members[c] if r.id != q.id]
            if len(cands) < per_category:
                raise InsufficientCategory(f"{c} has {len(cands)} records besides {q.id}, need {per_category}")
            pool.extend([c, r.id] for r in rng.sample(cands, per_category))
        out.append(TaskInstance("similarity", f"sim:{q.id}", q.values[:window],
                                {"categories": truth, "pool": pool}, scope))
    return out


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

def write_instances(path, instances: Iterable[TaskInstance]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write(inst.to_json() + "\n")
            n += 1
    return n


def read_instances(path) -> Iterator[TaskInstance]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield TaskInstance.from_dict(json.loads(line))


@dataclass
class PredictionRecord:
    id: str
    candidates: list

    def __post_init__(self):
        if not self.candidates:
            raise ValueError(f"prediction {self.id} has no candidates")


def write_predictions(path, task: str, preds: Iterable[PredictionRecord]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in preds:
            d = {"id": p.id, "candidates": [encode_payload(task, c) for c in p.candidates]}
            fh.write(json.dumps(d, separators=(",", ":")) + "\n")
            n += 1
    return n


def read_predictions(path, task: str) -> Iterator[PredictionRecord]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                yield PredictionRecord(d["id"], [decode_payload(task, c) for c in d["candidates"]])
