"""Sequence records, categories and their JSON-lines form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, TextIO


class Category(str, Enum):
    POLYNOMIAL = "polynomial"
    EXPONENTIAL = "exponential"
    PRIME = "prime"
    PERIODIC = "periodic"
    MODULO = "modulo"
    TRIGONOMETRIC = "trigonometric"
    FINITE = "finite"
    INCREASING = "increasing"
    BOUNDED = "bounded"
    UNIQUE = "unique"

    @property
    def is_meta(self) -> bool:
        return self in META_CATEGORIES

    def __str__(self):
        return self.value


GENERATIVE_CATEGORIES = (
    Category.POLYNOMIAL, Category.EXPONENTIAL, Category.PRIME, Category.PERIODIC,
    Category.MODULO, Category.TRIGONOMETRIC, Category.FINITE,
)
META_CATEGORIES = frozenset({Category.INCREASING, Category.BOUNDED, Category.UNIQUE})
_ORDER = {c.value: i for i, c in enumerate(Category)}

RECORD_FIELDS = ("id", "source", "values", "formula", "formula_length", "categories", "offset")


def category_sort_key(name: str):
    return (_ORDER.get(name, len(_ORDER)), name)


@dataclass
class SequenceRecord:
    id: str
    source: str  # "synth" | "oeis"
    values: list[int]
    formula: str | None = None
    formula_length: int | None = None
    categories: dict[str, int] = field(default_factory=dict)
    offset: int = 0
    # in-memory only: annotation notes and raw OEIS text fields
    meta: dict = field(default_factory=dict, compare=False, repr=False)
    fields: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.source not in ("synth", "oeis"):
            raise ValueError(f"unknown source {self.source!r}")
        for name, level in self.categories.items():
            if level not in (0, 1, 2, 3, 4):
                raise ValueError(f"membership level for {name} must be 0..4, got {level!r}")

    def level(self, category) -> int:
        return self.categories.get(str(category), 0)

    def to_dict(self) -> dict:
        cats = {k: self.categories[k] for k in sorted(self.categories, key=category_sort_key)
                if self.categories[k]}
        return {
            "id": self.id,
            "source": self.source,
            "values": [str(v) for v in self.values],
            "formula": self.formula,
            "formula_length": self.formula_length,
            "categories": cats,
            "offset": self.offset,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "SequenceRecord":
        return cls(
            id=d["id"],
            source=d["source"],
            values=[int(v) for v in d["values"]],
            formula=d.get("formula"),
            formula_length=d.get("formula_length"),
            categories={str(k): int(v) for k, v in (d.get("categories") or {}).items()},
            offset=int(d.get("offset") or 0),
        )

    @classmethod
    def from_json(cls, line: str) -> "SequenceRecord":
        return cls.from_dict(json.loads(line))


def primary_category(record: SequenceRecord) -> str:
    """Highest-membership generative category (level >= 3), ties in enum order;
    falls back to any category at level >= 3, then ``"none"``."""
    best, best_level = None, 2
    for c in GENERATIVE_CATEGORIES:
        lv = record.level(c)
        if lv > best_level:
            best, best_level = c.value, lv
    if best is not None:
        return best
    for name in sorted(record.categories, key=category_sort_key):
        if record.categories[name] >= 3:
            return name
    return "none"


def read_jsonl(fh: TextIO) -> Iterator[dict]:
    for line in fh:
        line = line.strip()
        if line:
            yield json.loads(line)


def read_records(path) -> Iterator[SequenceRecord]:
    with open(path, encoding="utf-8") as fh:
        for d in read_jsonl(fh):
            yield SequenceRecord.from_dict(d)


def write_records(path, records: Iterable[SequenceRecord]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(r.to_json())
            fh.write("\n")
            n += 1
    return n
