"""Organic sequence ingestion: the compact stripped format and 18-field JSONL."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields
from typing import Iterable, Iterator

from .records import SequenceRecord

ID_RE = re.compile(r"A\d{6}")
_HEAD_RE = re.compile(r"A\d{6} *,")
_NOT_NUMERIC = re.compile(r"[^0-9,\-]")
_INT_RE = re.compile(r"-?\d+")

KEYWORDS = frozenset({
    "base", "bref", "cofr", "cons", "core", "dead", "dumb", "easy", "eigen",
    "fini", "frac", "full", "hard", "hear", "less", "look", "more", "mult",
    "nice", "nonn", "obsc", "sign", "tabf", "tabl", "unkn", "walk", "word",
})

TEXT_FIELDS = (
    "identification", "name", "comments", "detailed_references", "links",
    "formulas", "examples", "maple_programs", "mathematica_programs",
    "other_programs", "cross_references", "author", "extensions_and_errors",
)
# alternate spellings seen in exports
_ALIASES = {"cross_reference": "cross_references"}


class ParseError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} at offset {offset}")
        self.offset = offset


class MalformedId(ParseError):
    pass


class TypeMismatch(ParseError):
    def __init__(self, field_name: str, expected: str, got):
        super().__init__(f"field {field_name!r}: expected {expected}, got {type(got).__name__}")
        self.field = field_name


def parse_stripped(line: str) -> tuple[str, list[int]]:
    """Parse ``"A000045 ,0,1,1,2,3,"`` into ``("A000045", [0, 1, 1, 2, 3])``."""
    head = _HEAD_RE.match(line)
    if head is None:
        if not ID_RE.match(line[:7]) or len(line) > 7 and line[7] not in " ,":
            raise MalformedId(f"bad sequence id {line[:8]!r}", 0)
        rest = line[7:]
        raise ParseError("expected ','", 7 + len(rest) - len(rest.lstrip(" ")))
    ident = line[:7]
    i = head.end() - 1
    body = line[i + 1:].rstrip()
    if body.endswith(","):
        body = body[:-1]
    # int() rejects empty tokens and stray '-', the class check rejects the rest
    if body and not _NOT_NUMERIC.search(body):
        try:
            return ident, list(map(int, body.split(",")))
        except ValueError:
            pass
    # slow path: report where it broke
    pos = i + 1
    for tok in line[i + 1:].split(","):
        if not _INT_RE.fullmatch(tok) and not (tok.strip() == "" and pos >= len(line.rstrip())):
            raise ParseError(f"bad value {tok!r}", pos)
        pos += len(tok) + 1
    raise ParseError("empty value list", i + 1)


@dataclass
class OeisEntry:
    oeis_id: str
    name: str
    identification: str | None = None
    value_list: list[int] | None = None
    comments: str | None = None
    detailed_references: str | None = None
    links: str | None = None
    formulas: str | None = None
    examples: str | None = None
    maple_programs: str | None = None
    mathematica_programs: str | None = None
    other_programs: str | None = None
    cross_references: str | None = None
    keywords: list[str] | None = None
    offset_a: int | None = None
    offset_b: int | None = None
    author: str | None = None
    extensions_and_errors: str | None = None
    unknown_keywords: tuple = field(default=(), compare=False)

    def null_fields(self) -> list[str]:
        return [f.name for f in fields(self)
                if f.name != "unknown_keywords" and getattr(self, f.name) is None]

    def text_fields(self) -> dict:
        return {k: getattr(self, k) for k in TEXT_FIELDS}


FIELD_NAMES = tuple(f.name for f in fields(OeisEntry) if f.name != "unknown_keywords")


def _text(name, v):
    if v is None or isinstance(v, str):
        return v
    if isinstance(v, list) and all(isinstance(s, str) for s in v):
        return "\n".join(v)
    raise TypeMismatch(name, "string or list of strings", v)


def _int(name, v):
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, str)):
        raise TypeMismatch(name, "integer", v)
    if isinstance(v, str):
        if not _INT_RE.fullmatch(v.strip()):
            raise TypeMismatch(name, "integer", v)
        return int(v)
    return v


def _values(v):
    if v is None:
        return None
    if isinstance(v, str):
        body = v.strip().strip(",")
        if not body:
            return []
        toks = [t.strip() for t in body.split(",")]
    elif isinstance(v, list):
        toks = v
    else:
        raise TypeMismatch("value_list", "list of integers", v)
    return [_int("value_list", t) for t in toks]


def _keywords(v):
    if v is None:
        return None
    if isinstance(v, str):
        return [k.strip() for k in v.split(",") if k.strip()]
    if isinstance(v, list) and all(isinstance(k, str) for k in v):
        return list(v)
    raise TypeMismatch("keywords", "comma-separated string or list of strings", v)


def parse_entry_jsonl(line: str) -> OeisEntry:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as err:
        raise ParseError(f"invalid JSON: {err.msg}", err.pos) from None
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", 0)
    obj = {_ALIASES.get(k, k): v for k, v in obj.items()}
    for req in ("oeis_id", "name"):
        if obj.get(req) is None:
            raise ParseError(f"missing required field {req!r}")
    oid = obj["oeis_id"]
    if not isinstance(oid, str):
        raise TypeMismatch("oeis_id", "string", oid)
    if not ID_RE.fullmatch(oid):
        raise MalformedId(f"bad sequence id {oid!r}")
    kw = _keywords(obj.get("keywords"))
    return OeisEntry(
        oeis_id=oid,
        value_list=_values(obj.get("value_list")),
        keywords=kw,
        offset_a=_int("offset_a", obj.get("offset_a")),
        offset_b=_int("offset_b", obj.get("offset_b")),
        unknown_keywords=tuple(k for k in kw or () if k not in KEYWORDS),
        **{k: _text(k, obj.get(k)) for k in TEXT_FIELDS},
    )


@dataclass(frozen=True)
class SkipReason:
    id: str
    reason: str  # "NoValues"

    def __str__(self):
        return f"{self.id}: {self.reason}"


def to_record(entry: OeisEntry) -> SequenceRecord | SkipReason:
    if not entry.value_list:
        return SkipReason(entry.oeis_id, "NoValues")
    rec = SequenceRecord(
        id=entry.oeis_id,
        source="oeis",
        values=list(entry.value_list),
        offset=entry.offset_a or 0,
    )
    rec.fields = dict(entry.text_fields(), keywords=entry.keywords)
    return rec


def iter_stripped(lines: Iterable[str]) -> Iterator[SequenceRecord]:
    """Records from a stripped file; the format carries no offset, so 0 is used."""
    for line in lines:
        if not line.strip() or line.startswith("#"):
            continue
        ident, values = parse_stripped(line)
        yield SequenceRecord(id=ident, source="oeis", values=values)


def iter_entries(lines: Iterable[str]) -> Iterator[SequenceRecord | SkipReason]:
    for line in lines:
        if line.strip():
            yield to_record(parse_entry_jsonl(line))
