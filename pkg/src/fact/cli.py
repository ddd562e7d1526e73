"""``fact`` command line: generate, ingest, annotate, split, build tasks, run baselines, evaluate."""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .annotate import annotate_record, annotators_from_config, default_annotators
from .baselines import DummyModel, KnnModel
from .expr import EvalLimits
from .generate import GenConfig, GenerationStarved, run_generation
from .grammar import GrammarError
from .metrics import score_predictions
from .oeis import iter_entries, iter_stripped, parse_entry_jsonl
from .records import Category, SequenceRecord, read_records, write_records
from .tasks import (
    SplitSpec, build_continuation, build_multiclass, build_nspp, build_ovr,
    build_similarity_queries, build_unmasking, read_instances, read_predictions,
    split, write_instances, write_predictions,
)

log = logging.getLogger("fact")

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_STARVED = 0, 1, 2, 3
CHUNK = 1000


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def default_seed() -> int:
    raw = os.environ.get("FACT_SEED")
    if raw is None:
        return 1234
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"FACT_SEED must be an integer, got {raw!r}") from None


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(path: Path, command: str, args, inputs, outputs, started: float, extra=None):
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    manifest = {
        "subcommand": command,
        "params": params,
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": {str(p): _digest(p) for p in outputs},
        "version": __version__,
        "wall_time_s": round(time.time() - started, 3),
    }
    if extra:
        manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")


def _manifest_path(out) -> Path:
    out = Path(out)
    return out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    started = time.time()
    cats = [c.strip() for c in args.category.split(",") if c.strip()]
    try:
        cats = [Category(c) for c in cats]
    except ValueError as err:
        raise ConfigError(str(err)) from None
    if not cats:
        raise ConfigError("no category given")
    try:
        cfg = GenConfig(count=args.count, terms_per_sequence=args.terms, len_min=args.len_min,
                        len_max=args.len_max, seed=args.seed, max_attempts=args.max_attempts,
                        limits=EvalLimits(max_digits=args.max_digits))
    except ValueError as err:
        raise ConfigError(str(err)) from None
    records, reports = [], []
    try:
        for c in cats:
            recs, rep = run_generation(c, cfg, jobs=args.jobs)
            records.extend(recs)
            reports.append(vars(rep))
    except GrammarError as err:
        raise ConfigError(str(err)) from None
    n = write_records(args.out, records)
    log.info("wrote %d records to %s", n, args.out)
    _write_manifest(_manifest_path(args.out), "generate", args, [], [args.out], started,
                    {"reports": reports})
    return EXIT_OK


def cmd_ingest(args) -> int:
    started = time.time()
    if bool(args.stripped) == bool(args.jsonl):
        raise ConfigError("give exactly one of --stripped or --jsonl")
    src = args.stripped or args.jsonl
    skipped: dict[str, int] = {}

    def records():
        with open(src, encoding="utf-8") as fh:
            items = iter_stripped(fh) if args.stripped else iter_entries(fh)
            for item in items:
                if isinstance(item, SequenceRecord):
                    yield item
                else:
                    skipped[item.reason] = skipped.get(item.reason, 0) + 1

    n = write_records(args.out, records())
    log.info("ingested %d records, skipped %s", n, skipped)
    _write_manifest(_manifest_path(args.out), "ingest-oeis", args, [src], [args.out], started,
                    {"skipped": skipped})
    return EXIT_OK


def _annotate_chunk(payload):
    records, annotators = payload
    return [annotate_record(r, annotators) for r in records]


def _load_fields(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                entry = parse_entry_jsonl(line)
                out[entry.oeis_id] = dict(entry.text_fields(), keywords=entry.keywords)
    return out


def cmd_annotate(args) -> int:
    started = time.time()
    if args.config:
        try:
            annotators = annotators_from_config(Path(args.config).read_text(encoding="utf-8"))
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"annotator config: {err}") from None
    else:
        annotators = default_annotators()
    fields = _load_fields(args.fields) if args.fields else {}

    def source():
        for r in read_records(args.input):
            if r.id in fields:
                r.fields = fields[r.id]
            yield r

    def annotated():
        it = source()
        if args.jobs <= 1:
            for r in it:
                yield annotate_record(r, annotators)
            return
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            while True:
                batch = list(itertools.islice(it, CHUNK * args.jobs))
                if not batch:
                    return
                parts = [(batch[i:i + CHUNK], annotators) for i in range(0, len(batch), CHUNK)]
                for done in pool.map(_annotate_chunk, parts):
                    yield from done

    n = write_records(args.out, annotated())
    log.info("annotated %d records", n)
    inputs = [args.input] + ([args.fields] if args.fields else []) + ([args.config] if args.config else [])
    _write_manifest(_manifest_path(args.out), "annotate", args, inputs, [args.out], started)
    return EXIT_OK


def cmd_split(args) -> int:
    started = time.time()
    try:
        spec = SplitSpec.parse(args.ratios, seed=args.seed, stratify=not args.no_stratify)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    records = [r for path in args.input for r in read_records(path)]
    if args.oeis:
        records += list(read_records(args.oeis))
    parts = split(records, spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for name, recs in parts.items():
        path = out_dir / f"{name}.jsonl"
        write_records(path, recs)
        outputs.append(path)
    inputs = list(args.input) + ([args.oeis] if args.oeis else [])
    _write_manifest(out_dir / "manifest.json", "split", args, inputs, outputs, started,
                    {"sizes": {k: len(v) for k, v in parts.items()}})
    return EXIT_OK


def cmd_tasks(args) -> int:
    started = time.time()
    kind = args.task
    if not args.category and (args.scope == "within" or kind == "classify_ovr"):
        raise ConfigError(f"{kind} with scope {args.scope} needs --category")
    records = list(read_records(args.input))
    if args.scope == "within" and kind != "classify_ovr":
        records = [r for r in records if r.level(args.category) >= 3]
    if kind == "classify_ovr":
        insts = build_ovr(records, args.category, args.window, args.seed, args.scope)
    elif kind == "classify_multi":
        insts = build_multiclass(records, args.window, args.scope)
    elif kind == "nspp":
        insts = build_nspp(records, args.nspp_window, args.seed, args.scope)
    elif kind == "continuation":
        insts = build_continuation(records, args.window, args.scope)
    elif kind == "unmasking":
        insts = build_unmasking(records, args.window, args.mask_prob, args.seed, args.scope)
    else:
        insts = build_similarity_queries(records, args.per_category, args.window, args.seed, scope=args.scope)
    n = write_instances(args.out, insts)
    log.info("wrote %d %s instances", n, kind)
    _write_manifest(_manifest_path(args.out), "tasks", args, [args.input], [args.out], started)
    return EXIT_OK


def cmd_baseline(args) -> int:
    started = time.time()
    train = [i for i in read_instances(args.train) if i.task == args.task]
    test = [i for i in read_instances(args.test) if i.task == args.task]
    model = DummyModel() if args.model == "dummy" else KnnModel(args.k)
    preds = model.fit(train).predict(test)
    write_predictions(args.out, args.task, preds)
    _write_manifest(_manifest_path(args.out), "baseline", args, [args.train, args.test], [args.out], started)
    return EXIT_OK


def cmd_eval(args) -> int:
    started = time.time()
    instances = list(read_instances(args.instances))
    if not instances:
        raise ValueError(f"{args.instances} holds no instances")
    preds = list(read_predictions(args.predictions, instances[0].task))
    report = score_predictions(instances, preds, args.metric, args.k)
    print(report.table())
    outputs = []
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
        outputs.append(args.out)
        _write_manifest(_manifest_path(args.out), "eval", args,
                        [args.instances, args.predictions], outputs, started)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fact", description=__doc__)
    p.add_argument("--version", action="version", version=f"fact {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    seed = default_seed()

    g = sub.add_parser("generate", help="sample synthetic sequences from a category grammar")
    g.add_argument("--category", required=True, help="one category, or several separated by commas")
    g.add_argument("--count", type=int, required=True, help="sequences per category")
    g.add_argument("--terms", type=int, default=64)
    g.add_argument("--len-min", type=int, default=2)
    g.add_argument("--len-max", type=int, default=20)
    g.add_argument("--max-attempts", type=int, default=200)
    g.add_argument("--max-digits", type=int, default=120)
    g.add_argument("--seed", type=int, default=seed)
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("ingest-oeis", help="convert organic data to records")
    i.add_argument("--stripped")
    i.add_argument("--jsonl")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_ingest)

    a = sub.add_parser("annotate", help="assign category membership levels")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--config", help="annotator config JSON")
    a.add_argument("--fields", help="18-field JSONL supplying text fields by id")
    a.add_argument("--jobs", type=int, default=1)
    a.set_defaults(func=cmd_annotate)

    s = sub.add_parser("split", help="train / val / test_synth / test_oeis")
    s.add_argument("--in", dest="input", required=True, action="append")
    s.add_argument("--oeis")
    s.add_argument("--ratios", default="9:1:1:1")
    s.add_argument("--no-stratify", action="store_true")
    s.add_argument("--seed", type=int, default=seed)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_split)

    t = sub.add_parser("tasks", help="build task instances from records")
    t.add_argument("--task", required=True, choices=["classify_ovr", "classify_multi", "similarity",
                                                     "nspp", "continuation", "unmasking"])
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--category")
    t.add_argument("--scope", choices=["within", "across"], default="across")
    t.add_argument("--window", type=int, default=50)
    t.add_argument("--nspp-window", type=int, default=25)
    t.add_argument("--mask-prob", type=float, default=0.25)
    t.add_argument("--per-category", type=int, default=5)
    t.add_argument("--seed", type=int, default=seed)
    t.set_defaults(func=cmd_tasks)

    b = sub.add_parser("baseline", help="fit a reference model and predict")
    b.add_argument("--model", required=True, choices=["dummy", "knn"])
    b.add_argument("--task", required=True)
    b.add_argument("--train", required=True)
    b.add_argument("--test", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--k", type=int, default=5)
    b.set_defaults(func=cmd_baseline)

    e = sub.add_parser("eval", help="score predictions")
    e.add_argument("--instances", required=True)
    e.add_argument("--predictions", required=True)
    e.add_argument("--metric")
    e.add_argument("--k", type=int, default=5)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)
    return p


def _fail(err: BaseException, code: int) -> int:
    msg = str(err.args[0]) if isinstance(err, KeyError) and err.args else str(err)
    print(json.dumps({"error": type(err).__name__, "message": msg}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as err:
        return _fail(err, EXIT_CONFIG)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as err:
        return _fail(err, EXIT_CONFIG)
    except GenerationStarved as err:
        return _fail(err, EXIT_STARVED)
    except Exception as err:
        return _fail(err, EXIT_ERROR)


if __name__ == "__main__":
    sys.exit(main())
