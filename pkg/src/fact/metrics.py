"""Evaluation metrics and the prediction scorer.

Sums go through math.fsum so results do not depend on instance order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class LengthMismatch(ValueError):
    pass


class Empty(ValueError):
    pass


class EmptyLabelList(ValueError):
    pass


class NoCandidates(ValueError):
    pass


class NegativeDistance(ValueError):
    pass


class UnknownTask(ValueError):
    pass


class MissingPrediction(KeyError):
    pass


@dataclass
class MetricReport:
    metric: str
    value: float
    n: int
    per_category: dict = field(default_factory=dict)  # name -> (value, n)

    def __post_init__(self):
        if self.n < 1:
            raise Empty("a report needs at least one instance")

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "value": self.value,
            "n": self.n,
            "per_category": {k: {"value": v, "n": c} for k, (v, c) in sorted(self.per_category.items())},
        }

    def table(self) -> str:
        rows = [("all", self.value, self.n)] + [(k, v, c) for k, (v, c) in sorted(self.per_category.items())]
        width = max(len(r[0]) for r in rows)
        lines = [f"{'category':<{width}}  {self.metric:>12}  {'n':>7}"]
        lines += [f"{name:<{width}}  {value:>12.6f}  {n:>7}" for name, value, n in rows]
        return "\n".join(lines)


def _pair(preds, truths):
    preds, truths = list(preds), list(truths)
    if len(preds) != len(truths):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truths)} truths")
    if not preds:
        raise Empty("no instances")
    return preds, truths


def accuracy(preds: Sequence, truths: Sequence) -> float:
    preds, truths = _pair(preds, truths)
    return sum(p == t for p, t in zip(preds, truths)) / len(preds)


def per_class_f1(pred_sets, truth_sets, labels) -> dict[str, float]:
    """F1 per label as 2tp / (2tp + fp + fn), with 0/0 taken as 0."""
    pred_sets, truth_sets = _pair(pred_sets, truth_sets)
    out = {}
    for label in labels:
        tp = fp = fn = 0
        for p, t in zip(pred_sets, truth_sets):
            inp, int_ = label in p, label in t
            tp += inp and int_
            fp += inp and not int_
            fn += int_ and not inp
        denom = 2 * tp + fp + fn
        out[label] = 2 * tp / denom if denom else 0.0
    return out


def macro_f1(pred_sets, truth_sets, labels) -> float:
    labels = list(labels)
    if not labels:
        raise EmptyLabelList("macro F1 needs at least one label")
    scores = per_class_f1(pred_sets, truth_sets, labels)
    return math.fsum(scores.values()) / len(labels)


def slog(v: int) -> float:
    """sign(v) * ln(1 + |v|), exact-input for integers of any size."""
    a = abs(v)
    mag = math.log1p(a) if a < 1 << 53 else math.log(a + 1)
    return -mag if v < 0 else mag


def rmsle(preds, truths) -> float:
    preds, truths = _pair(preds, truths)
    sq = [(slog(p) - slog(t)) ** 2 for p, t in zip(preds, truths)]
    return math.sqrt(math.fsum(sq) / len(sq))


def _sqrt_ratio(num: int, den: int) -> float:
    try:
        return math.sqrt(num / den)
    except OverflowError:
        return math.exp(0.5 * (math.log(num) - math.log(den)))


def _sum_sq(cand, truth) -> int:
    if len(cand) != len(truth):
        raise LengthMismatch(f"candidate has {len(cand)} values, truth has {len(truth)}")
    return sum((c - t) ** 2 for c, t in zip(cand, truth))


def top_k_rmse(candidates, truth) -> float:
    """Plain RMSE of the candidate closest to ``truth``; exact until the final root."""
    candidates = list(candidates)
    if not candidates:
        raise NoCandidates("top-k RMSE needs at least one candidate")
    if not truth:
        raise Empty("empty truth")
    best = min(_sum_sq(c, truth) for c in candidates)
    return _sqrt_ratio(best, len(truth))


def mean_top_k_rmse(instances: Iterable[tuple]) -> float:
    """Mean over (candidates, truth) pairs of the per-instance minimum RMSE."""
    vals = [top_k_rmse(c, t) for c, t in instances]
    if not vals:
        raise Empty("no instances")
    return math.fsum(vals) / len(vals)


def recall_at_k(rankings, truths, k: int) -> float:
    """Share of queries with a true label among the first k ranked labels.

    A truth may be one label or a collection of labels; any hit counts.
    """
    rankings, truths = _pair(rankings, truths)
    if k < 1:
        raise ValueError("k must be positive")
    hits = 0
    for ranking, truth in zip(rankings, truths):
        if not ranking:
            raise Empty("empty ranking")
        wanted = {truth} if isinstance(truth, str) else set(truth)
        hits += any(label in wanted for label in list(ranking)[:k])
    return hits / len(rankings)


@dataclass(frozen=True)
class ContrastiveParams:
    alpha: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 <= self.lam <= 1:
            raise ValueError("lambda must lie in [0, 1]")


def contrastive_loss(d: float, params: ContrastiveParams = ContrastiveParams()) -> float:
    """(1 - lam) * max(alpha - d, 0)**2 + lam * d**2"""
    if d < 0:
        raise NegativeDistance(f"distance {d} < 0")
    pull = max(params.alpha - d, 0) ** 2
    push = d * d
    return (1 - params.lam) * pull + params.lam * push


def lambda_for_task(kind: str, data) -> float:
    """Pair weight for the contrastive loss.

    similarity: data = (label_a, label_b) -> 1 when equal, else 0.
    continuation: data = (seq_a, seq_b) -> common-prefix length / length.
    unmasking: data = values with None at masked positions -> masked share.
    """
    if kind == "similarity":
        a, b = data
        return 1.0 if a == b else 0.0
    if kind == "continuation":
        a, b = data
        total = max(len(a), len(b))
        if not total:
            raise Empty("empty sequences")
        common = 0
        for x, y in zip(a, b):
            if x != y:
                break
            common += 1
        return common / total
    if kind == "unmasking":
        if not data:
            raise Empty("empty sequence")
        return sum(v is None for v in data) / len(data)
    raise UnknownTask(kind)


# ---------------------------------------------------------------------------
# scoring prediction files against task instances
# ---------------------------------------------------------------------------

DEFAULT_METRIC = {
    "classify_ovr": "accuracy",
    "nspp": "accuracy",
    "classify_multi": "macro_f1",
    "continuation": "rmsle",
    "unmasking": "top_k_rmse",
    "similarity": "recall_at_k",
}


def _aligned(instances, predictions):
    by_id = {}
    for p in predictions:
        by_id[p.id] = p
    for inst in instances:
        if inst.id not in by_id:
            raise MissingPrediction(f"no prediction for instance {inst.id}")
    return [(inst, by_id[inst.id]) for inst in instances]


def _score(metric, pairs, k):
    if metric == "accuracy":
        return accuracy([p.candidates[0] for _, p in pairs], [i.target for i, _ in pairs])
    if metric == "macro_f1":
        truths = [set(i.target) for i, _ in pairs]
        preds = [set(p.candidates[0]) for _, p in pairs]
        labels = sorted(set().union(*truths))
        return macro_f1(preds, truths, labels)
    if metric == "rmsle":
        return rmsle([p.candidates[0] for _, p in pairs], [i.target for i, _ in pairs])
    if metric == "top_k_rmse":
        items = []
        for inst, p in pairs:
            cands = p.candidates[:k]
            if inst.task == "continuation":
                items.append(([[c] for c in cands], [inst.target]))
            else:
                truth = [v for _, v in inst.target]
                items.append((cands, truth))
        return mean_top_k_rmse(items)
    if metric == "recall_at_k":
        return recall_at_k([p.candidates for _, p in pairs], [i.target["categories"] for i, _ in pairs], k)
    raise UnknownTask(f"unknown metric {metric!r}")


def score_predictions(instances, predictions, metric: str | None = None, k: int = 5) -> MetricReport:
    instances = list(instances)
    if not instances:
        raise Empty("no instances to score")
    task = instances[0].task
    metric = metric or DEFAULT_METRIC[task]
    pairs = _aligned(instances, predictions)
    groups: dict[str, list] = {}
    for inst, p in pairs:
        if inst.category:
            groups.setdefault(inst.category, []).append((inst, p))
    per_cat = {c: (_score(metric, g, k), len(g)) for c, g in groups.items()}
    return MetricReport(metric, _score(metric, pairs, k), len(pairs), per_cat)
