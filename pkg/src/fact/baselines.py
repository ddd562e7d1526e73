"""Reference predictors: a dummy floor and k-nearest neighbors on slog features."""

from __future__ import annotations

import json
from collections import Counter
from fractions import Fraction

import numpy as np

from .metrics import slog
from .tasks import PredictionRecord, TaskInstance

REGRESSION_TASKS = ("continuation", "unmasking")


class Unfitted(RuntimeError):
    pass


class KTooLarge(ValueError):
    pass


def _hashable(target):
    if isinstance(target, list):
        return tuple(target)
    if isinstance(target, dict):
        return tuple(target["categories"])
    return target


def _unhash(task, label):
    return list(label) if task in ("classify_multi", "similarity") else label


def _majority(labels):
    """Most common label; ties go to the label that appears first."""
    counts = Counter(labels)
    best = max(counts.values())
    return next(label for label in labels if counts[label] == best)


def _round_half_up(q: Fraction) -> int:
    return (q + Fraction(1, 2)).__floor__()


class DummyModel:
    """Majority class for classification, rounded training mean for regression."""

    def __init__(self):
        self.task = None
        self.value = None

    @property
    def mode(self) -> str:
        return "constant_regressor" if self.task in REGRESSION_TASKS else "most_frequent_class"

    def fit(self, instances) -> "DummyModel":
        instances = list(instances)
        if not instances:
            raise ValueError("dummy fit needs training instances")
        self.task = instances[0].task
        if self.task == "continuation":
            ts = [i.target for i in instances]
            self.value = _round_half_up(Fraction(sum(ts), len(ts)))
        elif self.task == "unmasking":
            ts = [v for i in instances for _, v in i.target]
            self.value = _round_half_up(Fraction(sum(ts), len(ts)))
        elif self.task == "similarity":
            freq = Counter(c for i in instances for c in i.target["categories"])
            self.value = sorted(freq, key=lambda c: (-freq[c], c))
        else:
            labels = sorted((_hashable(i.target) for i in instances), key=json.dumps)
            self.value = _majority(labels)
        return self

    def predict(self, instances) -> list[PredictionRecord]:
        if self.task is None:
            raise Unfitted("call fit before predict")
        out = []
        for inst in instances:
            if self.task == "similarity":
                out.append(PredictionRecord(inst.id, list(self.value)))
                continue
            if self.task == "unmasking":
                cand = [self.value] * len(inst.mask_positions or ())
            elif self.task == "continuation":
                cand = self.value
            else:
                cand = _unhash(self.task, self.value)
            out.append(PredictionRecord(inst.id, [cand]))
        return out


def features(values) -> np.ndarray:
    return np.array([0.0 if v is None else slog(v) for v in values], dtype=np.float64)


def distance(a, b) -> float:
    """Euclidean distance between slog feature vectors."""
    fa, fb = features(a), features(b)
    if fa.shape != fb.shape:
        raise ValueError("feature lengths differ")
    return float(np.sqrt(np.sum((fa - fb) ** 2)))


def _full_window(inst: TaskInstance) -> list:
    if inst.task != "unmasking":
        return list(inst.input)
    vals = list(inst.input)
    for pos, v in inst.target:
        vals[pos] = v
    return vals


def _record_id(inst: TaskInstance) -> str:
    return inst.id.split(":", 1)[1] if ":" in inst.id else inst.id


class KnnModel:
    """k nearest training instances; equal distances are ordered by instance id."""

    def __init__(self, k: int = 5):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.train = None

    def fit(self, instances) -> "KnnModel":
        train = sorted(instances, key=lambda i: i.id)
        if not train:
            raise ValueError("knn fit needs training instances")
        if self.k > len(train):
            raise KTooLarge(f"k={self.k} exceeds {len(train)} training instances")
        windows = [_full_window(i) for i in train]
        if len({len(w) for w in windows}) != 1:
            raise ValueError("training windows differ in length")
        self.task = train[0].task
        self.train = train
        self.windows = windows
        self.X = np.vstack([features(w) for w in windows])
        return self

    def _neighbors(self, query: np.ndarray, visible: np.ndarray | None = None) -> np.ndarray:
        if query.shape[0] != self.X.shape[1]:
            raise ValueError(f"query has {query.shape[0]} features, model expects {self.X.shape[1]}")
        diff = self.X - query
        if visible is not None:
            diff = diff[:, visible]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        # rows are sorted by id, so a stable sort breaks distance ties by id
        order = np.argsort(dist, kind="stable")
        return order[: self.k]

    def predict(self, instances) -> list[PredictionRecord]:
        if self.train is None:
            raise Unfitted("call fit before predict")
        instances = list(instances)
        if self.task == "similarity":
            return self._predict_similarity(instances)
        out = []
        for inst in instances:
            visible = None
            if inst.task == "unmasking":
                visible = np.array([v is not None for v in inst.input])
            nn = self._neighbors(features(inst.input), visible)
            if self.task == "continuation":
                cands = [self.train[j].target for j in nn]
            elif self.task == "unmasking":
                masks = inst.mask_positions or []
                cands = [[self.windows[j][p] for p in masks] for j in nn]
            else:
                label = _majority([_hashable(self.train[j].target) for j in nn])
                cands = [_unhash(self.task, label)]
            out.append(PredictionRecord(inst.id, cands))
        return out

    def _predict_similarity(self, instances):
        """Rank pool categories by the distance of their closest pool member."""
        lookup = {_record_id(i): features(i.input) for i in self.train}
        lookup.update({_record_id(i): features(i.input) for i in instances})
        out = []
        for inst in instances:
            q = features(inst.input)
            best: dict[str, float] = {}
            for cat, rid in inst.target["pool"]:
                d = float(np.sqrt(np.sum((lookup[rid] - q) ** 2)))
                best[cat] = min(d, best.get(cat, np.inf))
            ranking = sorted(best, key=lambda c: (best[c], c))
            out.append(PredictionRecord(inst.id, ranking))
        return out
