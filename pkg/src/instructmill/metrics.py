"""Scoring: accuracy, micro/macro/weighted F1, positive-class F1, ROUGE-2.

All classification scores operate on label SETS so single-label,
multi-label, and sentinel ("no label extracted") predictions flow through
one code path. Zero-division is defined as 0 everywhere.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import (
    EmptyInput,
    LengthMismatch,
    MetricTaskMismatch,
    UnknownPositiveLabel,
)

CLASSIFICATION_KINDS = ("accuracy", "micro_f1", "macro_f1", "weighted_f1", "f1_positive")
ALL_KINDS = CLASSIFICATION_KINDS + ("rouge2",)


@dataclass(frozen=True)
class MetricKind:
    """A metric selector; f1_positive additionally names its positive label."""

    kind: str
    pos_label: str | None = None

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise MetricTaskMismatch(f"unknown metric kind {self.kind!r}")
        if self.kind == "f1_positive" and not self.pos_label:
            raise MetricTaskMismatch("f1_positive requires a positive label")
        if self.kind != "f1_positive" and self.pos_label is not None:
            raise MetricTaskMismatch(f"{self.kind} does not take a positive label")

    @classmethod
    def parse(cls, text: str) -> "MetricKind":
        """Parse the manifest encoding, e.g. "accuracy" or "f1_positive:yes"."""
        kind, _, pos = text.strip().partition(":")
        return cls(kind, pos or None)

    def __str__(self) -> str:
        if self.pos_label is not None:
            return f"{self.kind}:{self.pos_label}"
        return self.kind

    @property
    def is_classification(self) -> bool:
        return self.kind in CLASSIFICATION_KINDS


@dataclass
class ConfusionCounts:
    """Per-class tp/fp/fn plus gold support, pooled from label-set pairs."""

    tp: Counter = field(default_factory=Counter)
    fp: Counter = field(default_factory=Counter)
    fn: Counter = field(default_factory=Counter)
    support: Counter = field(default_factory=Counter)

    @classmethod
    def from_pairs(cls, preds, golds) -> "ConfusionCounts":
        counts = cls()
        for pred, gold in zip(preds, golds):
            pset, gset = set(pred), set(gold)
            for label in pset & gset:
                counts.tp[label] += 1
            for label in pset - gset:
                counts.fp[label] += 1
            for label in gset - pset:
                counts.fn[label] += 1
            for label in gset:
                counts.support[label] += 1
        return counts

    def f1(self, label: str) -> float:
        tp, fp, fn = self.tp[label], self.fp[label], self.fn[label]
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        if precision + recall == 0.0:
            return 0.0
        return 2.0 * precision * recall / (precision + recall)


def _check_pairs(preds: Sequence, golds: Sequence) -> None:
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(golds)} golds")
    if not golds:
        raise EmptyInput("no prediction/gold pairs")


def classification_metric(kind: MetricKind, preds: Sequence, golds: Sequence) -> float:
    """Score label-set predictions against label-set golds.

    Both sequences hold iterables of labels (a one-element set for
    single-label data). Sentinel labels that can never match a gold are
    allowed in preds; they count as plain wrong answers.
    """
    _check_pairs(preds, golds)
    if not kind.is_classification:
        raise MetricTaskMismatch(f"{kind} is not a classification metric")

    if kind.kind == "accuracy":
        hits = sum(1 for p, g in zip(preds, golds) if set(p) == set(g))
        return hits / len(golds)

    counts = ConfusionCounts.from_pairs(preds, golds)

    if kind.kind == "f1_positive":
        seen = set(counts.support) | set(counts.tp) | set(counts.fp)
        if kind.pos_label not in seen:
            raise UnknownPositiveLabel(
                f"positive label {kind.pos_label!r} occurs in neither golds nor preds"
            )
        return counts.f1(kind.pos_label)

    if kind.kind == "micro_f1":
        tp = sum(counts.tp.values())
        fp = sum(counts.fp.values())
        fn = sum(counts.fn.values())
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        if precision + recall == 0.0:
            return 0.0
        return 2.0 * precision * recall / (precision + recall)

    # macro and weighted average over classes present in the golds
    classes = sorted(counts.support)
    if kind.kind == "macro_f1":
        return sum(counts.f1(c) for c in classes) / len(classes)
    total_support = sum(counts.support.values())
    return sum(counts.f1(c) * counts.support[c] for c in classes) / total_support


@dataclass(frozen=True)
class Rouge2Score:
    precision: float
    recall: float
    f1: float


def _bigrams(text: str) -> Counter:
    tokens = "".join(ch if ch.isalnum() else " " for ch in text.lower()).split()
    return Counter(zip(tokens, tokens[1:]))


def rouge2(candidate: str, reference: str) -> Rouge2Score:
    """Bigram-overlap ROUGE-2: lowercase, punctuation to spaces, whitespace split."""
    cand = _bigrams(candidate)
    ref = _bigrams(reference)
    overlap = sum((cand & ref).values())
    precision = overlap / sum(cand.values()) if cand else 0.0
    recall = overlap / sum(ref.values()) if ref else 0.0
    if precision + recall == 0.0:
        return Rouge2Score(precision, recall, 0.0)
    return Rouge2Score(precision, recall, 2.0 * precision * recall / (precision + recall))


@dataclass(frozen=True)
class EvalOutcome:
    """Per-dataset score with enough provenance to build a report row."""

    dataset_id: str
    metric: str
    score: float
    n_examples: int
    n_unparseable: int
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "metric": self.metric,
            "score": self.score,
            "n_examples": self.n_examples,
            "n_unparseable": self.n_unparseable,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalOutcome":
        return cls(
            dataset_id=data["dataset_id"],
            metric=data["metric"],
            score=float(data["score"]),
            n_examples=int(data["n_examples"]),
            n_unparseable=int(data["n_unparseable"]),
            notes=data.get("notes", ""),
        )


def evaluate_dataset(scored_pairs: Iterable, meta) -> EvalOutcome:
    """Apply meta.metric to scored pairs from postprocess.score_input.

    Pairs carry pred_labels/gold_labels for classification datasets and
    pred_text/gold_text for summarization; the rouge2 dataset score is the
    mean per-example f1.
    """
    pairs = list(scored_pairs)
    if not pairs:
        raise EmptyInput(f"no scored pairs for dataset {meta.id!r}")
    kind = meta.metric
    unparseable = sum(1 for p in pairs if p.unparseable)

    if kind.kind == "rouge2":
        if meta.task_kind != "summarization":
            raise MetricTaskMismatch(f"{meta.id}: rouge2 declared for {meta.task_kind}")
        if any(p.pred_text is None for p in pairs):
            raise MetricTaskMismatch(f"{meta.id}: rouge2 needs text pairs, got labels")
        score = sum(rouge2(p.pred_text, p.gold_text).f1 for p in pairs) / len(pairs)
    else:
        if meta.task_kind == "summarization":
            raise MetricTaskMismatch(f"{meta.id}: {kind} declared for summarization")
        if any(p.pred_labels is None for p in pairs):
            raise MetricTaskMismatch(f"{meta.id}: {kind} needs label pairs, got text")
        preds = [p.pred_labels for p in pairs]
        golds = [p.gold_labels for p in pairs]
        score = classification_metric(kind, preds, golds)

    return EvalOutcome(
        dataset_id=meta.id,
        metric=str(kind),
        score=score,
        n_examples=len(pairs),
        n_unparseable=unparseable,
    )
