"""Normalization and label extraction for free-form model outputs.

Generated text rarely contains a bare label: models wrap answers in
sentences, switch scripts mid-word, or refuse entirely. This module
reduces an output string to a canonical form, locates label tokens in
it, and packages the result for scoring. Outputs where no label can be
found are tagged with a sentinel that never equals any gold label.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import ConfigError, EmptyInput

UNPARSEABLE_LABEL = "__unparseable__"

RULE_EXACT = "exact"
RULE_PATTERN = "pattern"
RULE_TRANSLITERATED = "transliterated"
RULE_NONE = "fuzzy_none"

_REPLACEMENT_RE = re.compile(r"^[a-z]+$")

# Characters kept verbatim by normalization besides letters and digits.
_KEPT_PUNCT = frozenset(" -_")


class TransliterationMap:
    """Ordered source -> replacement rules, longest source first.

    Replacements are lowercase ASCII letters so applying the map after
    normalization cannot reintroduce characters normalization removes.
    """

    def __init__(self, rules: Iterable[tuple[str, str]]):
        seen: dict[str, str] = {}
        for source, replacement in rules:
            if not source:
                raise ConfigError("transliteration rule with empty source")
            if source in seen:
                raise ConfigError(
                    f"duplicate transliteration source {source!r}"
                )
            if not _REPLACEMENT_RE.match(replacement):
                raise ConfigError(
                    f"transliteration replacement for {source!r} must be "
                    f"lowercase ASCII letters, got {replacement!r}"
                )
            seen[source] = replacement
        self._rules = dict(seen)
        by_first: dict[str, list[str]] = {}
        for source in seen:
            by_first.setdefault(source[0], []).append(source)
        for sources in by_first.values():
            sources.sort(key=len, reverse=True)
        self._by_first = by_first

    def __len__(self) -> int:
        return len(self._rules)

    @classmethod
    def load(cls, path: Path) -> "TransliterationMap":
        rules = []
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ConfigError(
                    f"{path}:{lineno}: expected 'source<TAB>replacement'"
                )
            rules.append((parts[0], parts[1].strip()))
        return cls(rules)

    def apply(self, text: str) -> str:
        out: list[str] = []
        i = 0
        n = len(text)
        while i < n:
            sources = self._by_first.get(text[i])
            if sources:
                for source in sources:
                    if text.startswith(source, i):
                        out.append(self._rules[source])
                        i += len(source)
                        break
                else:
                    out.append(text[i])
                    i += 1
            else:
                out.append(text[i])
                i += 1
        return "".join(out)


@lru_cache(maxsize=1)
def default_map() -> TransliterationMap:
    ref = resources.files("instructmill").joinpath("data/translit_ar.tsv")
    with resources.as_file(ref) as path:
        return TransliterationMap.load(path)


def _fold(text: str) -> str:
    """Lowercase, strip to the kept alphabet, collapse whitespace."""
    kept: list[str] = []
    for ch in text.lower():
        if ch in _KEPT_PUNCT:
            kept.append(ch)
        else:
            cat = unicodedata.category(ch)
            kept.append(ch if cat.startswith("L") or cat == "Nd" else " ")
    return " ".join("".join(kept).split())


def normalize_output(text: str, translit: Optional[TransliterationMap] = None) -> str:
    table = default_map() if translit is None else translit
    return table.apply(_fold(text))


@dataclass(frozen=True)
class ExtractionResult:
    labels: tuple[str, ...]
    normalized_text: str
    rule: str

    @property
    def matched(self) -> bool:
        return bool(self.labels)


def _match_tokens(normalized: str) -> list[str]:
    # Hyphen and underscore survive normalization but act as token
    # boundaries during matching, so "not checkworthy" and
    # "not-checkworthy" locate the same label.
    return normalized.replace("-", " ").replace("_", " ").split()


@dataclass(frozen=True)
class _Span:
    start: int
    length: int
    label: str
    space_index: int

    @property
    def end(self) -> int:
        return self.start + self.length

    def overlaps(self, other: "_Span") -> bool:
        return self.start < other.end and other.start < self.end


def _find_spans(tokens: Sequence[str], label_space: Sequence[str]) -> list[_Span]:
    spans: list[_Span] = []
    weights: dict[str, int] = {}
    for space_index, label in enumerate(label_space):
        needle = _match_tokens(_fold(label))
        if not needle:
            continue
        weights[label] = sum(map(len, needle))
        width = len(needle)
        for start in range(len(tokens) - width + 1):
            if list(tokens[start : start + width]) == needle:
                spans.append(_Span(start, width, label, space_index))
    # Longest match wins, then earliest occurrence, then label_space order.
    spans.sort(key=lambda s: (-weights[s.label], s.start, s.space_index))
    return spans


def _select(spans: list[_Span]) -> list[_Span]:
    chosen: list[_Span] = []
    for span in spans:
        if any(span.overlaps(kept) for kept in chosen):
            continue
        if any(kept.label == span.label for kept in chosen):
            continue
        chosen.append(span)
    return chosen


def _labels_in(
    normalized: str, label_space: Sequence[str], multi_label: bool
) -> tuple[tuple[str, ...], bool]:
    """Returns (labels, covers_all_tokens)."""
    tokens = _match_tokens(normalized)
    chosen = _select(_find_spans(tokens, label_space))
    if not chosen:
        return (), False
    if not multi_label:
        chosen = chosen[:1]
    covered = sum(s.length for s in chosen)
    labels = tuple(sorted(s.label for s in chosen))
    return labels, covered == len(tokens)


def extract_label(
    text: str,
    label_space: Sequence[str],
    *,
    multi_label: bool = False,
    translit: Optional[TransliterationMap] = None,
) -> ExtractionResult:
    """Locate canonical labels in model output as whole-token sequences.

    Ties between distinct matching labels resolve by longest match,
    then earliest occurrence, then label_space order. A result with no
    labels means the output was unparseable; that is a value, not an
    error.
    """
    if not label_space:
        raise EmptyInput("extract_label requires a non-empty label_space")
    table = default_map() if translit is None else translit
    plain = _fold(text)
    normalized = table.apply(plain)
    labels, covers_all = _labels_in(normalized, label_space, multi_label)
    if not labels:
        return ExtractionResult((), normalized, RULE_NONE)
    if plain != normalized:
        plain_labels, _ = _labels_in(plain, label_space, multi_label)
        if plain_labels != labels:
            return ExtractionResult(labels, normalized, RULE_TRANSLITERATED)
    rule = RULE_EXACT if covers_all else RULE_PATTERN
    return ExtractionResult(labels, normalized, rule)


@dataclass(frozen=True)
class ScoredPair:
    """One prediction joined with its gold target, ready for metrics.

    Classification pairs carry label tuples and leave the text fields
    None; summarization pairs do the reverse.
    """

    record_id: str
    pred_labels: Optional[tuple[str, ...]]
    gold_labels: Optional[tuple[str, ...]]
    pred_text: Optional[str]
    gold_text: Optional[str]
    unparseable: bool
    rule: str

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "pred_labels": list(self.pred_labels) if self.pred_labels is not None else None,
            "gold_labels": list(self.gold_labels) if self.gold_labels is not None else None,
            "pred_text": self.pred_text,
            "gold_text": self.gold_text,
            "unparseable": self.unparseable,
            "rule": self.rule,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScoredPair":
        def _tup(value):
            return tuple(value) if value is not None else None

        return cls(
            record_id=str(data["record_id"]),
            pred_labels=_tup(data["pred_labels"]),
            gold_labels=_tup(data["gold_labels"]),
            pred_text=data["pred_text"],
            gold_text=data["gold_text"],
            unparseable=bool(data["unparseable"]),
            rule=str(data["rule"]),
        )


def score_input(
    prediction_text: str,
    gold,
    meta,
    *,
    record_id: str = "",
    translit: Optional[TransliterationMap] = None,
) -> ScoredPair:
    """Turn raw generated text into a scored pair for meta's task kind.

    Summarization passes text through untouched. Classification runs
    extraction; an unparseable output becomes a sentinel label that can
    never equal a gold label, so it scores as incorrect rather than
    being dropped.
    """
    if meta.task_kind == "summarization":
        return ScoredPair(
            record_id=record_id,
            pred_labels=None,
            gold_labels=None,
            pred_text=prediction_text,
            gold_text=str(gold),
            unparseable=False,
            rule=RULE_EXACT,
        )
    result = extract_label(
        prediction_text,
        meta.label_space,
        multi_label=meta.task_kind == "multi_label",
        translit=translit,
    )
    gold_labels = (gold,) if isinstance(gold, str) else tuple(gold)
    if result.matched:
        pred_labels = result.labels
    else:
        pred_labels = (UNPARSEABLE_LABEL,)
    return ScoredPair(
        record_id=record_id,
        pred_labels=pred_labels,
        gold_labels=gold_labels,
        pred_text=None,
        gold_text=None,
        unparseable=not result.matched,
        rule=result.rule,
    )
