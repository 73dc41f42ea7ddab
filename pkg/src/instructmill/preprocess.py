"""Dataset cleaning and split creation.

Pipeline order matters and is fixed: deduplicate -> unify_labels ->
filter_short -> stratified_split (or derive_dev_from_train for presplit
data). Every operation is pure given (input, seed) and conserves counts:
count_in = count_out + removed.
"""

from __future__ import annotations

import json
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import yaml

from . import rng
from .corpus import Record
from .errors import (
    ConfigError,
    DataError,
    EmptyInput,
    InvalidLabelSpace,
    InvalidRatios,
    ParseError,
    UnmappableLabel,
)


@dataclass(frozen=True)
class SplitRatios:
    train: float
    test: float
    dev: float

    def __post_init__(self):
        for name, value in (("train", self.train), ("test", self.test), ("dev", self.dev)):
            if not 0.0 <= value <= 1.0:
                raise InvalidRatios(f"{name} ratio {value} outside [0, 1]")
        if abs(self.train + self.test + self.dev - 1.0) > 1e-9:
            raise InvalidRatios(f"ratios sum to {self.train + self.test + self.dev}, not 1")

    @classmethod
    def parse(cls, text: str) -> "SplitRatios":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise InvalidRatios(f"expected train,test,dev, got {text!r}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise InvalidRatios(f"non-numeric ratio in {text!r}") from None
        return cls(*values)


DEFAULT_RATIOS = SplitRatios(0.7, 0.2, 0.1)


@dataclass(frozen=True)
class LabelMap:
    """Case-insensitive surface-variant table over one label space."""

    label_space: tuple[str, ...]
    variants: dict[str, str] = field(default_factory=dict)  # folded surface -> canonical

    def __post_init__(self):
        for surface, canonical in self.variants.items():
            if canonical not in self.label_space:
                raise InvalidLabelSpace(f"variant {surface!r} maps outside the label space: {canonical!r}")

    @classmethod
    def identity(cls, label_space: Sequence[str]) -> "LabelMap":
        return cls(label_space=tuple(label_space))

    def canonicalize(self, surface: str, record_id: str) -> str:
        folded = surface.strip().lower()
        if folded in self.label_space:
            return folded
        if folded in self.variants:
            return self.variants[folded]
        raise UnmappableLabel(f"{record_id}: cannot map label {surface!r}")

    @property
    def surface_forms(self) -> frozenset[str]:
        return frozenset(self.variants)


def load_label_map(path: str | Path, label_space: Sequence[str]) -> LabelMap:
    """Read a canonical -> [variants] table (YAML or JSON, same shape)."""
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ParseError(f"label map {path}: expected a mapping")
    variants: dict[str, str] = {}
    for canonical, surfaces in raw.items():
        canonical = str(canonical).strip().lower()
        if canonical not in label_space:
            raise InvalidLabelSpace(f"label map {path}: canonical {canonical!r} not in label space")
        for surface in surfaces or []:
            folded = str(surface).strip().lower()
            if variants.get(folded, canonical) != canonical:
                raise InvalidLabelSpace(
                    f"label map {path}: {surface!r} maps to both {variants[folded]!r} and {canonical!r}"
                )
            variants[folded] = canonical
    return LabelMap(label_space=tuple(label_space), variants=variants)


def deduplicate(records: Sequence[Record]) -> tuple[list[Record], int]:
    """Drop later records whose raw text exactly matches an earlier one."""
    seen: set[str] = set()
    kept = []
    for record in records:
        if record.text in seen:
            continue
        seen.add(record.text)
        kept.append(record)
    return kept, len(records) - len(kept)


def unify_labels(records: Sequence[Record], label_map: LabelMap) -> list[Record]:
    out = []
    for record in records:
        if isinstance(record.target, str):  # summaries carry no labels
            out.append(record)
            continue
        mapped = sorted({label_map.canonicalize(lbl, record.record_id) for lbl in record.target})
        out.append(Record(
            record_id=record.record_id,
            dataset_id=record.dataset_id,
            text=record.text,
            target=tuple(mapped),
            split=record.split,
        ))
    return out


def _count_letters(text: str, enough: int) -> bool:
    count = 0
    for ch in text:
        if unicodedata.category(ch).startswith("L"):
            count += 1
            if count >= enough:
                return True
    return False


def filter_short(records: Sequence[Record], min_letters: int = 3) -> tuple[list[Record], int]:
    """Remove records whose text has fewer than min_letters Unicode letters."""
    if min_letters < 1:
        raise ConfigError(f"min_letters must be >= 1, got {min_letters}")
    kept = [r for r in records if _count_letters(r.text, min_letters)]
    return kept, len(records) - len(kept)


def apportion(seats: int, weights: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of integer seats over weights.

    Ties on the fractional remainder resolve by position order, which caller
    contracts fix as train > test > dev for splits and stratum-key order for
    sampling.
    """
    total = float(sum(weights))
    if seats < 0 or (seats > 0 and total <= 0.0):
        raise DataError(f"cannot apportion {seats} seats over weights {list(weights)}")
    quotas = [seats * w / total for w in weights] if total else [0.0] * len(weights)
    floors = [int(q) for q in quotas]
    leftover = seats - sum(floors)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - floors[i]), i))
    for i in order[:leftover]:
        floors[i] += 1
    return floors


def stratum_key(record: Record) -> str:
    """Stratum identity: the sorted label-set for classification records
    (single-label targets are 1-tuples), one shared stratum for summaries,
    whose targets are plain strings (free text would make every record its
    own stratum)."""
    if isinstance(record.target, str):
        return ""
    return "\x1f".join(record.target)


def group_by_stratum(records: Sequence[Record]) -> dict[str, list[int]]:
    strata: dict[str, list[int]] = defaultdict(list)
    for index, record in enumerate(records):
        strata[stratum_key(record)].append(index)
    return dict(sorted(strata.items()))


def _allocate(records: Sequence[Record], shares: Sequence[float], seed: int, stage: str,
              names: Sequence[str]) -> dict[str, list[Record]]:
    """Per-stratum largest-remainder allocation with seeded membership."""
    if not records:
        raise EmptyInput("no records to split")
    dataset_id = records[0].dataset_id
    assignment = [""] * len(records)
    for key, indices in group_by_stratum(records).items():
        counts = apportion(len(indices), shares)
        gen = rng.stream(seed, dataset_id, stage, key)
        shuffled = gen.shuffled(indices)
        cursor = 0
        for name, count in zip(names, counts):
            for index in shuffled[cursor:cursor + count]:
                assignment[index] = name
            cursor += count
    out: dict[str, list[Record]] = {name: [] for name in names}
    for index, record in enumerate(records):
        name = assignment[index]
        out[name].append(record.with_split(name))
    return out


def stratified_split(records: Sequence[Record], ratios: SplitRatios, seed: int,
                     ) -> tuple[list[Record], list[Record], list[Record]]:
    """Assign unassigned records to train/test/dev, stratified by label set.

    Membership inside each stratum comes from a seeded shuffle; output lists
    keep the input order restricted to their members.
    """
    for record in records:
        if record.split != "unassigned":
            raise DataError(f"{record.record_id}: already assigned to {record.split!r}")
    splits = _allocate(records, (ratios.train, ratios.test, ratios.dev), seed, "split",
                       ("train", "test", "dev"))
    return splits["train"], splits["test"], splits["dev"]


def derive_dev_from_train(train_records: Sequence[Record], dev_fraction: float = 0.3,
                          seed: int = 0) -> tuple[list[Record], list[Record]]:
    """Carve a dev set out of an existing train split, same stratified rules."""
    if not 0.0 <= dev_fraction < 1.0:
        raise InvalidRatios(f"dev_fraction {dev_fraction} outside [0, 1)")
    for record in train_records:
        if record.split != "train":
            raise DataError(f"{record.record_id}: expected train split, got {record.split!r}")
    if not train_records:
        raise EmptyInput("no train records")
    if dev_fraction == 0.0:
        return list(train_records), []
    splits = _allocate(train_records, (1.0 - dev_fraction, dev_fraction), seed, "dev",
                       ("train", "dev"))
    return splits["train"], splits["dev"]


@dataclass
class PreprocessReport:
    """Counts removed per stage plus per-split label histograms."""

    dataset_id: str
    records_in: int = 0
    dedup_removed: int = 0
    short_removed: int = 0
    split_counts: dict = field(default_factory=dict)
    label_histograms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)


def label_histogram(records: Iterable[Record]) -> dict[str, int]:
    hist: dict[str, int] = defaultdict(int)
    for record in records:
        if isinstance(record.target, str):
            hist["<summary>"] += 1
        else:
            for label in record.target:
                hist[label] += 1
    return dict(sorted(hist.items()))
