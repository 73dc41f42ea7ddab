"""Manifest-driven ingestion of raw labeled datasets into canonical records.

A corpus manifest is one YAML file declaring every dataset: identity,
language, task, label space, metric, and the source files to read. Adding a
dataset means adding a manifest entry, never code.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping

import yaml

from .errors import (
    DuplicateDatasetId,
    InvalidLabelSpace,
    LabelOutsideSpace,
    MetricTaskMismatch,
    MissingFile,
    ParseError,
    UnknownColumn,
)
from .metrics import MetricKind

log = logging.getLogger(__name__)

LANGUAGES = ("arabic", "english", "hindi")
TASK_KINDS = ("single_label", "multi_label", "summarization")
SPLITS = ("train", "dev", "test")
UNSPLIT_KEY = "all"


@dataclass(frozen=True)
class SourceFile:
    """One raw input file plus the field mapping needed to read it."""

    path: Path
    format: str  # csv | tsv | jsonl
    text_field: str
    label_field: str


@dataclass(frozen=True)
class DatasetMeta:
    id: str
    name: str
    language: str
    task: str
    task_definition: str
    task_kind: str
    label_space: tuple[str, ...]
    metric: MetricKind
    files: Mapping[str, SourceFile]
    sota_score: float | None = None
    presplit: bool = False
    label_delimiter: str | None = None
    label_map_path: Path | None = None


@dataclass(frozen=True)
class Record:
    """One labeled item; target is a sorted label tuple, or a summary string."""

    record_id: str
    dataset_id: str
    text: str
    target: tuple[str, ...] | str
    split: str = "unassigned"

    @property
    def ordinal(self) -> int:
        return int(self.record_id.rsplit(":", 1)[1])

    def with_split(self, split: str) -> "Record":
        return replace(self, split=split)

    def to_dict(self) -> dict:
        target = list(self.target) if isinstance(self.target, tuple) else self.target
        return {
            "record_id": self.record_id,
            "dataset_id": self.dataset_id,
            "text": self.text,
            "target": target,
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Record":
        target = data["target"]
        if isinstance(target, list):
            target = tuple(target)
        return cls(
            record_id=data["record_id"],
            dataset_id=data["dataset_id"],
            text=data["text"],
            target=target,
            split=data.get("split", "unassigned"),
        )


@dataclass(frozen=True)
class CorpusManifest:
    version: str
    seed: int
    datasets: tuple[DatasetMeta, ...]
    base_dir: Path

    def get(self, dataset_id: str) -> DatasetMeta:
        for meta in self.datasets:
            if meta.id == dataset_id:
                return meta
        raise KeyError(dataset_id)


@dataclass
class IngestReport:
    """Row accounting for one dataset; rows_read = len(records) + drops."""

    dataset_id: str
    rows_read: int = 0
    records_out: int = 0
    dropped_empty: int = 0
    dropped_conflicting: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _require(condition: bool, error: type, message: str) -> None:
    if not condition:
        raise error(message)


def _as_source_file(entry: dict, base_dir: Path, dataset_id: str) -> SourceFile:
    for key in ("path", "format", "text_field", "label_field"):
        _require(key in entry, ParseError, f"{dataset_id}: file entry missing {key!r}")
    fmt = entry["format"]
    _require(fmt in ("csv", "tsv", "jsonl"), ParseError, f"{dataset_id}: unknown format {fmt!r}")
    path = Path(entry["path"])
    if not path.is_absolute():
        path = base_dir / path
    return SourceFile(path=path, format=fmt, text_field=entry["text_field"], label_field=entry["label_field"])


def _validate_labels(dataset_id: str, task_kind: str, labels: list) -> tuple[str, ...]:
    if task_kind == "summarization":
        _require(not labels, InvalidLabelSpace, f"{dataset_id}: summarization takes no label space")
        return ()
    _require(bool(labels), InvalidLabelSpace, f"{dataset_id}: empty label space")
    out = []
    for label in labels:
        _require(isinstance(label, str), InvalidLabelSpace, f"{dataset_id}: non-string label {label!r}")
        _require(label == label.strip() and label != "", InvalidLabelSpace,
                 f"{dataset_id}: label {label!r} has stray whitespace")
        _require(label == label.lower(), InvalidLabelSpace,
                 f"{dataset_id}: canonical labels must be lowercase, got {label!r}")
        _require("," not in label, InvalidLabelSpace,
                 f"{dataset_id}: commas are reserved for label-set serialization: {label!r}")
    seen = set()
    for label in labels:
        _require(label not in seen, InvalidLabelSpace, f"{dataset_id}: duplicate label {label!r}")
        seen.add(label)
        out.append(label)
    return tuple(out)


def _parse_dataset(entry: dict, base_dir: Path) -> DatasetMeta:
    for key in ("id", "name", "language", "task", "task_kind", "metric", "files"):
        _require(key in entry, ParseError, f"dataset entry missing {key!r}: {entry.get('id', '?')}")
    dataset_id = str(entry["id"])
    language = entry["language"]
    _require(language in LANGUAGES or str(language).startswith("other:"),
             ParseError, f"{dataset_id}: unknown language {language!r}")
    task_kind = entry["task_kind"]
    _require(task_kind in TASK_KINDS, ParseError, f"{dataset_id}: unknown task_kind {task_kind!r}")

    label_space = _validate_labels(dataset_id, task_kind, entry.get("labels", []))
    metric = MetricKind.parse(str(entry["metric"]))
    if task_kind == "summarization":
        _require(metric.kind == "rouge2", MetricTaskMismatch,
                 f"{dataset_id}: summarization requires rouge2, got {metric}")
    else:
        _require(metric.kind != "rouge2", MetricTaskMismatch,
                 f"{dataset_id}: rouge2 only applies to summarization")
    if metric.kind == "f1_positive":
        _require(metric.pos_label in label_space, InvalidLabelSpace,
                 f"{dataset_id}: positive label {metric.pos_label!r} not in label space")

    presplit = bool(entry.get("presplit", False))
    files_entry = entry["files"]
    _require(isinstance(files_entry, dict) and files_entry, ParseError,
             f"{dataset_id}: files must be a non-empty mapping")
    files = {}
    for split, file_entry in files_entry.items():
        files[str(split)] = _as_source_file(file_entry, base_dir, dataset_id)
    if presplit:
        _require(set(files) <= set(SPLITS), ParseError,
                 f"{dataset_id}: presplit files must use {SPLITS}, got {sorted(files)}")
        _require({"train", "test"} <= set(files), ParseError,
                 f"{dataset_id}: presplit datasets need train and test files")
    else:
        _require(set(files) == {UNSPLIT_KEY}, ParseError,
                 f"{dataset_id}: non-presplit datasets take a single '{UNSPLIT_KEY}' file")

    sota = entry.get("sota_score")
    if sota is not None:
        sota = float(sota)
        _require(0.0 <= sota <= 1.0, ParseError, f"{dataset_id}: sota_score outside [0,1]")

    delimiter = entry.get("label_delimiter")
    if task_kind == "multi_label":
        _require(bool(delimiter), ParseError, f"{dataset_id}: multi_label needs label_delimiter")

    label_map_path = entry.get("label_map")
    if label_map_path is not None:
        label_map_path = Path(label_map_path)
        if not label_map_path.is_absolute():
            label_map_path = base_dir / label_map_path

    return DatasetMeta(
        id=dataset_id,
        name=str(entry["name"]),
        language=language,
        task=str(entry["task"]),
        task_definition=str(entry.get("task_definition", "")),
        task_kind=task_kind,
        label_space=label_space,
        metric=metric,
        files=files,
        sota_score=sota,
        presplit=presplit,
        label_delimiter=delimiter,
        label_map_path=label_map_path,
    )


def load_manifest(path: str | Path) -> CorpusManifest:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"manifest not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ParseError(f"manifest {path}: {exc}") from exc
    _require(isinstance(raw, dict), ParseError, f"manifest {path}: expected a mapping")
    _require("datasets" in raw and raw["datasets"], ParseError, f"manifest {path}: no datasets")

    base_dir = path.parent
    datasets = []
    seen_ids = set()
    for entry in raw["datasets"]:
        meta = _parse_dataset(entry, base_dir)
        if meta.id in seen_ids:
            raise DuplicateDatasetId(meta.id)
        seen_ids.add(meta.id)
        datasets.append(meta)

    return CorpusManifest(
        version=str(raw.get("version", "1")),
        seed=int(raw.get("seed", 0)),
        datasets=tuple(datasets),
        base_dir=base_dir,
    )


def _iter_rows(source: SourceFile) -> Iterable[tuple[str, str]]:
    """Yield (text, raw_label) per row; raises on structural problems."""
    if not source.path.exists():
        raise MissingFile(f"source file not found: {source.path}")
    if source.format in ("csv", "tsv"):
        delimiter = "," if source.format == "csv" else "\t"
        with open(source.path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh, delimiter=delimiter)
            header = reader.fieldnames or []
            for col in (source.text_field, source.label_field):
                if col not in header:
                    raise UnknownColumn(f"{source.path}: no column {col!r} in header {header}")
            try:
                for row in reader:
                    text = row.get(source.text_field)
                    label = row.get(source.label_field)
                    if text is None or label is None:
                        raise ParseError(f"{source.path}: short row at line {reader.line_num}")
                    yield text, label
            except csv.Error as exc:
                raise ParseError(f"{source.path}: {exc}") from exc
    else:
        with open(source.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"{source.path}:{lineno}: {exc}") from exc
                for col in (source.text_field, source.label_field):
                    if col not in obj:
                        raise UnknownColumn(f"{source.path}:{lineno}: no field {col!r}")
                yield str(obj[source.text_field]), str(obj[source.label_field])


def _fold_label(meta: DatasetMeta, raw: str, record_id: str, accepted: frozenset[str]) -> tuple[str, ...] | None:
    """Case-fold and check membership; None signals a droppable conflict."""
    if meta.task_kind == "multi_label":
        parts = [p.strip().lower() for p in raw.split(meta.label_delimiter)]
        parts = [p for p in parts if p]
        if not parts:
            return ()
        for part in parts:
            if part not in accepted:
                raise LabelOutsideSpace(f"{record_id}: label {part!r} outside label space")
        return tuple(sorted(set(parts)))

    folded = raw.strip().lower()
    if not folded:
        return ()
    if meta.label_delimiter and meta.label_delimiter in raw:
        parts = {p.strip().lower() for p in raw.split(meta.label_delimiter) if p.strip()}
        if len(parts) > 1 and parts <= accepted:
            return None  # conflicting golds on a single-label row
    if folded not in accepted:
        raise LabelOutsideSpace(f"{record_id}: label {folded!r} outside label space")
    return (folded,)


def ingest_dataset(
    meta: DatasetMeta,
    extra_labels: frozenset[str] | None = None,
) -> tuple[list[Record], IngestReport]:
    """Read every source file of one dataset into Records, in declared order.

    extra_labels are case-folded surface variants a label map will later
    canonicalize; membership checks accept them so unification stays a
    separate preprocessing step.
    """
    accepted = frozenset(meta.label_space) | (extra_labels or frozenset())
    report = IngestReport(dataset_id=meta.id)
    records: list[Record] = []
    ordinal = 0

    split_order = [s for s in SPLITS if s in meta.files] if meta.presplit else [UNSPLIT_KEY]
    for split_key in split_order:
        source = meta.files[split_key]
        split = split_key if meta.presplit else "unassigned"
        for text, raw_label in _iter_rows(source):
            record_id = f"{meta.id}:{ordinal}"
            ordinal += 1
            report.rows_read += 1
            if not text.strip():
                log.warning("%s: empty text, dropped", record_id)
                report.dropped_empty += 1
                continue
            if meta.task_kind == "summarization":
                if not raw_label.strip():
                    log.warning("%s: empty summary, dropped", record_id)
                    report.dropped_empty += 1
                    continue
                target: tuple[str, ...] | str = raw_label
            else:
                folded = _fold_label(meta, raw_label, record_id, accepted)
                if folded is None:
                    log.warning("%s: conflicting gold labels %r, dropped", record_id, raw_label)
                    report.dropped_conflicting += 1
                    continue
                if folded == ():
                    log.warning("%s: empty label, dropped", record_id)
                    report.dropped_empty += 1
                    continue
                target = folded
            records.append(Record(record_id=record_id, dataset_id=meta.id, text=text, target=target, split=split))

    report.records_out = len(records)
    return records, report


def write_records(records: Iterable[Record], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


def read_records(path: str | Path) -> list[Record]:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"records file not found: {path}")
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(Record.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return records
