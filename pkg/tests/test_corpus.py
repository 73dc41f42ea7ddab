import json

import pytest

from instructmill.corpus import (
    Record,
    ingest_dataset,
    load_manifest,
    read_records,
    write_records,
)
from instructmill.errors import (
    DuplicateDatasetId,
    LabelOutsideSpace,
    MissingFile,
    ParseError,
)


def test_manifest_parses_example_corpus(corpus_manifest):
    assert len(corpus_manifest.datasets) == 6
    assert corpus_manifest.seed == 42
    ids = [m.id for m in corpus_manifest.datasets]
    assert ids == sorted(set(ids), key=ids.index)  # order preserved, unique


def test_manifest_field_details(corpus_manifest):
    ar = corpus_manifest.get("ar_sentiment")
    assert ar.label_delimiter == ","
    assert ar.label_space == ("positive", "negative", "neutral")
    assert ar.sota_score == 0.61

    en = corpus_manifest.get("en_sentiment")
    assert en.presplit
    assert set(en.files) == {"train", "test"}

    chk = corpus_manifest.get("ar_checkworthy")
    assert chk.metric.kind == "f1_positive"
    assert chk.metric.pos_label == "checkworthy"
    assert chk.label_map_path is not None and chk.label_map_path.exists()

    assert corpus_manifest.get("en_checkworthy").sota_score is None


def test_manifest_missing_file_raises(tmp_path):
    with pytest.raises(MissingFile):
        load_manifest(tmp_path / "nope.yaml")


def _write_manifest(tmp_path, body):
    path = tmp_path / "manifest.yaml"
    path.write_text(body, encoding="utf-8")
    return path


MINIMAL = """
seed: 1
version: "1"
datasets:
  - id: d1
    name: D1
    language: english
    task: Sentiment
    task_definition: Classify the sentiment.
    task_kind: single_label
    labels: [a, b]
    metric: accuracy
    files:
      all: {path: d1.csv, format: csv, text_field: text, label_field: label}
"""


def test_manifest_duplicate_id(tmp_path):
    body = MINIMAL + MINIMAL[MINIMAL.find("  - id:") :]
    with pytest.raises(DuplicateDatasetId):
        load_manifest(_write_manifest(tmp_path, body))


def test_manifest_multilabel_needs_delimiter(tmp_path):
    body = MINIMAL.replace("single_label", "multi_label")
    with pytest.raises(ParseError):
        load_manifest(_write_manifest(tmp_path, body))


def test_manifest_presplit_needs_train_and_test(tmp_path):
    body = MINIMAL.replace("files:", "presplit: true\n    files:")
    with pytest.raises(ParseError):
        load_manifest(_write_manifest(tmp_path, body))


def _meta_for_csv(tmp_path, rows, label_space=("a", "b"), delimiter=None):
    csv_path = tmp_path / "d1.csv"
    lines = ["text,label"]
    for text, label in rows:
        quoted = f'"{label}"' if "," in label else label
        lines.append(f"{text},{quoted}")
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    body = MINIMAL.replace("labels: [a, b]",
                           f"labels: [{', '.join(label_space)}]")
    if delimiter:
        body = body.replace("metric: accuracy",
                            f'metric: accuracy\n    label_delimiter: "{delimiter}"')
    manifest = load_manifest(_write_manifest(tmp_path, body))
    return manifest.get("d1")


def test_ingest_reads_and_numbers_records(tmp_path):
    meta = _meta_for_csv(tmp_path, [("one two three", "a"), ("four five six", "b")])
    records, report = ingest_dataset(meta)
    assert [r.record_id for r in records] == ["d1:0", "d1:1"]
    assert records[0].target == ("a",)
    assert report.rows_read == 2
    assert report.records_out == 2


def test_ingest_drops_empty_text_and_label(tmp_path):
    meta = _meta_for_csv(tmp_path, [("", "a"), ("kept text here", "b"), ("more text", "")])
    records, report = ingest_dataset(meta)
    assert len(records) == 1
    assert report.dropped_empty == 2


def test_ingest_drops_conflicting_single_label(tmp_path):
    meta = _meta_for_csv(tmp_path, [("text here now", "a,b"), ("other text", "a")],
                         delimiter=",")
    records, report = ingest_dataset(meta)
    assert [r.target for r in records] == [("a",)]
    assert report.dropped_conflicting == 1


def test_ingest_folds_label_case(tmp_path):
    meta = _meta_for_csv(tmp_path, [("text here now", "A"), ("other text", " b ")])
    records, _ = ingest_dataset(meta)
    assert [r.target for r in records] == [("a",), ("b",)]


def test_ingest_rejects_label_outside_space(tmp_path):
    meta = _meta_for_csv(tmp_path, [("text here now", "zebra")])
    with pytest.raises(LabelOutsideSpace):
        ingest_dataset(meta)


def test_ingest_accepts_extra_labels_for_later_mapping(tmp_path):
    meta = _meta_for_csv(tmp_path, [("text here now", "alpha")])
    records, _ = ingest_dataset(meta, extra_labels=frozenset({"alpha"}))
    assert records[0].target == ("alpha",)


def test_ingest_ordinals_continue_across_presplit_files(corpus_manifest):
    meta = corpus_manifest.get("en_sentiment")
    records, _ = ingest_dataset(meta)
    ordinals = [r.ordinal for r in records]
    assert ordinals == sorted(ordinals)
    assert len(set(ordinals)) == len(ordinals)
    splits = {r.split for r in records}
    assert splits == {"train", "test"}


def test_record_roundtrip_classification_and_summary(tmp_path):
    records = [
        Record("d:0", "d", "some text", ("a", "b"), "train"),
        Record("d:1", "d", "other text", "a plain summary", "test"),
    ]
    path = tmp_path / "records.jsonl"
    write_records(records, path)
    back = read_records(path)
    assert back == records
    assert isinstance(back[1].target, str)


def test_record_file_is_one_json_object_per_line(tmp_path):
    records = [Record("d:0", "d", "text", ("a",), "train")]
    path = tmp_path / "records.jsonl"
    write_records(records, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["record_id"] == "d:0"


def test_example_corpus_ingest_counts(corpus_manifest):
    # ar_sentiment ships one empty-text row, one empty-label row, and one
    # row whose gold holds two different labels.
    from instructmill.preprocess import load_label_map

    meta = corpus_manifest.get("ar_sentiment")
    records, report = ingest_dataset(meta)
    assert report.dropped_empty == 2
    assert report.dropped_conflicting == 1
    assert report.records_out == len(records)

    chk = corpus_manifest.get("ar_checkworthy")
    extra = load_label_map(chk.label_map_path, chk.label_space).surface_forms
    records, _ = ingest_dataset(chk, extra)
    surfaces = {label for r in records for label in r.target}
    assert "worth checking" in surfaces  # raw surface survives until unify
