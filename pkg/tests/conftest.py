import sys
from pathlib import Path

import pytest

from instructmill.corpus import Record, load_manifest

REPO = Path(__file__).resolve().parents[1]
FIXTURES = REPO / "fixtures"
CORPUS = FIXTURES / "corpus"


def make_records(dataset_id, labels, split="unassigned", text_prefix="item"):
    """One record per label entry; labels may be str, tuple, or None.

    None means a summarization record (plain string target).
    """
    records = []
    for i, label in enumerate(labels):
        if label is None:
            target = f"summary text {i}"
        elif isinstance(label, tuple):
            target = tuple(sorted(label))
        else:
            target = (label,)
        records.append(
            Record(
                record_id=f"{dataset_id}:{i}",
                dataset_id=dataset_id,
                text=f"{text_prefix} {i}",
                target=target,
                split=split,
            )
        )
    return records


@pytest.fixture(scope="session")
def corpus_manifest():
    return load_manifest(CORPUS / "manifest.yaml")


@pytest.fixture()
def meta_sentiment(corpus_manifest):
    return corpus_manifest.get("en_sentiment")


@pytest.fixture()
def meta_checkworthy(corpus_manifest):
    return corpus_manifest.get("ar_checkworthy")
