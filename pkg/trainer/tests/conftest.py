from pathlib import Path

import pytest

from loratune import finetune, preset

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def tiny_run(tmp_path_factory):
    """One tiny-preset training run on the 200-sample fixture, shared."""
    out_dir = tmp_path_factory.mktemp("tiny_run")
    return finetune(FIXTURES / "train_200.jsonl", preset("tiny"), out_dir)
