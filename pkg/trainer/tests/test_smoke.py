"""End-to-end contract: train on the fixture, decode, stay deterministic."""

import json

from conftest import FIXTURES
from loratune import DecodeConfig, run_inference
from loratune.model import load_adapter


def test_two_epoch_finetune_and_deterministic_inference(tiny_run, tmp_path):
    # two epochs on the 200-sample fixture must actually learn
    assert len(tiny_run.epoch_mean_losses) == 2
    epoch1, epoch2 = tiny_run.epoch_mean_losses
    assert epoch2 < epoch1, (epoch1, epoch2)

    # the artifact carries its full training configuration
    config, _ = load_adapter(tiny_run.adapter_path)
    assert config.epochs == 2 and config.base == "tiny-decoder"

    # greedy decoding twice gives byte-identical files
    decode = DecodeConfig(temperature=0.0, max_new_tokens=16)
    first = tmp_path / "first.jsonl"
    second = tmp_path / "second.jsonl"
    for path in (first, second):
        result = run_inference(FIXTURES / "prompts_22.jsonl", path, decode,
                               adapter_path=tiny_run.adapter_path)
    assert first.read_bytes() == second.read_bytes()

    # one prediction line per prompt, header aside
    n_prompts = len((FIXTURES / "prompts_22.jsonl").read_text(
        encoding="utf-8").splitlines())
    lines = first.read_text(encoding="utf-8").splitlines()
    assert result.prompts == n_prompts
    assert len(lines) == n_prompts + 1
    assert json.loads(lines[0])["header"]["temperature"] == 0.0
