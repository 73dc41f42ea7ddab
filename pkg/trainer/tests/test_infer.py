import json

import pytest
import torch

from conftest import FIXTURES
from loratune import DecodeConfig, run_inference
from loratune.errors import ConfigError
from loratune.infer import _pick_token


def _read(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return json.loads(lines[0])["header"], [json.loads(l) for l in lines[1:]]


def test_base_only_inference_order_and_cardinality(tmp_path):
    out = tmp_path / "preds.jsonl"
    decode = DecodeConfig(max_new_tokens=8)
    result = run_inference(FIXTURES / "prompts_22.jsonl", out, decode,
                           base="tiny-decoder")
    _, rows = _read(out)
    assert result.prompts == 22
    assert len(rows) == 22
    prompt_ids = [json.loads(l)["record_id"] for l in
                  (FIXTURES / "prompts_22.jsonl").read_text(
                      encoding="utf-8").splitlines()]
    assert [r["record_id"] for r in rows] == prompt_ids


def test_header_echoes_decode_settings(tmp_path):
    out = tmp_path / "preds.jsonl"
    run_inference(FIXTURES / "prompts_22.jsonl", out,
                  DecodeConfig(max_new_tokens=4), base="tiny-decoder")
    header, _ = _read(out)
    assert header["temperature"] == 0.0
    assert header["top_p"] == 0.95
    assert header["model"] == "tiny-decoder"


def test_greedy_is_run_to_run_identical(tiny_run, tmp_path):
    decode = DecodeConfig(max_new_tokens=12)
    paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    for path in paths:
        run_inference(FIXTURES / "prompts_22.jsonl", path, decode,
                      adapter_path=tiny_run.adapter_path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_empty_prompts_file_yields_header_only(tmp_path):
    prompts = tmp_path / "prompts.jsonl"
    prompts.write_text("", encoding="utf-8")
    out = tmp_path / "preds.jsonl"
    result = run_inference(prompts, out, DecodeConfig(), base="tiny-decoder")
    assert result.prompts == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 and "header" in json.loads(lines[0])


def test_sampling_same_seed_reproduces(tmp_path):
    decode = DecodeConfig(temperature=0.8, top_p=0.9, max_new_tokens=8)
    outs = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    for out in outs:
        run_inference(FIXTURES / "prompts_22.jsonl", out, decode,
                      base="tiny-decoder", seed=4)
    assert outs[0].read_bytes() == outs[1].read_bytes()


def test_adapter_base_mismatch(tiny_run, tmp_path):
    with pytest.raises(ConfigError):
        run_inference(FIXTURES / "prompts_22.jsonl", tmp_path / "p.jsonl",
                      DecodeConfig(), adapter_path=tiny_run.adapter_path,
                      base="other-decoder")


def test_needs_adapter_or_base(tmp_path):
    with pytest.raises(ConfigError):
        run_inference(FIXTURES / "prompts_22.jsonl", tmp_path / "p.jsonl",
                      DecodeConfig())


def test_pick_token_nucleus_prefers_top_mass():
    logits = torch.tensor([0.0, 10.0, -5.0, 1.0])
    generator = torch.Generator().manual_seed(0)
    decode = DecodeConfig(temperature=1.0, top_p=0.5, max_new_tokens=1)
    # index 1 holds nearly all probability; a 0.5 nucleus is just {1}
    picks = {_pick_token(logits, decode, generator) for _ in range(20)}
    assert picks == {1}


def test_pick_token_greedy_ignores_generator_state():
    logits = torch.tensor([0.0, 2.0, 1.0])
    decode = DecodeConfig(temperature=0.0, max_new_tokens=1)
    g1 = torch.Generator().manual_seed(1)
    g2 = torch.Generator().manual_seed(99)
    assert _pick_token(logits, decode, g1) == 1
    assert _pick_token(logits, decode, g2) == 1
