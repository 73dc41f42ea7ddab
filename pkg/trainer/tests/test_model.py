import pytest
import torch
from torch import nn

from loratune.config import TrainConfig
from loratune.errors import ConfigError, SchemaError
from loratune.model import (
    BOS,
    EOS,
    SEP,
    LoRALinear,
    adapter_state,
    attach_adapters,
    build_base,
    build_tuned,
    decode_tokens,
    encode_prompt,
    encode_text,
    load_adapter,
    save_adapter,
    _quantize_int4,
)


def test_byte_codec_roundtrip():
    text = "label: إيجابي ok"
    assert decode_tokens(encode_text(text)) == text


def test_decode_skips_special_tokens():
    assert decode_tokens([BOS] + encode_text("hi") + [SEP, EOS]) == "hi"


def test_prompt_encoding_shape():
    tokens = encode_prompt("sys", "user text")
    assert tokens[0] == BOS and tokens[-1] == SEP
    assert decode_tokens(tokens) == "sys\nuser text"


def test_lora_starts_as_identity_delta():
    torch.manual_seed(0)
    base = nn.Linear(16, 8)
    wrapped = LoRALinear(base, rank=4, alpha=4)
    x = torch.randn(5, 16)
    assert torch.allclose(wrapped(x), base(x), atol=1e-6)


def test_lora_delta_moves_output():
    torch.manual_seed(0)
    base = nn.Linear(16, 8)
    wrapped = LoRALinear(base, rank=4, alpha=8)
    with torch.no_grad():
        wrapped.lora_b.fill_(0.1)
    x = torch.randn(5, 16)
    assert not torch.allclose(wrapped(x), base(x), atol=1e-3)


def test_int4_quantization_error_bound():
    torch.manual_seed(1)
    weight = torch.randn(12, 40) * 3
    q, scale = _quantize_int4(weight)
    assert q.dtype == torch.int8
    assert int(q.abs().max()) <= 7
    rebuilt = q.float() * scale[:, None]
    max_err = (weight - rebuilt).abs().amax(dim=1)
    assert torch.all(max_err <= scale / 2 + 1e-6)


def test_quantized_lora_close_to_base():
    torch.manual_seed(2)
    base = nn.Linear(32, 32)
    wrapped = LoRALinear(base, rank=4, alpha=4, quantized=True)
    x = torch.randn(3, 32)
    # int4 rounding error only; still recognizably the same map
    assert torch.allclose(wrapped(x), base(x), atol=0.2)
    assert not hasattr(wrapped, "weight")


def test_attach_freezes_everything_but_adapters():
    model = attach_adapters(build_base("tiny-decoder"), rank=4, alpha=4)
    trainable = [n for n, p in model.named_parameters() if p.requires_grad]
    assert trainable
    assert all("lora_a" in n or "lora_b" in n for n in trainable)


def test_adapter_state_only_lora_tensors():
    model = attach_adapters(build_base("tiny-decoder"), rank=4, alpha=4)
    state = adapter_state(model)
    assert state
    assert all("lora_" in k for k in state)


def test_base_init_is_deterministic():
    a = build_base("tiny-decoder").state_dict()
    b = build_base("tiny-decoder").state_dict()
    assert all(torch.equal(a[k], b[k]) for k in a)


def test_unknown_base_raises():
    with pytest.raises(ConfigError):
        build_base("mega-decoder")


def test_adapter_artifact_roundtrip(tmp_path):
    config = TrainConfig(rank=4, alpha=4, seed=11, max_seq_len=128)
    model = build_tuned(config)
    with torch.no_grad():
        for name, param in model.named_parameters():
            if "lora_b" in name:
                param.add_(0.05)
    path = tmp_path / "adapter.pt"
    save_adapter(path, model, config)

    loaded_config, state = load_adapter(path)
    assert loaded_config == config  # full provenance echo
    rebuilt = build_tuned(loaded_config, state)
    for key, tensor in adapter_state(model).items():
        assert torch.equal(tensor, adapter_state(rebuilt)[key]), key


def test_load_adapter_rejects_other_files(tmp_path):
    path = tmp_path / "weights.pt"
    torch.save({"something": torch.zeros(3)}, path)
    with pytest.raises(SchemaError):
        load_adapter(path)
    with pytest.raises(SchemaError):
        load_adapter(tmp_path / "missing.pt")


def test_forward_rejects_overlong_sequence():
    model = build_base("tiny-decoder")
    tokens = torch.zeros((1, model.spec.max_seq + 1), dtype=torch.long)
    with pytest.raises(ConfigError):
        model(tokens)
