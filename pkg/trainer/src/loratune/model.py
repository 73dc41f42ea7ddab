"""Byte-level decoder LM with low-rank adapters.

The base network is deliberately small: it exists so adapter training
and greedy decoding can be exercised end to end on a CPU in seconds.
Base weights come from a seeded initializer keyed on the model name, so
"the same base" means the same tensors in every process.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn

from .config import TrainConfig
from .errors import ConfigError, SchemaError

PAD, BOS, SEP, EOS = 256, 257, 258, 259
VOCAB = 260

ARTIFACT_FORMAT = "loratune-adapter"


def encode_text(text: str) -> list[int]:
    return list(text.encode("utf-8"))


def decode_tokens(tokens: list[int]) -> str:
    return bytes(t for t in tokens if t < 256).decode("utf-8", errors="replace")


def encode_prompt(system: str, user: str) -> list[int]:
    return [BOS] + encode_text(system + "\n" + user) + [SEP]


@dataclass(frozen=True)
class ModelSpec:
    d_model: int
    n_heads: int
    n_layers: int
    d_ff: int
    max_seq: int
    init_seed: int


REGISTRY: dict[str, ModelSpec] = {
    "tiny-decoder": ModelSpec(d_model=64, n_heads=2, n_layers=2, d_ff=128,
                              max_seq=512, init_seed=7100),
}


def _quantize_int4(weight: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Symmetric per-output-row 4-bit quantization."""
    scale = weight.abs().amax(dim=1).clamp(min=1e-8) / 7.0
    q = torch.round(weight / scale[:, None]).clamp(-7, 7).to(torch.int8)
    return q, scale


class LoRALinear(nn.Module):
    """Frozen linear layer plus a trainable low-rank delta.

    The frozen weight is held either verbatim or as int4 codes with a
    per-row scale; the delta is B @ A scaled by alpha / rank and starts
    at zero (B zero-initialized), so the wrapped layer initially
    computes exactly what the base layer did.
    """

    def __init__(self, base: nn.Linear, rank: int, alpha: int,
                 quantized: bool = False):
        super().__init__()
        self.in_features = base.in_features
        self.out_features = base.out_features
        self.rank = rank
        self.scaling = alpha / rank
        self.quantized = quantized
        weight = base.weight.detach()
        if quantized:
            q, scale = _quantize_int4(weight)
            self.register_buffer("weight_q", q)
            self.register_buffer("weight_scale", scale)
        else:
            self.register_buffer("weight", weight.clone())
        bias = base.bias.detach().clone() if base.bias is not None else None
        self.register_buffer("bias", bias)
        self.lora_a = nn.Parameter(torch.empty(rank, base.in_features))
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        nn.init.normal_(self.lora_a, std=1.0 / math.sqrt(base.in_features))

    def base_weight(self) -> torch.Tensor:
        if self.quantized:
            return self.weight_q.float() * self.weight_scale[:, None]
        return self.weight

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = F.linear(x, self.base_weight().to(x.dtype),
                       None if self.bias is None else self.bias.to(x.dtype))
        delta = F.linear(F.linear(x, self.lora_a.to(x.dtype)),
                         self.lora_b.to(x.dtype))
        return out + self.scaling * delta


class _Block(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.ln1 = nn.LayerNorm(spec.d_model)
        self.attn = nn.MultiheadAttention(spec.d_model, spec.n_heads,
                                          batch_first=True)
        self.ln2 = nn.LayerNorm(spec.d_model)
        self.ff = nn.Sequential(
            nn.Linear(spec.d_model, spec.d_ff),
            nn.GELU(),
            nn.Linear(spec.d_ff, spec.d_model),
        )

    def forward(self, x, attn_mask, pad_mask):
        h = self.ln1(x)
        attended, _ = self.attn(h, h, h, attn_mask=attn_mask,
                                key_padding_mask=pad_mask, need_weights=False)
        x = x + attended
        return x + self.ff(self.ln2(x))


class ByteDecoder(nn.Module):
    def __init__(self, name: str, spec: ModelSpec):
        super().__init__()
        self.name = name
        self.spec = spec
        self.tok_embed = nn.Embedding(VOCAB, spec.d_model)
        self.pos_embed = nn.Embedding(spec.max_seq, spec.d_model)
        self.blocks = nn.ModuleList(_Block(spec) for _ in range(spec.n_layers))
        self.ln_out = nn.LayerNorm(spec.d_model)
        self.head = nn.Linear(spec.d_model, VOCAB, bias=False)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        _, seq = tokens.shape
        if seq > self.spec.max_seq:
            raise ConfigError(f"sequence {seq} exceeds max_seq {self.spec.max_seq}")
        positions = torch.arange(seq, device=tokens.device)
        x = self.tok_embed(tokens) + self.pos_embed(positions)
        causal = torch.triu(
            torch.ones(seq, seq, dtype=torch.bool, device=tokens.device), 1
        )
        padding = tokens.eq(PAD)
        if not padding.any():
            padding = None
        for block in self.blocks:
            x = block(x, causal, padding)
        return self.head(self.ln_out(x))


def build_base(name: str) -> ByteDecoder:
    if name not in REGISTRY:
        raise ConfigError(f"unknown base model {name!r}; have {sorted(REGISTRY)}")
    spec = REGISTRY[name]
    torch.manual_seed(spec.init_seed)
    return ByteDecoder(name, spec)


def attach_adapters(model: ByteDecoder, rank: int, alpha: int,
                    quantized: bool = False) -> ByteDecoder:
    """Freeze the base and wrap every linear projection with LoRA.

    Covers the feed-forward layers, the attention in/out projections,
    and the output head. Only lora_a / lora_b remain trainable.
    """
    for param in model.parameters():
        param.requires_grad_(False)
    for block in model.blocks:
        block.ff[0] = LoRALinear(block.ff[0], rank, alpha, quantized)
        block.ff[2] = LoRALinear(block.ff[2], rank, alpha, quantized)
        block.attn = _LoRAAttention(block.attn, rank, alpha, quantized)
    model.head = LoRALinear(model.head, rank, alpha, quantized)
    return model


class _LoRAAttention(nn.Module):
    """Multi-head self-attention rebuilt from a frozen fused module.

    nn.MultiheadAttention fuses q/k/v into one weight; splitting it into
    three LoRALinear wrappers (plus one for the output projection) keeps
    the adapter surface uniform.
    """

    def __init__(self, base: nn.MultiheadAttention, rank: int, alpha: int,
                 quantized: bool):
        super().__init__()
        self.n_heads = base.num_heads
        d = base.embed_dim
        self.d_head = d // base.num_heads
        fused_w = base.in_proj_weight.detach()
        fused_b = base.in_proj_bias.detach()
        for i, piece in enumerate(("q", "k", "v")):
            linear = nn.Linear(d, d)
            with torch.no_grad():
                linear.weight.copy_(fused_w[i * d:(i + 1) * d])
                linear.bias.copy_(fused_b[i * d:(i + 1) * d])
            setattr(self, piece, LoRALinear(linear, rank, alpha, quantized))
        self.out = LoRALinear(base.out_proj, rank, alpha, quantized)

    def forward(self, q_in, k_in, v_in, attn_mask, key_padding_mask,
                need_weights=False):
        batch, seq, d = q_in.shape
        def split(t):
            return t.view(batch, seq, self.n_heads, self.d_head).transpose(1, 2)
        q, k, v = split(self.q(q_in)), split(self.k(k_in)), split(self.v(v_in))
        mask = attn_mask
        if key_padding_mask is not None:
            pad = key_padding_mask[:, None, None, :]
            mask = mask[None, None] | pad
        scores = (q @ k.transpose(-2, -1)) / math.sqrt(self.d_head)
        scores = scores.masked_fill(mask, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        # fully-masked rows (pad queries) produce NaN softmax; zero them
        weights = torch.nan_to_num(weights)
        merged = (weights @ v).transpose(1, 2).reshape(batch, seq, d)
        return self.out(merged), None


def adapter_state(model: ByteDecoder) -> dict[str, torch.Tensor]:
    return {name: tensor.detach().clone()
            for name, tensor in model.state_dict().items()
            if "lora_a" in name or "lora_b" in name}


def save_adapter(path: Path, model: ByteDecoder, config: TrainConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({
        "format": ARTIFACT_FORMAT,
        "version": 1,
        "config": config.to_dict(),
        "adapter": adapter_state(model),
    }, path)


def load_adapter(path: Path) -> tuple[TrainConfig, dict[str, torch.Tensor]]:
    if not path.exists():
        raise SchemaError(f"adapter not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise SchemaError(f"{path.name}: unreadable artifact: {exc}") from None
    if not isinstance(payload, dict) or payload.get("format") != ARTIFACT_FORMAT:
        raise SchemaError(f"{path.name}: not an adapter artifact")
    config = TrainConfig.from_dict(payload["config"])
    return config, payload["adapter"]


def build_tuned(config: TrainConfig,
                adapter: Optional[dict[str, torch.Tensor]] = None) -> ByteDecoder:
    """Base + adapters exactly as the training config describes them."""
    model = build_base(config.base)
    quantized = config.precision == "int4_weights_bf16_compute"
    torch.manual_seed(config.seed)
    attach_adapters(model, config.rank, config.alpha, quantized)
    if adapter is not None:
        missing = [k for k in adapter
                   if k not in dict(model.named_parameters())]
        if missing:
            raise SchemaError(f"adapter keys do not fit the model: {missing[:3]}")
        model.load_state_dict(adapter, strict=False)
    model.eval()
    return model
