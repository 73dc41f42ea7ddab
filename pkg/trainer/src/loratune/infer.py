"""Bulk greedy/sampled decoding over a prompts file.

Output order always matches prompt order; temperature 0 means pure
argmax, anything above samples from the nucleus kept by top_p.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import torch

from .config import DecodeConfig, TrainConfig
from .data import load_prompts_file, write_predictions
from .errors import ConfigError
from .model import (
    EOS,
    ByteDecoder,
    build_base,
    build_tuned,
    decode_tokens,
    encode_prompt,
    load_adapter,
)


@dataclass(frozen=True)
class InferResult:
    out_path: Path
    prompts: int
    model_label: str


def _pick_token(logits: torch.Tensor, decode: DecodeConfig,
                generator: torch.Generator) -> int:
    if decode.temperature == 0:
        return int(torch.argmax(logits).item())
    probs = torch.softmax(logits / decode.temperature, dim=-1)
    ranked = torch.argsort(probs, descending=True)
    kept = torch.cumsum(probs[ranked], dim=0) < decode.top_p
    # the +1 pulls in the token that crosses top_p, so the pool is the
    # smallest prefix with mass >= top_p and never empty
    pool = ranked[: int(kept.sum().item()) + 1]
    weights = probs[pool] / probs[pool].sum()
    choice = torch.multinomial(weights, 1, generator=generator)
    return int(pool[choice].item())


def _generate(model: ByteDecoder, system: str, user: str,
              decode: DecodeConfig, generator: torch.Generator) -> str:
    context_budget = model.spec.max_seq - decode.max_new_tokens
    tokens = encode_prompt(system, user)[-max(context_budget, 2):]
    produced: list[int] = []
    with torch.no_grad():
        for _ in range(decode.max_new_tokens):
            window = tokens[-model.spec.max_seq:]
            logits = model(torch.tensor([window], dtype=torch.long))[0, -1]
            token = _pick_token(logits, decode, generator)
            if token == EOS:
                break
            produced.append(token)
            tokens.append(token)
    return decode_tokens(produced)


def run_inference(prompts_path: Path, out_path: Path,
                  decode: DecodeConfig,
                  adapter_path: Optional[Path] = None,
                  base: Optional[str] = None,
                  seed: int = 0) -> InferResult:
    """Decode every prompt and write the predictions file."""
    if adapter_path is None and base is None:
        raise ConfigError("need an adapter artifact or a base model name")
    if adapter_path is not None:
        config, state = load_adapter(Path(adapter_path))
        if base is not None and base != config.base:
            raise ConfigError(
                f"adapter was trained on {config.base!r}, not {base!r}")
        model = build_tuned(config, state)
        label = f"{config.base}+{Path(adapter_path).stem}"
    else:
        model = build_base(base)
        model.eval()
        label = base

    torch.set_num_threads(1)  # bit-identical decoding across CPU configs
    prompts = load_prompts_file(Path(prompts_path))
    generator = torch.Generator().manual_seed(seed)
    rows = [(p.record_id, _generate(model, p.system, p.user, decode, generator))
            for p in prompts]
    header = {
        "model": label,
        "temperature": decode.temperature,
        "top_p": decode.top_p,
        "max_new_tokens": decode.max_new_tokens,
    }
    write_predictions(Path(out_path), header, rows)
    return InferResult(out_path=Path(out_path), prompts=len(rows),
                       model_label=label)
