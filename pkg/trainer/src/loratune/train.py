"""Adapter fine-tuning over a chat-format training file.

Sequences are byte tokens: BOS, prompt (system + user), SEP, completion
(assistant), EOS. Loss covers only the completion and the EOS; when a
sequence exceeds max_seq_len the prompt is trimmed from the left so the
supervised part survives intact.
"""

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import torch
from torch import nn

from .config import TrainConfig
from .data import TrainingExample, load_training_file
from .errors import ResourceError
from .model import (
    EOS,
    PAD,
    SEP,
    ByteDecoder,
    attach_adapters,
    build_base,
    encode_prompt,
    encode_text,
    save_adapter,
)


@dataclass(frozen=True)
class TrainResult:
    adapter_path: Path
    log_path: Path
    steps: int
    epoch_mean_losses: list[float]


def _encode_example(example: TrainingExample, max_len: int) -> tuple[list[int], int]:
    """Token sequence plus the index where supervised tokens begin."""
    tail = [SEP] + encode_text(example.assistant) + [EOS]
    head = encode_prompt(example.system, example.user)[:-1]  # SEP joins tail
    budget = max_len - len(tail)
    if budget > 0:
        tokens = head[-budget:] + tail
    else:
        tokens = tail[-max_len:]
    sep_at = tokens.index(SEP) if SEP in tokens else 0
    return tokens, sep_at + 1


def _batch_tensors(encoded: Sequence[tuple[list[int], int]],
                   ) -> tuple[torch.Tensor, torch.Tensor]:
    width = max(len(tokens) for tokens, _ in encoded)
    batch = torch.full((len(encoded), width), PAD, dtype=torch.long)
    mask = torch.zeros((len(encoded), width), dtype=torch.bool)
    for row, (tokens, loss_from) in enumerate(encoded):
        batch[row, :len(tokens)] = torch.tensor(tokens, dtype=torch.long)
        mask[row, loss_from:len(tokens)] = True
    return batch, mask


def _step_loss(model: ByteDecoder, batch: torch.Tensor,
               mask: torch.Tensor) -> torch.Tensor:
    inputs, targets = batch[:, :-1], batch[:, 1:]
    logits = model(inputs)
    raw = nn.functional.cross_entropy(
        logits.reshape(-1, logits.shape[-1]).float(),
        targets.reshape(-1), reduction="none",
    )
    weights = mask[:, 1:].reshape(-1).float()
    return (raw * weights).sum() / weights.sum().clamp(min=1.0)


def finetune(training_path: Path, config: TrainConfig,
             out_dir: Path) -> TrainResult:
    """Train the adapters, save the artifact, and log per-step loss."""
    examples = load_training_file(Path(training_path))
    torch.set_num_threads(1)  # keeps runs bit-identical across CPU configs
    model = build_base(config.base)
    torch.manual_seed(config.seed)
    attach_adapters(model, config.rank, config.alpha,
                    quantized=config.precision == "int4_weights_bf16_compute")
    model.train()

    trainable = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.AdamW(trainable, lr=config.lr)
    encoded = [_encode_example(e, config.max_seq_len) for e in examples]
    order = list(range(len(encoded)))
    shuffler = random.Random(config.seed)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "train_log.jsonl"
    epoch_means: list[float] = []
    step = 0
    try:
        with open(log_path, "w", encoding="utf-8") as log:
            for epoch in range(1, config.epochs + 1):
                shuffler.shuffle(order)
                losses = []
                for start in range(0, len(order), config.batch_size):
                    chunk = [encoded[i] for i in
                             order[start:start + config.batch_size]]
                    batch, mask = _batch_tensors(chunk)
                    with torch.autocast("cpu", dtype=torch.bfloat16):
                        loss = _step_loss(model, batch, mask)
                    optimizer.zero_grad()
                    loss.backward()
                    step += 1
                    if config.warmup_steps and step <= config.warmup_steps:
                        scale = step / config.warmup_steps
                        for group in optimizer.param_groups:
                            group["lr"] = config.lr * scale
                    optimizer.step()
                    losses.append(loss.item())
                    log.write(json.dumps({
                        "step": step, "epoch": epoch,
                        "loss": round(losses[-1], 6),
                        "lr": optimizer.param_groups[0]["lr"],
                        "sequences": len(chunk),
                    }) + "\n")
                epoch_means.append(sum(losses) / len(losses))
                log.write(json.dumps({
                    "epoch": epoch, "mean_loss": round(epoch_means[-1], 6),
                }) + "\n")
    except (MemoryError, torch.cuda.OutOfMemoryError) as exc:
        raise ResourceError(
            f"ran out of memory ({exc}); try the qlora preset "
            "(int4 weights, bf16 compute)") from None

    adapter_path = out_dir / "adapter.pt"
    save_adapter(adapter_path, model, config)
    return TrainResult(adapter_path=adapter_path, log_path=log_path,
                       steps=step, epoch_mean_losses=epoch_means)
