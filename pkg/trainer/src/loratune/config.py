"""Training and decoding configuration with named presets.

`max_seq_len` and `warmup_steps` are conventional defaults, not pinned
by any external setup; override them freely.
"""

from dataclasses import dataclass, fields
from typing import Optional

from .errors import ConfigError

OPTIMIZERS = ("adamw",)
PRECISIONS = ("bf16", "int4_weights_bf16_compute")


@dataclass(frozen=True)
class TrainConfig:
    base: str = "tiny-decoder"
    rank: int = 16
    alpha: Optional[int] = None  # defaults to rank
    lr: float = 2e-4
    optimizer: str = "adamw"
    batch_size: int = 16
    epochs: int = 2
    precision: str = "bf16"
    max_seq_len: int = 512
    warmup_steps: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, "alpha", self.rank)
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.precision not in PRECISIONS:
            raise ConfigError(f"unknown precision {self.precision!r}")
        for name in ("rank", "alpha", "batch_size", "epochs", "max_seq_len"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.warmup_steps < 0:
            raise ConfigError(f"warmup_steps must be >= 0, got {self.warmup_steps}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


# tiny exists purely for CPU smoke runs on fixture-sized files; the other
# two are the real adapter recipes (full-rank bf16 and the quantized pilot).
PRESETS: dict[str, TrainConfig] = {
    "tiny": TrainConfig(base="tiny-decoder", rank=8, lr=3e-3, batch_size=16,
                        epochs=2, precision="bf16", max_seq_len=256),
    "lora-full": TrainConfig(base="tiny-decoder", rank=128, lr=2e-4,
                             batch_size=16, epochs=2, precision="bf16"),
    "qlora": TrainConfig(base="tiny-decoder", rank=16, lr=2e-4, batch_size=16,
                         epochs=2, precision="int4_weights_bf16_compute"),
}


def preset(name: str, **overrides) -> TrainConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    base = PRESETS[name].to_dict()
    base.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig.from_dict(base)


@dataclass(frozen=True)
class DecodeConfig:
    temperature: float = 0.0
    top_p: float = 0.95
    max_new_tokens: int = 32

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if not 0 < self.top_p <= 1:
            raise ConfigError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.max_new_tokens <= 0:
            raise ConfigError("max_new_tokens must be positive")
