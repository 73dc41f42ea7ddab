from .config import PRESETS, DecodeConfig, TrainConfig, preset
from .infer import InferResult, run_inference
from .train import TrainResult, finetune

__all__ = [
    "PRESETS",
    "DecodeConfig",
    "TrainConfig",
    "preset",
    "InferResult",
    "run_inference",
    "TrainResult",
    "finetune",
]
