"""Console entry points: loratune train / loratune infer."""

import sys
from pathlib import Path

import click

from .config import PRESETS, DecodeConfig, preset
from .errors import LoratuneError
from .infer import run_inference
from .train import finetune


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except LoratuneError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)


@click.group(cls=_Group)
@click.version_option(package_name="loratune")
def main():
    """Low-rank adapter fine-tuning and batch inference."""


@main.command("train")
@click.option("-t", "--training", "training_path", required=True,
              type=click.Path(path_type=Path), help="Chat-format training file.")
@click.option("-o", "--out", "out_dir", required=True,
              type=click.Path(path_type=Path), help="Output directory.")
@click.option("--preset", "preset_name", default="tiny", show_default=True,
              type=click.Choice(sorted(PRESETS)))
@click.option("--base", default=None, help="Base model identifier override.")
@click.option("--rank", type=int, default=None)
@click.option("--alpha", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--precision", default=None,
              type=click.Choice(["bf16", "int4_weights_bf16_compute"]))
@click.option("--max-seq-len", type=int, default=None)
@click.option("--warmup-steps", type=int, default=None)
@click.option("--seed", type=int, default=None)
def train_cmd(training_path, out_dir, preset_name, **overrides):
    """Fine-tune adapters on a training file."""
    config = preset(preset_name, **overrides)
    result = finetune(training_path, config, out_dir)
    for epoch, mean in enumerate(result.epoch_mean_losses, start=1):
        click.echo(f"epoch {epoch}: mean loss {mean:.4f}")
    click.echo(f"adapter: {result.adapter_path} ({result.steps} steps)")


@main.command("infer")
@click.option("-p", "--prompts", "prompts_path", required=True,
              type=click.Path(path_type=Path), help="Prompts file.")
@click.option("-o", "--out", "out_path", required=True,
              type=click.Path(path_type=Path), help="Predictions file to write.")
@click.option("--adapter", "adapter_path", default=None,
              type=click.Path(path_type=Path), help="Adapter artifact.")
@click.option("--base", default=None, help="Base model, when no adapter.")
@click.option("--temperature", type=float, default=0.0, show_default=True)
@click.option("--top-p", type=float, default=0.95, show_default=True)
@click.option("--max-new-tokens", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Sampling seed; unused at temperature 0.")
def infer_cmd(prompts_path, out_path, adapter_path, base, temperature, top_p,
              max_new_tokens, seed):
    """Decode every prompt into a predictions file."""
    decode = DecodeConfig(temperature=temperature, top_p=top_p,
                          max_new_tokens=max_new_tokens)
    result = run_inference(prompts_path, out_path, decode,
                           adapter_path=adapter_path, base=base, seed=seed)
    click.echo(f"{result.prompts} predictions from {result.model_label} "
               f"-> {result.out_path}")
