"""Pipeline driver: one subcommand per stage, resumable via stage manifests.

Every stage writes its outputs under one directory of the shared output
tree together with a manifest recording input checksums, parameters,
seed, and output checksums. Re-running a stage whose manifest still
matches is a no-op, so a pipeline can be resumed or partially re-run
after editing one input without recomputing everything else.
"""

from __future__ import annotations

import functools
import hashlib
import json
import sys
from pathlib import Path
from typing import Optional

import click
import yaml

from . import __version__
from . import assemble as assemble_mod
from . import instructgen
from . import preprocess as preprocess_mod
from . import report as report_mod
from .corpus import ingest_dataset, load_manifest, read_records, write_records
from .errors import (
    ConfigError,
    DataError,
    MillError,
    MissingFile,
    MissingPrerequisite,
    ParseError,
)
from .metrics import evaluate_dataset
from .postprocess import score_input


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _hash_inputs(paths: list[Path]) -> dict[str, str]:
    out: dict[str, str] = {}
    for path in paths:
        if not path.exists():
            raise MissingPrerequisite(f"missing input: {path}")
        out[str(path)] = _sha256(path)
    return out


class _Stage:
    """Tracks one stage's inputs/params and decides whether to skip."""

    def __init__(self, out_dir: Path, name: str, seed: int,
                 inputs: dict[str, str], params: dict):
        self.dir = Path(out_dir) / name
        self.name = name
        self.seed = seed
        self.inputs = inputs
        self.params = params

    @property
    def manifest_path(self) -> Path:
        return self.dir / "manifest.json"

    def up_to_date(self) -> bool:
        if not self.manifest_path.exists():
            return False
        try:
            stored = json.loads(self.manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return False
        if stored.get("inputs") != self.inputs:
            return False
        if stored.get("params") != self.params:
            return False
        if stored.get("seed") != self.seed:
            return False
        for path_text, checksum in (stored.get("outputs") or {}).items():
            path = Path(path_text)
            if not path.exists() or _sha256(path) != checksum:
                return False
        return True

    def finish(self, outputs: list[Path]) -> None:
        manifest = {
            "stage": self.name,
            "version": __version__,
            "seed": self.seed,
            "inputs": self.inputs,
            "params": self.params,
            "outputs": {str(p): _sha256(p) for p in outputs},
        }
        self.manifest_path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def _skip_or_start(stage: _Stage, force: bool) -> bool:
    """True when the stage can be skipped; otherwise prepares its dir."""
    if not force and stage.up_to_date():
        click.echo(f"{stage.name}: up to date, skipping (--force to rerun)")
        return True
    stage.dir.mkdir(parents=True, exist_ok=True)
    return False


def _fail_on_mill_error(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MillError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)

    return wrapper


def _resolve_seed(seed: Optional[int], manifest_seed: int) -> int:
    return manifest_seed if seed is None else seed


def _label_map_for(meta):
    if meta.label_map_path is not None:
        return preprocess_mod.load_label_map(meta.label_map_path, meta.label_space)
    return preprocess_mod.LabelMap.identity(meta.label_space)


_manifest_option = click.option(
    "--manifest", "-m", "manifest_path", required=True,
    type=click.Path(path_type=Path), help="Corpus manifest (YAML).",
)
_out_option = click.option(
    "--out-dir", "-o", default="out", show_default=True,
    type=click.Path(path_type=Path), help="Pipeline output tree.",
)
_seed_option = click.option(
    "--seed", type=int, default=None,
    help="Global seed; defaults to the manifest's seed.",
)
_force_option = click.option(
    "--force", is_flag=True, help="Re-run even when outputs are current.",
)


@click.group()
@click.version_option(__version__, prog_name="instructmill")
def main():
    """Build instruction-tuning corpora and score model outputs."""


@main.command("ingest")
@_manifest_option
@_out_option
@_force_option
@_fail_on_mill_error
def ingest_cmd(manifest_path: Path, out_dir: Path, force: bool):
    """Read raw source files into validated record files."""
    corpus = load_manifest(manifest_path)
    input_paths = [manifest_path]
    for meta in corpus.datasets:
        input_paths.extend(source.path for source in meta.files.values())
        if meta.label_map_path is not None:
            input_paths.append(Path(meta.label_map_path))
    stage = _Stage(out_dir, "ingest", corpus.seed, _hash_inputs(input_paths),
                   params={"datasets": [m.id for m in corpus.datasets]})
    if _skip_or_start(stage, force):
        return
    outputs = []
    reports = {}
    for meta in corpus.datasets:
        extra = None
        if meta.label_map_path is not None:
            extra = _label_map_for(meta).surface_forms
        records, rep = ingest_dataset(meta, extra)
        target = stage.dir / f"{meta.id}.jsonl"
        write_records(records, target)
        outputs.append(target)
        reports[meta.id] = rep.__dict__
        click.echo(
            f"ingest {meta.id}: {rep.records_out} records "
            f"({rep.dropped_empty} empty, {rep.dropped_conflicting} conflicting)"
        )
    report_path = stage.dir / "report.json"
    report_path.write_text(
        json.dumps(reports, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    outputs.append(report_path)
    stage.finish(outputs)


@main.command("preprocess")
@_manifest_option
@_out_option
@_seed_option
@_force_option
@click.option("--ratios", default="0.7,0.2,0.1", show_default=True,
              help="train,test,dev fractions for unsplit datasets.")
@click.option("--dev-fraction", default=0.3, show_default=True, type=float,
              help="Share of train carved into dev for presplit datasets.")
@click.option("--min-letters", default=3, show_default=True, type=int,
              help="Minimum letters a record's text must contain.")
@_fail_on_mill_error
def preprocess_cmd(manifest_path: Path, out_dir: Path, seed: Optional[int],
                   force: bool, ratios: str, dev_fraction: float,
                   min_letters: int):
    """Deduplicate, unify labels, filter short texts, and split."""
    corpus = load_manifest(manifest_path)
    seed = _resolve_seed(seed, corpus.seed)
    split_ratios = preprocess_mod.SplitRatios.parse(ratios)
    ingest_dir = Path(out_dir) / "ingest"
    input_paths = [manifest_path]
    input_paths += [ingest_dir / f"{meta.id}.jsonl" for meta in corpus.datasets]
    stage = _Stage(out_dir, "preprocess", seed, _hash_inputs(input_paths),
                   params={"ratios": ratios, "dev_fraction": dev_fraction,
                           "min_letters": min_letters})
    if _skip_or_start(stage, force):
        return
    outputs = []
    reports = {}
    for meta in corpus.datasets:
        records = read_records(ingest_dir / f"{meta.id}.jsonl")
        count_in = len(records)
        records, dedup_removed = preprocess_mod.deduplicate(records)
        records = preprocess_mod.unify_labels(records, _label_map_for(meta))
        records, short_removed = preprocess_mod.filter_short(records, min_letters)
        if meta.presplit:
            train = [r for r in records if r.split == "train"]
            test = [r for r in records if r.split == "test"]
            train, dev = preprocess_mod.derive_dev_from_train(
                train, dev_fraction, seed
            )
        else:
            train, test, dev = preprocess_mod.stratified_split(
                records, split_ratios, seed
            )
        splits = {"train": train, "test": test, "dev": dev}
        for split_name, split_records in splits.items():
            target = stage.dir / f"{meta.id}.{split_name}.jsonl"
            write_records(split_records, target)
            outputs.append(target)
        rep = preprocess_mod.PreprocessReport(
            dataset_id=meta.id,
            records_in=count_in,
            dedup_removed=dedup_removed,
            short_removed=short_removed,
            split_counts={k: len(v) for k, v in splits.items()},
            label_histograms={
                k: preprocess_mod.label_histogram(v) for k, v in splits.items()
            },
        )
        reports[meta.id] = rep.to_dict()
        click.echo(
            f"preprocess {meta.id}: train={len(train)} test={len(test)} "
            f"dev={len(dev)} (dedup -{dedup_removed}, short -{short_removed})"
        )
    report_path = stage.dir / "report.json"
    report_path.write_text(
        json.dumps(reports, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    outputs.append(report_path)
    stage.finish(outputs)


def _load_backends(path: Path) -> list[instructgen.BackendConfig]:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}: expected a list of backend mappings")
    allowed = {"name", "endpoint", "model", "auth_env", "timeout",
               "max_retries", "backoff_base"}
    backends = []
    for entry in raw:
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: backend entries must be mappings")
        unknown = set(entry) - allowed
        if unknown:
            raise ConfigError(f"{path}: unknown backend keys {sorted(unknown)}")
        try:
            backends.append(instructgen.BackendConfig(**entry))
        except TypeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return backends


@main.command("geninstruct")
@_manifest_option
@_out_option
@_force_option
@click.option("--pools-dir", type=click.Path(path_type=Path), default=None,
              help="Directory of pre-authored pool files (offline mode).")
@click.option("--backends", "backends_path", type=click.Path(path_type=Path),
              default=None, help="Backend config YAML (online mode).")
@click.option("--instruct-language", default="english", show_default=True,
              type=click.Choice(instructgen.INSTRUCT_LANGUAGES))
@click.option("--n", default=10, show_default=True, type=int,
              help="Instructions requested per backend.")
@_fail_on_mill_error
def geninstruct_cmd(manifest_path: Path, out_dir: Path, force: bool,
                    pools_dir: Optional[Path], backends_path: Optional[Path],
                    instruct_language: str, n: int):
    """Produce one instruction pool per dataset (offline or online)."""
    corpus = load_manifest(manifest_path)
    if pools_dir is None and backends_path is None:
        raise MissingPrerequisite(
            "geninstruct needs --pools-dir (offline) or --backends (online)"
        )
    if pools_dir is not None and backends_path is not None:
        raise ConfigError("--pools-dir and --backends are mutually exclusive")
    input_paths = [manifest_path]
    if pools_dir is not None:
        pool_files = {m.id: Path(pools_dir) / f"{m.id}.json" for m in corpus.datasets}
        input_paths.extend(pool_files.values())
    else:
        input_paths.append(backends_path)
    stage = _Stage(out_dir, "pools", corpus.seed, _hash_inputs(input_paths),
                   params={"mode": "offline" if pools_dir else "online",
                           "instruct_language": instruct_language, "n": n})
    if _skip_or_start(stage, force):
        return
    outputs = []
    backends = None if backends_path is None else _load_backends(backends_path)
    for meta in corpus.datasets:
        if pools_dir is not None:
            pool = instructgen.load_pool(pool_files[meta.id])
            if pool.dataset_id != meta.id:
                raise DataError(
                    f"{pool_files[meta.id]}: pool is for {pool.dataset_id}, "
                    f"expected {meta.id}"
                )
        else:
            pool, reports = instructgen.generate_pool(
                meta, backends, instruct_language, n
            )
            for rep in reports:
                if rep.retries:
                    click.echo(
                        f"geninstruct {meta.id}: {rep.backend} needed "
                        f"{rep.retries} retries"
                    )
        target = stage.dir / f"{meta.id}.json"
        instructgen.save_pool(pool, target)
        outputs.append(target)
        click.echo(f"geninstruct {meta.id}: pool of {len(pool)}")
    stage.finish(outputs)


@main.command("assemble")
@_manifest_option
@_out_option
@_seed_option
@_force_option
@click.option("--cap", default=assemble_mod.DEFAULT_CAP, show_default=True,
              type=int, help="Per-dataset training-record cap.")
@_fail_on_mill_error
def assemble_cmd(manifest_path: Path, out_dir: Path, seed: Optional[int],
                 force: bool, cap: int):
    """Cap train splits, attach instructions, build eval prompts."""
    corpus = load_manifest(manifest_path)
    seed = _resolve_seed(seed, corpus.seed)
    pre_dir = Path(out_dir) / "preprocess"
    pools_dir = Path(out_dir) / "pools"
    input_paths = [manifest_path]
    for meta in corpus.datasets:
        input_paths.append(pre_dir / f"{meta.id}.train.jsonl")
        input_paths.append(pre_dir / f"{meta.id}.test.jsonl")
        input_paths.append(pools_dir / f"{meta.id}.json")
    stage = _Stage(out_dir, "assemble", seed, _hash_inputs(input_paths),
                   params={"cap": cap})
    if _skip_or_start(stage, force):
        return
    outputs = []
    counts = {}
    for meta in corpus.datasets:
        train = read_records(pre_dir / f"{meta.id}.train.jsonl")
        test = read_records(pre_dir / f"{meta.id}.test.jsonl")
        pool = instructgen.load_pool(pools_dir / f"{meta.id}.json")
        sampled = assemble_mod.sample_training(train, cap, seed)
        samples = assemble_mod.attach_instructions(sampled, pool, meta, seed)
        samples_path = stage.dir / f"{meta.id}.samples.jsonl"
        with samples_path.open("w", encoding="utf-8") as handle:
            for sample in samples:
                handle.write(json.dumps(sample.to_dict(), ensure_ascii=False) + "\n")
        outputs.append(samples_path)
        prompts = assemble_mod.build_eval_prompts(test, pool)
        prompts_path = stage.dir / f"{meta.id}.eval_prompts.jsonl"
        with prompts_path.open("w", encoding="utf-8") as handle:
            for prompt in prompts:
                handle.write(json.dumps(prompt.to_dict(), ensure_ascii=False) + "\n")
        outputs.append(prompts_path)
        counts[meta.id] = {"before_cap": len(train), "after_cap": len(sampled)}
        click.echo(
            f"assemble {meta.id}: {len(samples)} training samples "
            f"(cap {cap}), {len(prompts)} eval prompts"
        )
    counts_path = stage.dir / "counts.json"
    counts_path.write_text(
        json.dumps(counts, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    outputs.append(counts_path)
    stage.finish(outputs)


@main.command("export")
@_manifest_option
@_out_option
@_seed_option
@_force_option
@click.option("--strategy", default="alphabetical", show_default=True,
              type=click.Choice(assemble_mod.STRATEGIES))
@click.option("--language-dataset-blocks", is_flag=True,
              help="by_language variant: shuffle dataset blocks, not samples.")
@_fail_on_mill_error
def export_cmd(manifest_path: Path, out_dir: Path, seed: Optional[int],
               force: bool, strategy: str, language_dataset_blocks: bool):
    """Shuffle all assembled samples into one training file."""
    corpus = load_manifest(manifest_path)
    seed = _resolve_seed(seed, corpus.seed)
    assemble_dir = Path(out_dir) / "assemble"
    input_paths = [manifest_path, assemble_dir / "counts.json"]
    input_paths += [
        assemble_dir / f"{meta.id}.samples.jsonl" for meta in corpus.datasets
    ]
    stage = _Stage(out_dir, "export", seed, _hash_inputs(input_paths),
                   params={"strategy": strategy,
                           "language_dataset_blocks": language_dataset_blocks})
    if _skip_or_start(stage, force):
        return
    by_dataset = {
        meta.id: assemble_mod.read_training(
            assemble_dir / f"{meta.id}.samples.jsonl"
        )
        for meta in corpus.datasets
    }
    counts = json.loads((assemble_dir / "counts.json").read_text(encoding="utf-8"))
    precap = {k: v["before_cap"] for k, v in counts.items()}
    ordered = assemble_mod.shuffle(
        by_dataset, strategy, seed, language_dataset_blocks
    )
    training_path = stage.dir / f"training.{strategy}.jsonl"
    manifest_out = assemble_mod.export_training(
        ordered, training_path, strategy, seed, precap
    )
    manifest_json = stage.dir / f"export.{strategy}.json"
    manifest_json.write_text(
        json.dumps(manifest_out.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    click.echo(
        f"export: {manifest_out.total} samples ({strategy}), "
        f"checksum {manifest_out.checksum[:12]}"
    )
    stage.finish([training_path, manifest_json])


def _read_predictions(path: Path) -> tuple[dict, dict[str, list[tuple[str, str]]]]:
    """Predictions file: optional header object line, then one object
    with record_id and text per line, grouped here by dataset id."""
    header: dict = {}
    grouped: dict[str, list[tuple[str, str]]] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if lineno == 1 and "header" in obj and "record_id" not in obj:
                header = obj["header"]
                continue
            if "record_id" not in obj or "text" not in obj:
                raise ParseError(
                    f"{path}:{lineno}: prediction lines need record_id and text"
                )
            record_id = str(obj["record_id"])
            dataset_id = record_id.rsplit(":", 1)[0]
            grouped.setdefault(dataset_id, []).append((record_id, str(obj["text"])))
    return header, grouped


@main.command("eval")
@_manifest_option
@_out_option
@_force_option
@click.option("--predictions", "predictions_path", default=None,
              type=click.Path(path_type=Path),
              help="Model generations (JSONL of record_id + text).")
@_fail_on_mill_error
def eval_cmd(manifest_path: Path, out_dir: Path, force: bool,
             predictions_path: Optional[Path]):
    """Extract labels from predictions and score every covered dataset."""
    corpus = load_manifest(manifest_path)
    if predictions_path is None:
        raise MissingPrerequisite("eval needs --predictions")
    if not Path(predictions_path).exists():
        raise MissingFile(f"predictions file not found: {predictions_path}")
    pre_dir = Path(out_dir) / "preprocess"
    header, grouped = _read_predictions(predictions_path)
    known = {meta.id: meta for meta in corpus.datasets}
    unknown = sorted(set(grouped) - set(known))
    if unknown:
        raise DataError(f"predictions reference unknown datasets: {unknown}")
    input_paths = [manifest_path, predictions_path]
    input_paths += [pre_dir / f"{dataset_id}.test.jsonl" for dataset_id in sorted(grouped)]
    stage = _Stage(out_dir, "eval", corpus.seed, _hash_inputs(input_paths),
                   params={"header": header})
    if _skip_or_start(stage, force):
        return
    outputs = []
    results = {}
    for dataset_id in sorted(grouped):
        meta = known[dataset_id]
        gold = {
            record.record_id: record.target
            for record in read_records(pre_dir / f"{dataset_id}.test.jsonl")
        }
        pairs = []
        for record_id, text in grouped[dataset_id]:
            if record_id not in gold:
                raise DataError(
                    f"{record_id}: prediction has no test record"
                )
            pairs.append(
                score_input(text, gold[record_id], meta, record_id=record_id)
            )
        covered = {record_id for record_id, _ in grouped[dataset_id]}
        skipped = len(gold) - len(covered)
        if skipped:
            click.echo(
                f"eval {dataset_id}: {skipped} test records have no "
                f"prediction", err=True
            )
        pairs_path = stage.dir / f"{dataset_id}.pairs.jsonl"
        with pairs_path.open("w", encoding="utf-8") as handle:
            for pair in pairs:
                handle.write(json.dumps(pair.to_dict(), ensure_ascii=False) + "\n")
        outputs.append(pairs_path)
        outcome = evaluate_dataset(pairs, meta)
        results[dataset_id] = outcome.to_dict()
        click.echo(
            f"eval {dataset_id}: {outcome.metric}={outcome.score:.4f} "
            f"over {outcome.n_examples} ({outcome.n_unparseable} unparseable)"
        )
    outcomes_path = stage.dir / "outcomes.json"
    outcomes_path.write_text(
        json.dumps(results, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    outputs.append(outcomes_path)
    stage.finish(outputs)


def _table_from_outcomes(outcomes_path: Path, corpus) -> report_mod.ResultTable:
    results = json.loads(Path(outcomes_path).read_text(encoding="utf-8"))
    known = {meta.id: meta for meta in corpus.datasets}
    rows = []
    for dataset_id in sorted(results):
        if dataset_id not in known:
            raise DataError(f"outcomes reference unknown dataset {dataset_id}")
        meta = known[dataset_id]
        rows.append(
            report_mod.ResultRow(
                dataset=dataset_id,
                language=meta.language,
                task=meta.task,
                metric=str(meta.metric),
                scores={
                    "sota": meta.sota_score,
                    "model": float(results[dataset_id]["score"]),
                },
            )
        )
    return report_mod.ResultTable(columns=("sota", "model"), rows=tuple(rows))


def _auto_pair(columns: tuple[str, ...]) -> Optional[tuple[str, str]]:
    for a, b in (("model_english", "sota"), ("model", "sota")):
        if a in columns and b in columns:
            return a, b
    return None


@main.command("report")
@_out_option
@_force_option
@click.option("--table", "table_path", default=None,
              type=click.Path(path_type=Path),
              help="Score table CSV to report on.")
@click.option("--outcomes", "outcomes_path", default=None,
              type=click.Path(path_type=Path),
              help="Eval outcomes JSON (needs --manifest for metadata).")
@click.option("--manifest", "-m", "manifest_path", default=None,
              type=click.Path(path_type=Path), help="Corpus manifest (YAML).")
@click.option("--delta", "delta_cols", default=None,
              help="Columns A,B for a delta column (default: auto).")
@click.option("--improvement", "improvement_cols", default=None,
              help="Columns A,B for relative improvement (default: auto).")
@click.option("--policy", default="complete", show_default=True,
              type=click.Choice(("complete", "per_column")),
              help="How averages treat rows with missing cells.")
@click.option("--fmt", default="markdown", show_default=True,
              type=click.Choice(("markdown", "csv")))
@_fail_on_mill_error
def report_cmd(out_dir: Path, force: bool, table_path: Optional[Path],
               outcomes_path: Optional[Path], manifest_path: Optional[Path],
               delta_cols: Optional[str], improvement_cols: Optional[str],
               policy: str, fmt: str):
    """Render a score table with deltas and per-language averages."""
    if table_path is None and outcomes_path is None:
        raise MissingPrerequisite("report needs --table or --outcomes")
    if table_path is not None and outcomes_path is not None:
        raise ConfigError("--table and --outcomes are mutually exclusive")
    input_paths = []
    if table_path is not None:
        if not Path(table_path).exists():
            raise MissingFile(f"table not found: {table_path}")
        input_paths.append(table_path)
        table = report_mod.from_csv(table_path)
    else:
        if manifest_path is None:
            raise ConfigError("--outcomes requires --manifest for metadata")
        if not Path(outcomes_path).exists():
            raise MissingFile(f"outcomes not found: {outcomes_path}")
        corpus = load_manifest(manifest_path)
        input_paths += [manifest_path, outcomes_path]
        table = _table_from_outcomes(outcomes_path, corpus)
    pair = (
        tuple(delta_cols.split(",")) if delta_cols else _auto_pair(table.columns)
    )
    if pair is not None:
        if len(pair) != 2:
            raise ConfigError("--delta expects two comma-separated columns")
        table = report_mod.compute_delta(table, pair[0], pair[1])
    improvement_pair = (
        tuple(improvement_cols.split(","))
        if improvement_cols
        else _auto_pair(table.columns)
    )
    improvements = None
    if improvement_pair is not None:
        if len(improvement_pair) != 2:
            raise ConfigError("--improvement expects two comma-separated columns")
        improvements = {
            f"{improvement_pair[0]} vs {improvement_pair[1]}":
                report_mod.relative_improvement(table, *improvement_pair)
        }
    stage = _Stage(out_dir, "report", 0, _hash_inputs(input_paths),
                   params={"delta": list(pair) if pair else None,
                           "policy": policy, "fmt": fmt,
                           "improvement": (list(improvement_pair)
                                           if improvement_pair else None)})
    if _skip_or_start(stage, force):
        return
    averages = report_mod.aggregate_averages(table, "language", policy=policy)
    suffix = "md" if fmt == "markdown" else "csv"
    target = stage.dir / f"report.{suffix}"
    text = report_mod.render_report(
        table, averages, stats=None, improvements=improvements,
        fmt=fmt, path=target,
    )
    click.echo(text, nl=False)
    stage.finish([target])


@main.command("stats")
@click.option("--table", "table_path", required=True,
              type=click.Path(path_type=Path),
              help="Score table CSV with the two columns to compare.")
@click.option("--cols", required=True,
              help="Two comma-separated score columns, e.g. task,alpha.")
@click.option("--method", default="auto", show_default=True,
              type=click.Choice(("auto", "exact", "normal_approx")))
@_fail_on_mill_error
def stats_cmd(table_path: Path, cols: str, method: str):
    """Paired signed-rank comparison of two score columns."""
    if not Path(table_path).exists():
        raise MissingFile(f"table not found: {table_path}")
    names = [c.strip() for c in cols.split(",") if c.strip()]
    if len(names) != 2:
        raise ConfigError("--cols expects exactly two column names")
    table = report_mod.from_csv(table_path)
    a: list[float] = []
    b: list[float] = []
    for row in table.rows:
        first = row.get(names[0])
        second = row.get(names[1])
        if first is None or second is None:
            continue
        a.append(first)
        b.append(second)
    result = report_mod.wilcoxon_signed_rank(a, b, method=method)
    payload = result.to_dict()
    payload["columns"] = names
    click.echo(json.dumps(payload, sort_keys=True))


if __name__ == "__main__":
    main()
