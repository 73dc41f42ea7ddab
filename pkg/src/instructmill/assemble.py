"""Training-corpus assembly: cap, attach, shuffle, export.

Takes preprocessed records plus an instruction pool and produces the
ordered chat-format training file, or first-instruction evaluation
prompts for a test split. All randomness is keyed per (seed, dataset,
stage) so adding one dataset never perturbs another's draws.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from . import rng
from .corpus import Record
from .errors import (
    ConfigError,
    DataError,
    EmptyPool,
    IoError,
    UnknownStrategy,
)
from .instructgen import InstructionPool
from .preprocess import apportion, group_by_stratum

STRATEGIES = ("alphabetical", "by_language", "by_task", "full_random")

DEFAULT_CAP = 20000

# Instruction first, then the example text, joined by one newline.
_SEPARATOR = "\n"


def _serialize_target(target) -> str:
    if isinstance(target, str):
        return target
    return ", ".join(target)


@dataclass(frozen=True)
class InstructionSample:
    dataset_id: str
    record_id: str
    language: str
    task: str
    system_text: str
    user_text: str
    assistant_text: str

    @property
    def ordinal(self) -> int:
        return int(self.record_id.rsplit(":", 1)[1])

    def to_dict(self) -> dict:
        return {
            "messages": [
                {"role": "system", "content": self.system_text},
                {"role": "user", "content": self.user_text},
                {"role": "assistant", "content": self.assistant_text},
            ],
            "dataset_id": self.dataset_id,
            "record_id": self.record_id,
            "language": self.language,
            "task": self.task,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InstructionSample":
        roles = {m["role"]: m["content"] for m in data["messages"]}
        return cls(
            dataset_id=str(data["dataset_id"]),
            record_id=str(data["record_id"]),
            language=str(data["language"]),
            task=str(data["task"]),
            system_text=roles["system"],
            user_text=roles["user"],
            assistant_text=roles["assistant"],
        )


def sample_training(
    records: Sequence[Record],
    cap: int = DEFAULT_CAP,
    seed: int = 0,
) -> list[Record]:
    """Downsample one dataset's train split to at most cap records.

    Strata keep their proportions via largest-remainder apportionment of
    the cap; membership within a stratum is a seeded draw. Output keeps
    input order. Under the cap this is the identity.
    """
    if cap < 0:
        raise ConfigError(f"cap must be >= 0, got {cap}")
    if not records:
        return []
    dataset_ids = {r.dataset_id for r in records}
    if len(dataset_ids) > 1:
        raise DataError(
            f"sample_training expects one dataset, got {sorted(dataset_ids)}"
        )
    if len(records) <= cap:
        return list(records)
    if cap == 0:
        return []
    strata = group_by_stratum(records)
    weights = [len(indices) for indices in strata.values()]
    counts = apportion(cap, weights)
    keep: set[int] = set()
    dataset_id = records[0].dataset_id
    for (key, indices), count in zip(strata.items(), counts):
        gen = rng.stream(seed, dataset_id, "cap", key)
        chosen = gen.shuffled(indices)[:count]
        keep.update(chosen)
    return [record for index, record in enumerate(records) if index in keep]


def attach_instructions(
    records: Sequence[Record],
    pool: InstructionPool,
    meta,
    seed: int = 0,
) -> list[InstructionSample]:
    """Pair every record with one uniformly drawn pool instruction.

    The draw is keyed by the record's ordinal, so a record keeps its
    instruction even if neighbours are filtered away.
    """
    if not pool.instructions:
        raise EmptyPool(pool.dataset_id)
    samples: list[InstructionSample] = []
    for record in records:
        if record.dataset_id != pool.dataset_id:
            raise DataError(
                f"{record.record_id}: pool belongs to {pool.dataset_id}"
            )
        gen = rng.stream(seed, record.dataset_id, "attach", record.ordinal)
        instruction = pool.instructions[gen.randrange(len(pool.instructions))]
        samples.append(
            InstructionSample(
                dataset_id=record.dataset_id,
                record_id=record.record_id,
                language=meta.language,
                task=meta.task,
                system_text=pool.system_role,
                user_text=f"{instruction}{_SEPARATOR}{record.text}",
                assistant_text=_serialize_target(record.target),
            )
        )
    return samples


def _merged(samples_by_dataset: Mapping[str, Sequence[InstructionSample]]) -> list[InstructionSample]:
    merged: list[InstructionSample] = []
    for dataset_id in sorted(samples_by_dataset):
        merged.extend(samples_by_dataset[dataset_id])
    return merged


def shuffle(
    samples_by_dataset: Mapping[str, Sequence[InstructionSample]],
    strategy: str,
    seed: int = 0,
    language_dataset_blocks: bool = False,
) -> list[InstructionSample]:
    """Order the merged corpus by one of the four strategies.

    alphabetical: language ascending, dataset id ascending, ordinal; no
    randomness. by_language: language blocks in alphabetical order with
    samples shuffled inside each block (set language_dataset_blocks to
    shuffle whole dataset blocks instead, keeping within-dataset order).
    by_task: task-name blocks ascending, samples shuffled inside each.
    full_random: one seeded shuffle over everything.
    """
    if strategy not in STRATEGIES:
        raise UnknownStrategy(
            f"strategy must be one of {STRATEGIES}, got {strategy!r}"
        )
    merged = _merged(samples_by_dataset)
    if strategy == "alphabetical":
        return sorted(
            merged, key=lambda s: (s.language, s.dataset_id, s.ordinal)
        )
    if strategy == "full_random":
        gen = rng.stream(seed, "shuffle", "full_random")
        return gen.shuffled(merged)
    if strategy == "by_language":
        ordered: list[InstructionSample] = []
        languages = sorted({s.language for s in merged})
        for language in languages:
            block = [s for s in merged if s.language == language]
            if language_dataset_blocks:
                ids = sorted({s.dataset_id for s in block})
                gen = rng.stream(seed, "shuffle", "by_language_blocks", language)
                for dataset_id in gen.shuffled(ids):
                    ordered.extend(
                        s for s in block if s.dataset_id == dataset_id
                    )
            else:
                gen = rng.stream(seed, "shuffle", "by_language", language)
                ordered.extend(gen.shuffled(block))
        return ordered
    ordered = []
    for task in sorted({s.task for s in merged}):
        block = [s for s in merged if s.task == task]
        gen = rng.stream(seed, "shuffle", "by_task", task)
        ordered.extend(gen.shuffled(block))
    return ordered


@dataclass
class ExportManifest:
    path: str
    strategy: str
    seed: int
    total: int
    checksum: str
    per_dataset: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def export_training(
    samples: Sequence[InstructionSample],
    path: Path,
    strategy: str = "alphabetical",
    seed: int = 0,
    precap_counts: Optional[Mapping[str, int]] = None,
) -> ExportManifest:
    """Write samples as chat-format JSON lines and describe the result.

    precap_counts, when given, records per-dataset sizes before the
    sampling cap so the manifest shows what the cap removed.
    """
    path = Path(path)
    after: dict[str, int] = {}
    for sample in samples:
        after[sample.dataset_id] = after.get(sample.dataset_id, 0) + 1
    per_dataset = {
        dataset_id: {
            "before_cap": (
                precap_counts.get(dataset_id, count)
                if precap_counts is not None
                else count
            ),
            "after_cap": count,
        }
        for dataset_id, count in sorted(after.items())
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        digest = hashlib.sha256()
        with path.open("w", encoding="utf-8") as handle:
            for sample in samples:
                line = json.dumps(sample.to_dict(), ensure_ascii=False)
                handle.write(line + "\n")
                digest.update(line.encode("utf-8"))
                digest.update(b"\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return ExportManifest(
        path=str(path),
        strategy=strategy,
        seed=seed,
        total=len(samples),
        checksum=digest.hexdigest(),
        per_dataset=per_dataset,
    )


def read_training(path: Path) -> list[InstructionSample]:
    """Inverse of export_training, for verification and downstream use."""
    samples: list[InstructionSample] = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                samples.append(InstructionSample.from_dict(json.loads(line)))
    return samples


@dataclass(frozen=True)
class EvalPrompt:
    record_id: str
    dataset_id: str
    system_text: str
    user_text: str
    gold: object

    def to_dict(self) -> dict:
        gold = list(self.gold) if isinstance(self.gold, tuple) else self.gold
        return {
            "record_id": self.record_id,
            "dataset_id": self.dataset_id,
            "system_text": self.system_text,
            "user_text": self.user_text,
            "gold": gold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalPrompt":
        gold = data["gold"]
        if isinstance(gold, list):
            gold = tuple(gold)
        return cls(
            record_id=str(data["record_id"]),
            dataset_id=str(data["dataset_id"]),
            system_text=str(data["system_text"]),
            user_text=str(data["user_text"]),
            gold=gold,
        )


def build_eval_prompts(
    test_records: Sequence[Record], pool: InstructionPool
) -> list[EvalPrompt]:
    """Pair test records with the pool's first instruction, no randomness."""
    if not pool.instructions:
        raise EmptyPool(pool.dataset_id)
    instruction = pool.instructions[0]
    prompts: list[EvalPrompt] = []
    for record in test_records:
        if record.dataset_id != pool.dataset_id:
            raise DataError(
                f"{record.record_id}: pool belongs to {pool.dataset_id}"
            )
        prompts.append(
            EvalPrompt(
                record_id=record.record_id,
                dataset_id=record.dataset_id,
                system_text=pool.system_role,
                user_text=f"{instruction}{_SEPARATOR}{record.text}",
                gold=record.target,
            )
        )
    return prompts
