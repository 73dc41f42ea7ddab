"""Readers and writers for the three line-delimited JSON file formats.

Training file: one object per line with a three-message chat
("system", "user", "assistant") plus record metadata. Prompts file: one
object per line with record_id, system_text, user_text. Predictions
file: a header object line, then one (record_id, text) object per
prompt, in prompt order. The formats are owned by the pipeline that
produces the first two; this package only agrees to them.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import IoError, SchemaError

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class TrainingExample:
    record_id: str
    system: str
    user: str
    assistant: str


@dataclass(frozen=True)
class Prompt:
    record_id: str
    system: str
    user: str


def _object_lines(path: Path) -> Iterable[tuple[int, dict]]:
    if not path.exists():
        raise IoError(f"file not found: {path}")
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path.name}:{lineno}: not JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise SchemaError(f"{path.name}:{lineno}: expected an object")
            yield lineno, obj


def _field(obj: dict, name: str, where: str) -> str:
    value = obj.get(name)
    if not isinstance(value, str):
        raise SchemaError(f"{where}: {name} missing or not a string")
    return value


def load_training_file(path: Path) -> list[TrainingExample]:
    """Parse and validate a chat-format training file."""
    examples = []
    for lineno, obj in _object_lines(path):
        where = f"{path.name}:{lineno}"
        messages = obj.get("messages")
        if not isinstance(messages, list) or len(messages) != len(ROLES):
            raise SchemaError(f"{where}: messages must be a list of {len(ROLES)}")
        contents = []
        for expected, message in zip(ROLES, messages):
            if not isinstance(message, dict) or message.get("role") != expected:
                raise SchemaError(f"{where}: expected role {expected!r}")
            contents.append(_field(message, "content", where))
        examples.append(TrainingExample(
            record_id=_field(obj, "record_id", where),
            system=contents[0], user=contents[1], assistant=contents[2],
        ))
    if not examples:
        raise SchemaError(f"{path.name}: no training examples")
    return examples


def load_prompts_file(path: Path) -> list[Prompt]:
    prompts = []
    for lineno, obj in _object_lines(path):
        where = f"{path.name}:{lineno}"
        prompts.append(Prompt(
            record_id=_field(obj, "record_id", where),
            system=_field(obj, "system_text", where),
            user=_field(obj, "user_text", where),
        ))
    return prompts


def write_predictions(path: Path, header: dict,
                      rows: Sequence[tuple[str, str]]) -> None:
    """Header line first, then one object per prompt in input order."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps({"header": header}, ensure_ascii=False) + "\n")
        for record_id, text in rows:
            line = json.dumps({"record_id": record_id, "text": text},
                              ensure_ascii=False)
            handle.write(line + "\n")
