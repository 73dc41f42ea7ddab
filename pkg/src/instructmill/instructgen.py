"""Instruction pool construction, online against chat backends or offline.

Each dataset gets a pool of short instructions (two backends, ten each
by default). Pools are plain JSON files and the rest of the pipeline
only ever reads pools from disk, so hand-authored files work exactly
like generated ones and nothing downstream needs network access.
"""

from __future__ import annotations

import json
import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import requests

from .errors import (
    AuthError,
    ConfigError,
    EmptyGeneration,
    InvariantViolation,
    MalformedResponse,
    MissingTaskDefinition,
    ParseError,
    TransportError,
)

LABEL_SUFFIX = (
    "Return only the label without any explanation, justification or "
    "additional text."
)
SUMMARY_SUFFIX = (
    "Return only the summary without any explanation, justification or "
    "additional text."
)

GENERATION_SYSTEM_TEXT = (
    "You are an expert LLM developer with expertise in writing "
    "instructions to instruction-tune LLMs for users' tasks."
)

DEFAULT_SYSTEM_ROLE = (
    "You are a social media expert providing accurate analysis and insights."
)

INSTRUCT_LANGUAGES = ("english", "native")

POOL_FILE_VERSION = 1

_USER_TEMPLATE = (
    "We are creating an {instruct_lang} instruction-following dataset "
    "for a/an {lang} dataset called: {dataset} covering the task of "
    "{task}. The user defined the task as follows: {task_definition}."
    "{labels_clause} Write {n} very diverse and concise {instruct_lang} "
    "instructions. Return the instructions as strings in a list format "
    "as follows []."
)

_LABELS_CLAUSE = " For that task, the labels include: {labels}."


def _display_language(language: str) -> str:
    if language.startswith("other:"):
        language = language.split(":", 1)[1]
    return language.capitalize()


@dataclass(frozen=True)
class GenerationPrompt:
    system_text: str
    user_text: str
    instruct_language: str


def build_generation_prompt(
    meta, instruct_language: str, n: int = 10
) -> GenerationPrompt:
    """Fill the instruction-writing prompt from dataset metadata.

    instruct_language "english" asks for English instructions; "native"
    asks for instructions in the dataset's own language. Summarization
    datasets have no label space, so the labels sentence is dropped.
    """
    if instruct_language not in INSTRUCT_LANGUAGES:
        raise ConfigError(
            f"instruct_language must be one of {INSTRUCT_LANGUAGES}, "
            f"got {instruct_language!r}"
        )
    if n < 1:
        raise ConfigError(f"instruction count must be positive, got {n}")
    if not meta.task_definition or not meta.task_definition.strip():
        raise MissingTaskDefinition(meta.id)
    lang_name = _display_language(meta.language)
    instruct_name = "English" if instruct_language == "english" else lang_name
    if meta.task_kind == "summarization":
        labels_clause = ""
    else:
        labels_clause = _LABELS_CLAUSE.format(labels=", ".join(meta.label_space))
    user_text = _USER_TEMPLATE.format(
        instruct_lang=instruct_name,
        lang=lang_name,
        dataset=meta.name,
        task=meta.task,
        task_definition=meta.task_definition.strip().rstrip("."),
        labels_clause=labels_clause,
        n=n,
    )
    return GenerationPrompt(
        system_text=GENERATION_SYSTEM_TEXT,
        user_text=user_text,
        instruct_language=instruct_language,
    )


@dataclass(frozen=True)
class BackendConfig:
    name: str
    endpoint: str
    model: str
    auth_env: str
    timeout: float = 30.0
    max_retries: int = 3
    backoff_base: float = 0.5


@dataclass
class CallReport:
    backend: str
    retries: int = 0


def _extract_content(body: dict) -> str:
    try:
        return body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        pass
    content = body.get("content")
    if isinstance(content, str):
        return content
    raise MalformedResponse("response body has no message content")


def _parse_instruction_list(content: str, n: int) -> list[str]:
    items: Optional[list] = None
    start = content.find("[")
    end = content.rfind("]")
    if start != -1 and end > start:
        try:
            candidate = json.loads(content[start : end + 1])
        except json.JSONDecodeError:
            candidate = None
        if isinstance(candidate, list) and all(
            isinstance(x, str) for x in candidate
        ):
            items = candidate
    if items is None:
        # Fallback: one instruction per line, tolerating fences and
        # list markers.
        lines = []
        for line in content.splitlines():
            line = line.strip()
            if not line or line.startswith("```"):
                continue
            line = line.lstrip("-*").strip()
            if line and line[0].isdigit():
                head, sep, rest = line.partition(".")
                if sep and head.isdigit():
                    line = rest.strip()
            if line:
                lines.append(line)
        items = lines
    trimmed = [item.strip() for item in items if item.strip()]
    if len(trimmed) != n:
        raise MalformedResponse(
            f"expected {n} instructions, parsed {len(trimmed)}"
        )
    return trimmed


def request_instructions(
    backend: BackendConfig,
    prompt: GenerationPrompt,
    n: int = 10,
    *,
    sleep=time.sleep,
) -> tuple[list[str], CallReport]:
    """POST the prompt to a chat endpoint and parse n instructions back.

    Transient transport failures and malformed bodies are retried with
    exponential backoff up to backend.max_retries; auth failures are
    not, since retrying a bad credential cannot help.
    """
    token = os.environ.get(backend.auth_env, "")
    if not token:
        raise AuthError(
            f"{backend.name}: credential env var {backend.auth_env} is unset"
        )
    payload = {
        "model": backend.model,
        "messages": [
            {"role": "system", "content": prompt.system_text},
            {"role": "user", "content": prompt.user_text},
        ],
    }
    headers = {"Authorization": f"Bearer {token}"}
    report = CallReport(backend=backend.name)
    last_error: Exception = TransportError(f"{backend.name}: no attempt made")
    for attempt in range(backend.max_retries + 1):
        if attempt:
            report.retries = attempt
            sleep(backend.backoff_base * (2 ** (attempt - 1)))
        try:
            response = requests.post(
                backend.endpoint,
                json=payload,
                headers=headers,
                timeout=backend.timeout,
            )
        except requests.RequestException as exc:
            last_error = TransportError(f"{backend.name}: {exc}")
            continue
        if response.status_code in (401, 403):
            raise AuthError(
                f"{backend.name}: rejected credential "
                f"(HTTP {response.status_code})"
            )
        if response.status_code == 429 or response.status_code >= 500:
            last_error = TransportError(
                f"{backend.name}: HTTP {response.status_code}"
            )
            continue
        if response.status_code != 200:
            raise TransportError(
                f"{backend.name}: HTTP {response.status_code}"
            )
        try:
            body = response.json()
        except ValueError:
            last_error = MalformedResponse(
                f"{backend.name}: response body is not JSON"
            )
            continue
        try:
            content = _extract_content(body)
            return _parse_instruction_list(content, n), report
        except MalformedResponse as exc:
            last_error = MalformedResponse(f"{backend.name}: {exc}")
            continue
    raise last_error


def _normalized(text: str) -> str:
    return " ".join(text.split())


def _suffix_for(task_kind: str) -> str:
    return SUMMARY_SUFFIX if task_kind == "summarization" else LABEL_SUFFIX


def ensure_suffix(text: str, suffix: str) -> str:
    stripped = text.strip()
    if stripped.endswith(suffix):
        return stripped
    return f"{stripped} {suffix}"


@dataclass(frozen=True)
class InstructionPool:
    dataset_id: str
    instruct_language: str
    system_role: str
    suffix: str
    instructions: tuple[str, ...]
    backend_tags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.instruct_language not in INSTRUCT_LANGUAGES:
            raise InvariantViolation(
                f"{self.dataset_id}: bad instruct_language "
                f"{self.instruct_language!r}"
            )
        if len(self.instructions) != len(self.backend_tags):
            raise InvariantViolation(
                f"{self.dataset_id}: {len(self.instructions)} instructions "
                f"but {len(self.backend_tags)} backend tags"
            )
        if not self.instructions:
            raise InvariantViolation(f"{self.dataset_id}: empty pool")
        seen = set()
        for inst in self.instructions:
            if not inst.endswith(self.suffix):
                raise InvariantViolation(
                    f"{self.dataset_id}: instruction missing suffix: "
                    f"{inst[:60]!r}"
                )
            key = _normalized(inst)
            if key in seen:
                raise InvariantViolation(
                    f"{self.dataset_id}: duplicate instruction: {inst[:60]!r}"
                )
            seen.add(key)

    def __len__(self) -> int:
        return len(self.instructions)


def build_pool(
    meta,
    gens: Sequence[tuple[str, Sequence[str]]],
    system_role: str = DEFAULT_SYSTEM_ROLE,
    instruct_language: str = "english",
    target_size: int = 20,
) -> InstructionPool:
    """Merge per-backend instruction lists into one ordered pool.

    Backend order is preserved (first backend's instructions first), so
    index 0 is stable for evaluation. Duplicates after whitespace
    normalization keep the first occurrence; a pool below target_size
    gets a warning but is still usable.
    """
    if not gens:
        raise EmptyGeneration(f"{meta.id}: no generator output")
    suffix = _suffix_for(meta.task_kind)
    instructions: list[str] = []
    tags: list[str] = []
    seen: set[str] = set()
    dropped = 0
    for tag, items in gens:
        if not items:
            raise EmptyGeneration(f"{meta.id}: backend {tag} returned nothing")
        for item in items:
            if not item or not item.strip():
                raise EmptyGeneration(
                    f"{meta.id}: backend {tag} returned a blank instruction"
                )
            text = ensure_suffix(item, suffix)
            key = _normalized(text)
            if key in seen:
                dropped += 1
                continue
            seen.add(key)
            instructions.append(text)
            tags.append(tag)
    if dropped:
        warnings.warn(
            f"{meta.id}: dropped {dropped} duplicate instruction(s); "
            f"pool is short ({len(instructions)} of {target_size})"
        )
    elif len(instructions) < target_size:
        warnings.warn(
            f"{meta.id}: pool is short ({len(instructions)} of {target_size})"
        )
    return InstructionPool(
        dataset_id=meta.id,
        instruct_language=instruct_language,
        system_role=system_role,
        suffix=suffix,
        instructions=tuple(instructions),
        backend_tags=tuple(tags),
    )


def save_pool(pool: InstructionPool, path: Path) -> None:
    payload = {
        "version": POOL_FILE_VERSION,
        "dataset_id": pool.dataset_id,
        "instruct_language": pool.instruct_language,
        "system_role": pool.system_role,
        "suffix": pool.suffix,
        "instructions": list(pool.instructions),
        "backend_tags": list(pool.backend_tags),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def load_pool(path: Path) -> InstructionPool:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: pool file must hold a JSON object")
    for key in ("dataset_id", "instruct_language", "system_role", "instructions"):
        if key not in data:
            raise ParseError(f"{path}: missing field {key!r}")
    raw = data["instructions"]
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise ParseError(f"{path}: instructions must be a list of strings")
    suffix = data.get("suffix", LABEL_SUFFIX)
    fixed = []
    patched = 0
    for inst in raw:
        done = ensure_suffix(inst, suffix)
        if done != inst:
            patched += 1
        fixed.append(done)
    if patched:
        warnings.warn(f"{path}: appended missing suffix to {patched} instruction(s)")
    tags = data.get("backend_tags") or ["unknown"] * len(fixed)
    if not isinstance(tags, list) or not all(isinstance(x, str) for x in tags):
        raise ParseError(f"{path}: backend_tags must be a list of strings")
    return InstructionPool(
        dataset_id=str(data["dataset_id"]),
        instruct_language=str(data["instruct_language"]),
        system_role=str(data["system_role"]),
        suffix=suffix,
        instructions=tuple(fixed),
        backend_tags=tuple(tags),
    )


def generate_pool(
    meta,
    backends: Sequence[BackendConfig],
    instruct_language: str = "english",
    n: int = 10,
    system_role: str = DEFAULT_SYSTEM_ROLE,
) -> tuple[InstructionPool, list[CallReport]]:
    """Query every backend for n instructions and build the merged pool."""
    prompt = build_generation_prompt(meta, instruct_language, n)
    gens = []
    reports = []
    for backend in backends:
        items, report = request_instructions(backend, prompt, n)
        gens.append((backend.name, items))
        reports.append(report)
    pool = build_pool(
        meta,
        gens,
        system_role=system_role,
        instruct_language=instruct_language,
        target_size=n * max(1, len(backends)),
    )
    return pool, reports
