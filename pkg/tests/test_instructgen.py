import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from instructmill.errors import (
    AuthError,
    ConfigError,
    EmptyGeneration,
    InvariantViolation,
    MalformedResponse,
    MissingTaskDefinition,
    ParseError,
    TransportError,
)
from instructmill.instructgen import (
    DEFAULT_SYSTEM_ROLE,
    LABEL_SUFFIX,
    SUMMARY_SUFFIX,
    BackendConfig,
    InstructionPool,
    build_generation_prompt,
    build_pool,
    ensure_suffix,
    load_pool,
    request_instructions,
    save_pool,
)


class _Meta:
    def __init__(self, task_kind="single_label", language="english",
                 task_definition="Classify the sentiment of the text."):
        self.id = "d1"
        self.name = "D1"
        self.language = language
        self.task = "Sentiment"
        self.task_definition = task_definition
        self.task_kind = task_kind
        self.label_space = ("positive", "negative")


# ------------------------------------------------------------ prompt build

def test_prompt_mentions_dataset_task_and_labels():
    prompt = build_generation_prompt(_Meta(), "english", n=10)
    text = prompt.user_text
    assert "D1" in text
    assert "Sentiment" in text
    assert "positive, negative" in text
    assert "Write 10 very diverse and concise English instructions" in text
    assert "a/an English dataset" in text
    assert ".." not in text  # task_definition period must not double up


def test_prompt_native_language_fills_both_slots():
    prompt = build_generation_prompt(_Meta(language="arabic"), "native")
    assert "Arabic instructions" in prompt.user_text
    assert "a/an Arabic dataset" in prompt.user_text


def test_prompt_summarization_drops_labels_sentence():
    prompt = build_generation_prompt(_Meta(task_kind="summarization"), "english")
    assert "labels include" not in prompt.user_text


def test_prompt_validates_inputs():
    with pytest.raises(ConfigError):
        build_generation_prompt(_Meta(), "french")
    with pytest.raises(ConfigError):
        build_generation_prompt(_Meta(), "english", n=0)
    with pytest.raises(MissingTaskDefinition):
        build_generation_prompt(_Meta(task_definition="   "), "english")


# -------------------------------------------------------------- http layer

class _ScriptedHandler(BaseHTTPRequestHandler):
    script = []
    requests_seen = 0

    def do_POST(self):
        type(self).requests_seen += 1
        self.rfile.read(int(self.headers.get("Content-Length", 0)))
        status, body = self.script[min(type(self).requests_seen - 1,
                                       len(self.script) - 1)]
        payload = body if isinstance(body, bytes) else json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def scripted_server():
    _ScriptedHandler.script = []
    _ScriptedHandler.requests_seen = 0
    server = HTTPServer(("127.0.0.1", 0), _ScriptedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    thread.join(timeout=5)


def _backend(server, retries=3):
    return BackendConfig(
        name="scripted",
        endpoint=f"http://127.0.0.1:{server.server_address[1]}/v1/chat",
        model="test-model",
        auth_env="SCRIPTED_TOKEN",
        timeout=5.0,
        max_retries=retries,
        backoff_base=0.0,
    )


def _chat_body(content):
    return {"choices": [{"message": {"content": content}}]}


TEN = [f"Instruction number {i} for the task." for i in range(10)]


def _script(entries):
    _ScriptedHandler.script = entries
    _ScriptedHandler.requests_seen = 0


def test_request_happy_path(scripted_server, monkeypatch):
    monkeypatch.setenv("SCRIPTED_TOKEN", "tok")
    _script([(200, _chat_body(json.dumps(TEN)))])
    prompt = build_generation_prompt(_Meta(), "english")
    items, report = request_instructions(_backend(scripted_server), prompt,
                                         sleep=lambda s: None)
    assert items == TEN
    assert report.retries == 0


def test_request_parses_numbered_lines(scripted_server, monkeypatch):
    monkeypatch.setenv("SCRIPTED_TOKEN", "tok")
    content = "\n".join(f"{i + 1}. {line}" for i, line in enumerate(TEN))
    _script([(200, _chat_body(content))])
    prompt = build_generation_prompt(_Meta(), "english")
    items, _ = request_instructions(_backend(scripted_server), prompt,
                                    sleep=lambda s: None)
    assert items == TEN


def test_request_retries_transient_500(scripted_server, monkeypatch):
    monkeypatch.setenv("SCRIPTED_TOKEN", "tok")
    _script([(500, {"error": "boom"}), (200, _chat_body(json.dumps(TEN)))])
    prompt = build_generation_prompt(_Meta(), "english")
    items, report = request_instructions(_backend(scripted_server), prompt,
                                         sleep=lambda s: None)
    assert items == TEN
    assert report.retries == 1


def test_request_auth_error_no_retry(scripted_server, monkeypatch):
    monkeypatch.setenv("SCRIPTED_TOKEN", "tok")
    _script([(401, {"error": "denied"})])
    prompt = build_generation_prompt(_Meta(), "english")
    with pytest.raises(AuthError):
        request_instructions(_backend(scripted_server), prompt,
                             sleep=lambda s: None)
    assert _ScriptedHandler.requests_seen == 1


def test_request_unset_credential(scripted_server, monkeypatch):
    monkeypatch.delenv("SCRIPTED_TOKEN", raising=False)
    prompt = build_generation_prompt(_Meta(), "english")
    with pytest.raises(AuthError):
        request_instructions(_backend(scripted_server), prompt)
    assert _ScriptedHandler.requests_seen == 0


def test_request_wrong_cardinality_exhausts_retries(scripted_server, monkeypatch):
    monkeypatch.setenv("SCRIPTED_TOKEN", "tok")
    _script([(200, _chat_body(json.dumps(TEN[:8])))])
    prompt = build_generation_prompt(_Meta(), "english")
    with pytest.raises(MalformedResponse):
        request_instructions(_backend(scripted_server, retries=2), prompt,
                             sleep=lambda s: None)
    assert _ScriptedHandler.requests_seen == 3


def test_request_persistent_failure_raises_transport(scripted_server, monkeypatch):
    monkeypatch.setenv("SCRIPTED_TOKEN", "tok")
    _script([(503, {"error": "down"})])
    prompt = build_generation_prompt(_Meta(), "english")
    with pytest.raises(TransportError):
        request_instructions(_backend(scripted_server, retries=1), prompt,
                             sleep=lambda s: None)
    assert _ScriptedHandler.requests_seen == 2


# -------------------------------------------------------------------- pools

def _gens(prefix_a="A", prefix_b="B", n=10):
    a = [f"{prefix_a} phrasing {i} of the task." for i in range(n)]
    b = [f"{prefix_b} phrasing {i} of the task." for i in range(n)]
    return [("backend-a", a), ("backend-b", b)]


def test_build_pool_merges_and_suffixes():
    pool = build_pool(_Meta(), _gens())
    assert len(pool) == 20
    assert pool.suffix == LABEL_SUFFIX
    assert all(inst.endswith(LABEL_SUFFIX) for inst in pool.instructions)
    assert pool.backend_tags[:10] == ("backend-a",) * 10
    assert pool.system_role == DEFAULT_SYSTEM_ROLE


def test_build_pool_first_backend_first():
    pool = build_pool(_Meta(), _gens())
    assert pool.instructions[0].startswith("A phrasing 0")


def test_build_pool_summarization_suffix():
    pool = build_pool(_Meta(task_kind="summarization"), _gens())
    assert pool.suffix == SUMMARY_SUFFIX


def test_build_pool_drops_duplicates_with_warning():
    gens = _gens()
    gens[1][1][0] = gens[0][1][0]  # backend-b repeats a backend-a phrasing
    with pytest.warns(UserWarning, match="duplicate"):
        pool = build_pool(_Meta(), gens)
    assert len(pool) == 19


def test_build_pool_rejects_empty_output():
    with pytest.raises(EmptyGeneration):
        build_pool(_Meta(), [])
    with pytest.raises(EmptyGeneration):
        build_pool(_Meta(), [("backend-a", [])])
    with pytest.raises(EmptyGeneration):
        build_pool(_Meta(), [("backend-a", ["ok instruction", "  "])])


def test_ensure_suffix_idempotent():
    once = ensure_suffix("Do the thing.", LABEL_SUFFIX)
    assert once.endswith(LABEL_SUFFIX)
    assert ensure_suffix(once, LABEL_SUFFIX) == once


def test_pool_invariants():
    with pytest.raises(InvariantViolation):
        InstructionPool("d", "english", "role", LABEL_SUFFIX, (), ())
    with pytest.raises(InvariantViolation):
        InstructionPool("d", "klingon", "role", LABEL_SUFFIX,
                        (f"x {LABEL_SUFFIX}",), ("t",))
    with pytest.raises(InvariantViolation):
        InstructionPool("d", "english", "role", LABEL_SUFFIX,
                        (f"x {LABEL_SUFFIX}",), ("t", "u"))
    with pytest.raises(InvariantViolation):
        InstructionPool("d", "english", "role", LABEL_SUFFIX,
                        ("x without the suffix",), ("t",))
    with pytest.raises(InvariantViolation):
        InstructionPool("d", "english", "role", LABEL_SUFFIX,
                        (f"x {LABEL_SUFFIX}", f"x  {LABEL_SUFFIX}"), ("t", "u"))


def test_pool_save_load_roundtrip(tmp_path):
    pool = build_pool(_Meta(), _gens())
    path = tmp_path / "pool.json"
    save_pool(pool, path)
    assert load_pool(path) == pool


def test_load_pool_patches_missing_suffix(tmp_path):
    pool = build_pool(_Meta(), _gens())
    path = tmp_path / "pool.json"
    save_pool(pool, path)
    data = json.loads(path.read_text(encoding="utf-8"))
    data["instructions"][3] = "A raw phrasing without the suffix"
    path.write_text(json.dumps(data), encoding="utf-8")
    with pytest.warns(UserWarning, match="suffix"):
        patched = load_pool(path)
    assert patched.instructions[3].endswith(LABEL_SUFFIX)


def test_load_pool_rejects_bad_structure(tmp_path):
    path = tmp_path / "pool.json"
    path.write_text("[]", encoding="utf-8")
    with pytest.raises(ParseError):
        load_pool(path)
    path.write_text(json.dumps({"dataset_id": "d"}), encoding="utf-8")
    with pytest.raises(ParseError):
        load_pool(path)
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ParseError):
        load_pool(path)


def test_shipped_pools_load_and_are_full(corpus_manifest):
    from conftest import CORPUS

    for meta in corpus_manifest.datasets:
        pool = load_pool(CORPUS / "pools" / f"{meta.id}.json")
        assert pool.dataset_id == meta.id
        assert len(pool) == 20
        assert len(set(pool.backend_tags)) == 2
