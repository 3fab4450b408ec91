"""Gateway behavior: deterministic mock routing and HTTP client semantics."""

import json
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

import domaincraft.gateway as gateway_module
from domaincraft.gateway import (
    DEFAULT_PARAMS,
    RETRYABLE_STATUS,
    GatewayError,
    GenerationParams,
    HttpChatGateway,
    MockChatGateway,
)

TOKEN_ENV = "DOMAINCRAFT_TEST_TOKEN"


class TestGenerationParams:
    def test_documented_defaults(self):
        assert DEFAULT_PARAMS.temperature == 0.7
        assert DEFAULT_PARAMS.max_tokens == 1200

    def test_validation(self):
        with pytest.raises(ValueError):
            GenerationParams(temperature=-0.1)
        with pytest.raises(ValueError):
            GenerationParams(max_tokens=0)


class TestMockGateway:
    def test_pure_function_of_prompt_and_seed(self):
        prompt = "Which response better satisfies the instruction (demo)?"
        assert MockChatGateway(seed=1).complete(prompt) == MockChatGateway(
            seed=1
        ).complete(prompt)

    def test_passage_route_structure(self):
        prompt = (
            "#### Structured Guideline for Passage Generation\n"
            "instructions...\n\n#### Input:\n"
            "- Task One: What is the answer to the first problem?\n\n"
            "- Task Two: What is the answer to the second problem?"
        )
        reply = MockChatGateway(seed=0).complete(prompt)
        assert reply.startswith("<Passage>")
        assert reply.rstrip().endswith("</Passage>")
        body = reply[len("<Passage>") : reply.rfind("</Passage>")]
        paragraphs = [p for p in body.split("\n\n") if p.strip()]
        assert len(paragraphs) == 3  # one per task plus the closing paragraph
        assert paragraphs[-1].startswith("In conclusion, the key points across the tasks")

    def test_judge_route_longer_wins_tie_first(self):
        template = (
            "Instruction:\ni\n\nResponse A:\n{a}\n\nResponse B:\n{b}\n\n"
            "Which response better satisfies the instruction?"
        )
        mock = MockChatGateway()
        assert mock.complete(template.format(a="long answer here", b="short")) == "A"
        assert mock.complete(template.format(a="short", b="long answer here")) == "B"
        assert mock.complete(template.format(a="same", b="same")) == "A"

    def test_rewrite_route_shared_word_rule(self):
        template = (
            "Original query:\n{q}\n\nRewrite:\n{r}\n\n"
            "Does this rewrite preserve the search intent of the original "
            "query - answer Good or Bad."
        )
        mock = MockChatGateway()
        assert mock.complete(template.format(q="paris flights", r="flights to paris")) == "Good"
        assert mock.complete(template.format(q="paris flights", r="rome hotels")) == "Bad"

    def test_rating_route_in_range(self):
        reply = MockChatGateway(seed=2).complete(
            "Rate the educational value of this text. Reply with a single number."
        )
        assert 0.0 <= float(reply) <= 5.0

    def test_unmatched_prompt_gets_ok(self):
        assert MockChatGateway().complete("hello") == "OK"

    def test_transcript_written(self, tmp_path):
        path = tmp_path / "transcript.jsonl"
        MockChatGateway(transcript_path=path).complete("hello")
        lines = [json.loads(l) for l in path.read_text().splitlines()]
        assert [l["kind"] for l in lines] == ["request", "response"]
        assert all("ts" in l for l in lines)


# ---------------------------------------------------------------------------
# Scripted HTTP server
# ---------------------------------------------------------------------------

def _chat_body(content: str) -> bytes:
    return json.dumps(
        {"choices": [{"message": {"role": "assistant", "content": content}}]}
    ).encode()


class _ScriptedHandler(BaseHTTPRequestHandler):
    script: list  # (status, body_bytes) consumed one per request
    seen: list

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else None
        type(self).seen.append(
            {"auth": self.headers.get("Authorization"), "body": body}
        )
        status, payload = (
            type(self).script.pop(0) if type(self).script else (200, _chat_body("ok"))
        )
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def http_server():
    handler = type(
        "Handler", (_ScriptedHandler,), {"script": [], "seen": []}
    )
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions", handler
    server.shutdown()
    thread.join(timeout=5)


@pytest.fixture()
def no_sleep(monkeypatch):
    delays = []
    monkeypatch.setattr(gateway_module.time, "sleep", delays.append)
    return delays


@pytest.fixture()
def token(monkeypatch):
    monkeypatch.setenv(TOKEN_ENV, "sekrit-value")


class TestHttpGateway:
    def test_missing_token_env_names_variable(self, monkeypatch):
        monkeypatch.delenv(TOKEN_ENV, raising=False)
        with pytest.raises(GatewayError, match=TOKEN_ENV):
            HttpChatGateway("http://example.invalid", "m", token_env=TOKEN_ENV)

    def test_success_roundtrip_and_wire_format(self, http_server, token):
        url, handler = http_server
        handler.script.append((200, _chat_body("the reply")))
        gateway = HttpChatGateway(url, "test-model", token_env=TOKEN_ENV)
        reply = gateway.complete("the prompt", GenerationParams(0.3, 64))
        assert reply == "the reply"
        (request,) = handler.seen
        assert request["auth"] == "Bearer sekrit-value"
        assert request["body"] == {
            "model": "test-model",
            "messages": [{"role": "user", "content": "the prompt"}],
            "temperature": 0.3,
            "max_tokens": 64,
        }

    @pytest.mark.parametrize("status", sorted(RETRYABLE_STATUS))
    def test_retryable_status_then_success(self, http_server, token, no_sleep, status):
        url, handler = http_server
        handler.script.extend([(status, b"{}"), (200, _chat_body("recovered"))])
        gateway = HttpChatGateway(url, "m", token_env=TOKEN_ENV, max_retries=3)
        assert gateway.complete("p") == "recovered"
        assert len(handler.seen) == 2
        assert len(no_sleep) == 1

    def test_exponential_backoff_with_cap(self, http_server, token, no_sleep):
        url, handler = http_server
        handler.script.extend([(503, b"{}")] * 4 + [(200, _chat_body("late"))])
        gateway = HttpChatGateway(
            url, "m", token_env=TOKEN_ENV,
            max_retries=4, backoff_base=0.5, backoff_cap=1.2,
        )
        assert gateway.complete("p") == "late"
        # base * 2^attempt capped: 0.5, 1.0, then pinned at the cap.
        assert no_sleep == [0.5, 1.0, 1.2, 1.2]

    def test_exhaustion_reports_attempts(self, http_server, token, no_sleep):
        url, handler = http_server
        handler.script.extend([(500, b"{}")] * 3)
        gateway = HttpChatGateway(url, "m", token_env=TOKEN_ENV, max_retries=2)
        with pytest.raises(GatewayError) as excinfo:
            gateway.complete("p")
        assert excinfo.value.attempts == 3
        assert excinfo.value.status == 500
        assert len(handler.seen) == 3

    def test_non_retryable_status_fails_immediately(self, http_server, token, no_sleep):
        url, handler = http_server
        handler.script.append((404, b"{}"))
        gateway = HttpChatGateway(url, "m", token_env=TOKEN_ENV, max_retries=3)
        with pytest.raises(GatewayError) as excinfo:
            gateway.complete("p")
        assert excinfo.value.status == 404
        assert excinfo.value.attempts == 1
        assert no_sleep == []
        assert len(handler.seen) == 1

    def test_malformed_body_fails_immediately(self, http_server, token, no_sleep):
        url, handler = http_server
        handler.script.append((200, b'{"unexpected": "shape"}'))
        gateway = HttpChatGateway(url, "m", token_env=TOKEN_ENV, max_retries=3)
        with pytest.raises(GatewayError, match="malformed"):
            gateway.complete("p")
        assert len(handler.seen) == 1

    def test_non_string_content_rejected(self, http_server, token):
        url, handler = http_server
        payload = json.dumps({"choices": [{"message": {"content": 42}}]}).encode()
        handler.script.append((200, payload))
        gateway = HttpChatGateway(url, "m", token_env=TOKEN_ENV)
        with pytest.raises(GatewayError, match="not a string"):
            gateway.complete("p")

    def test_connection_errors_retry_then_fail(self, token, no_sleep):
        # Bind-then-close yields a port with nothing listening.
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()
        gateway = HttpChatGateway(
            f"http://127.0.0.1:{port}/", "m", token_env=TOKEN_ENV,
            max_retries=1, timeout=0.5,
        )
        with pytest.raises(GatewayError, match="connection error"):
            gateway.complete("p")
        assert len(no_sleep) == 1

    def test_transcript_records_exchange_without_token(self, http_server, token, tmp_path):
        url, handler = http_server
        handler.script.append((200, _chat_body("logged")))
        transcript = tmp_path / "gateway.jsonl"
        gateway = HttpChatGateway(
            url, "m", token_env=TOKEN_ENV, transcript_path=transcript
        )
        gateway.complete("the prompt")
        raw = transcript.read_text()
        lines = [json.loads(l) for l in raw.splitlines()]
        assert [l["kind"] for l in lines] == ["request", "response"]
        assert lines[0]["prompt"] == "the prompt"
        assert lines[1]["text"] == "logged"
        # The bearer secret must never reach the log.
        assert "sekrit-value" not in raw

    def test_concurrent_transcript_lines_stay_whole(self, http_server, token, tmp_path):
        url, handler = http_server
        transcript = tmp_path / "gateway.jsonl"
        gateway = HttpChatGateway(
            url, "m", token_env=TOKEN_ENV, transcript_path=transcript
        )
        threads = [
            threading.Thread(target=gateway.complete, args=(f"prompt {i}",))
            for i in range(8)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        lines = transcript.read_text().splitlines()
        assert len(lines) == 16  # 8 requests + 8 responses
        for line in lines:
            json.loads(line)  # every line is intact JSON
