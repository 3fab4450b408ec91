"""Chat-model gateway.

``HttpChatGateway`` talks to an OpenAI-style chat-completions endpoint with
bounded exponential-backoff retries on transient failures. The bearer token
is read from an environment variable whose NAME is configuration; the token
value never appears in config files or logs.

``MockChatGateway`` is a network-free stand-in whose replies are a pure
function of (prompt text, seed). It recognizes the prompt families used by
this package (passage generation, pairwise judging, rewrite grading,
educational-value rating) and produces deterministic, contract-compliant
replies, which makes end-to-end pipeline tests hermetic.

Both gateways append every exchange to an optional JSONL transcript for
audit and replay.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol

import requests

from .features import fnv1a_32

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


class GatewayError(Exception):
    """The gateway could not produce a completion."""

    def __init__(self, message: str, attempts: int = 1, status: int | None = None):
        super().__init__(message)
        self.attempts = attempts
        self.status = status


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    max_tokens: int = 1200

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


DEFAULT_PARAMS = GenerationParams()


class ModelGateway(Protocol):
    def complete(self, prompt: str, params: GenerationParams = DEFAULT_PARAMS) -> str: ...


class _Transcript:
    """Append-only JSONL exchange log, safe for concurrent writers."""

    def __init__(self, path: str | Path | None) -> None:
        self.path = Path(path) if path else None
        self._lock = threading.Lock()

    def append(self, kind: str, **payload) -> None:
        if self.path is None:
            return
        record = {"ts": datetime.now(timezone.utc).isoformat(), "kind": kind}
        record.update(payload)
        line = json.dumps(record, ensure_ascii=False, sort_keys=True)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(line + "\n")


class HttpChatGateway:
    """OpenAI-style chat-completions client.

    Retries connection errors, HTTP 429 and 5xx with exponential backoff
    (base * 2^attempt seconds, capped); other HTTP errors and malformed
    response bodies fail immediately.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        token_env: str = "CHAT_GATEWAY_TOKEN",
        max_retries: int = 3,
        backoff_base: float = 0.5,
        backoff_cap: float = 8.0,
        timeout: float = 60.0,
        transcript_path: str | Path | None = None,
        session: requests.Session | None = None,
    ) -> None:
        token = os.environ.get(token_env)
        if not token:
            raise GatewayError(
                f"gateway token environment variable {token_env!r} is not set"
            )
        self.endpoint = endpoint
        self.model = model
        self._token = token
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.timeout = timeout
        self.transcript = _Transcript(transcript_path)
        self.session = session or requests.Session()

    def _backoff(self, attempt: int) -> float:
        return min(self.backoff_cap, self.backoff_base * (2.0 ** attempt))

    def complete(self, prompt: str, params: GenerationParams = DEFAULT_PARAMS) -> str:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        self.transcript.append("request", endpoint=self.endpoint, model=self.model,
                               prompt=prompt, temperature=params.temperature,
                               max_tokens=params.max_tokens)
        attempts = self.max_retries + 1
        last_error = "no attempt made"
        last_status: int | None = None
        for attempt in range(attempts):
            try:
                response = self.session.post(
                    self.endpoint,
                    json=body,
                    headers={"Authorization": f"Bearer {self._token}"},
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error, last_status = f"connection error: {exc}", None
            else:
                last_status = response.status_code
                if response.status_code == 200:
                    text = self._extract(response)
                    self.transcript.append("response", status=200, text=text,
                                           attempt=attempt + 1)
                    return text
                last_error = f"HTTP {response.status_code}"
                if response.status_code not in RETRYABLE_STATUS:
                    self.transcript.append("error", status=last_status,
                                           error=last_error, attempt=attempt + 1)
                    raise GatewayError(
                        f"gateway request failed: {last_error}",
                        attempts=attempt + 1, status=last_status,
                    )
            if attempt + 1 < attempts:
                delay = self._backoff(attempt)
                logger.warning("gateway attempt %d failed (%s), retrying in %.1fs",
                               attempt + 1, last_error, delay)
                time.sleep(delay)
        self.transcript.append("error", status=last_status, error=last_error,
                               attempt=attempts)
        raise GatewayError(
            f"gateway request failed after {attempts} attempts: {last_error}",
            attempts=attempts, status=last_status,
        )

    def _extract(self, response: requests.Response) -> str:
        try:
            payload = response.json()
            content = payload["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise GatewayError(f"malformed gateway response: {exc}") from exc
        if not isinstance(content, str):
            raise GatewayError("gateway response content is not a string")
        return content


# ---------------------------------------------------------------------------
# Deterministic mock
# ---------------------------------------------------------------------------

_INPUT_LINE = re.compile(r"^- (.+?): (.+)$", re.MULTILINE)
_JUDGE_SPLIT = re.compile(
    r"Response A:\n(.*)\n\nResponse B:\n(.*)\n\nWhich response", re.DOTALL
)
_REWRITE_SPLIT = re.compile(
    r"Original query:\n(.*)\n\nRewrite:\n(.*)\n\nDoes this rewrite", re.DOTALL
)

_FILLERS = (
    "working through the numbers carefully",
    "checking each candidate against the constraints",
    "comparing the stated options one at a time",
    "reading the problem again for hidden conditions",
)


class MockChatGateway:
    """Network-free gateway; replies depend only on (prompt, seed)."""

    def __init__(self, seed: int = 0, transcript_path: str | Path | None = None):
        self.seed = seed
        self.transcript = _Transcript(transcript_path)

    def complete(self, prompt: str, params: GenerationParams = DEFAULT_PARAMS) -> str:
        self.transcript.append("request", prompt=prompt, mock=True)
        text = self._route(prompt)
        self.transcript.append("response", status=200, text=text, mock=True)
        return text

    # Routing is on prompt content alone so replies stay a pure function.
    def _route(self, prompt: str) -> str:
        if "Structured Guideline for Passage Generation" in prompt:
            return self._passage(prompt)
        if "Which response better satisfies the instruction" in prompt:
            return self._judge(prompt)
        if "answer Good or Bad" in prompt:
            return self._grade_rewrite(prompt)
        if "educational value" in prompt:
            return self._rate(prompt)
        return "OK"

    def _hash(self, *parts: str) -> int:
        return fnv1a_32("\x1f".join(parts + (str(self.seed),)).encode("utf-8"))

    def _passage(self, prompt: str) -> str:
        tail = prompt.split("#### Input:", 1)[-1]
        pairs = _INPUT_LINE.findall(tail)
        paragraphs = []
        for task, problem in pairs:
            filler = _FILLERS[self._hash(task, problem) % len(_FILLERS)]
            paragraphs.append(
                f"For the {task} task, the problem asks: {problem} "
                f"A careful reader starts by {filler}, then narrows the "
                f"candidates until only one answer stays consistent with every "
                f"detail given. The answer is the option that satisfies all "
                f"stated conditions."
            )
        names = ", ".join(task for task, _ in pairs)
        paragraphs.append(
            f"In conclusion, the key points across the tasks ({names}) are that "
            f"each problem rewards close reading and stepwise elimination, while "
            f"every task keeps its own success criterion, so the same evidence "
            f"must be re-weighed from each task's perspective before answering."
        )
        body = "\n\n".join(paragraphs)
        return f"<Passage>\n{body}\n</Passage>"

    def _judge(self, prompt: str) -> str:
        match = _JUDGE_SPLIT.search(prompt)
        if match is None:
            return "A"
        first, second = match.group(1).strip(), match.group(2).strip()
        # Longer response wins; ties go to the first listed.
        return "A" if len(first) >= len(second) else "B"

    def _grade_rewrite(self, prompt: str) -> str:
        match = _REWRITE_SPLIT.search(prompt)
        if match is None:
            return "Bad"
        query_words = {w for w in match.group(1).lower().split() if len(w) >= 4}
        rewrite_words = {w for w in match.group(2).lower().split() if len(w) >= 4}
        return "Good" if query_words & rewrite_words else "Bad"

    def _rate(self, prompt: str) -> str:
        return f"{(self._hash(prompt) % 501) / 100:.2f}"
