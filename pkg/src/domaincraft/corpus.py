"""Line-delimited JSON corpus ingestion, validation, and token accounting."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

logger = logging.getLogger(__name__)

TokenCounter = Callable[[str], int]


def count_tokens(text: str) -> int:
    """Default token accounting rule: Unicode whitespace-separated runs."""
    return len(text.split())


class CorpusError(Exception):
    """Fatal corpus failure: unreadable file, no usable documents, bad schema."""


@dataclass(frozen=True)
class Document:
    """One corpus record. Frozen so instances are safe to share across workers."""

    id: str
    text: str
    source: str
    token_count: int
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")
        if self.token_count < 0:
            raise ValueError("token_count must be >= 0")


@dataclass
class SourceStats:
    docs: int = 0
    tokens: int = 0


@dataclass
class CorpusStats:
    """Document and token totals, overall and per source label."""

    document_count: int = 0
    token_count: int = 0
    per_source: dict[str, SourceStats] = field(default_factory=dict)

    def add(self, doc: Document) -> None:
        self.document_count += 1
        self.token_count += doc.token_count
        entry = self.per_source.setdefault(doc.source, SourceStats())
        entry.docs += 1
        entry.tokens += doc.token_count

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        """Fold another partial into this one (for per-worker aggregation)."""
        self.document_count += other.document_count
        self.token_count += other.token_count
        for source, entry in other.per_source.items():
            mine = self.per_source.setdefault(source, SourceStats())
            mine.docs += entry.docs
            mine.tokens += entry.tokens
        return self

    def to_dict(self) -> dict:
        return {
            "document_count": self.document_count,
            "token_count": self.token_count,
            "per_source": {
                s: {"docs": e.docs, "tokens": e.tokens}
                for s, e in sorted(self.per_source.items())
            },
        }


def stats(docs: Iterable[Document]) -> CorpusStats:
    """Single pass over ``docs`` accumulating totals."""
    out = CorpusStats()
    for doc in docs:
        out.add(doc)
    return out


class JsonlCorpusReader:
    """Streams Documents from a JSONL file.

    Each line must be a JSON object with non-empty string ``id`` and string
    ``text``. Malformed lines and empty-text records are skipped, counted,
    and logged; they are never silently dropped. An unreadable file or a
    file yielding zero usable documents raises CorpusError.
    """

    def __init__(
        self,
        path: str | Path,
        source_label: str | None = None,
        token_counter: TokenCounter = count_tokens,
    ) -> None:
        self.path = Path(path)
        self.source_label = source_label if source_label is not None else self.path.stem
        self.token_counter = token_counter
        self.read_count = 0
        self.malformed_count = 0
        self.empty_text_count = 0

    @property
    def skipped_count(self) -> int:
        return self.malformed_count + self.empty_text_count

    def summary(self) -> dict[str, int]:
        return {
            "read": self.read_count,
            "malformed": self.malformed_count,
            "empty_text": self.empty_text_count,
            "skipped": self.skipped_count,
        }

    def _parse_line(self, raw: str, lineno: int) -> Document | None:
        try:
            record = json.loads(raw)
        except json.JSONDecodeError:
            self.malformed_count += 1
            logger.warning("%s:%d: malformed JSON, skipped", self.path, lineno)
            return None
        if not isinstance(record, dict):
            self.malformed_count += 1
            logger.warning("%s:%d: line is not a JSON object, skipped", self.path, lineno)
            return None
        doc_id = record.get("id")
        text = record.get("text")
        if not isinstance(doc_id, str) or not doc_id or not isinstance(text, str):
            self.malformed_count += 1
            logger.warning("%s:%d: missing or invalid id/text, skipped", self.path, lineno)
            return None
        if not text.strip():
            self.empty_text_count += 1
            logger.warning("%s:%d: empty text, skipped", self.path, lineno)
            return None
        source = record.get("source")
        if not isinstance(source, str) or not source:
            source = self.source_label
        meta = {
            k: v if isinstance(v, str) else json.dumps(v, sort_keys=True)
            for k, v in record.items()
            if k not in ("id", "text", "source")
        }
        return Document(
            id=doc_id,
            text=text,
            source=source,
            token_count=self.token_counter(text),
            meta=meta,
        )

    def __iter__(self) -> Iterator[Document]:
        try:
            handle = open(self.path, "r", encoding="utf-8")
        except OSError as exc:
            raise CorpusError(f"cannot read corpus file {self.path}: {exc}") from exc
        with handle:
            for lineno, raw in enumerate(handle, start=1):
                if not raw.strip():
                    self.malformed_count += 1
                    logger.warning("%s:%d: blank line, skipped", self.path, lineno)
                    continue
                doc = self._parse_line(raw, lineno)
                if doc is not None:
                    self.read_count += 1
                    yield doc
        if self.skipped_count:
            logger.info("%s: skipped %d of %d lines", self.path, self.skipped_count,
                        self.read_count + self.skipped_count)


def ingest(
    path: str | Path,
    source_label: str | None = None,
    token_counter: TokenCounter = count_tokens,
) -> tuple[list[Document], dict[str, int]]:
    """Read a whole JSONL corpus into memory.

    Returns the documents plus the reader's skip summary. Raises CorpusError
    if the file is unreadable or contains no usable documents.
    """
    reader = JsonlCorpusReader(path, source_label, token_counter)
    docs = list(reader)
    if not docs:
        raise CorpusError(f"no usable documents in {reader.path}")
    return docs, reader.summary()


def stats_for_file(
    path: str | Path,
    source_label: str | None = None,
    token_counter: TokenCounter = count_tokens,
) -> CorpusStats:
    """Stream a JSONL file and return its stats without holding documents."""
    reader = JsonlCorpusReader(path, source_label, token_counter)
    out = stats(iter(reader))
    if out.document_count == 0:
        raise CorpusError(f"no usable documents in {reader.path}")
    return out


def document_to_record(doc: Document) -> dict:
    record: dict = {"id": doc.id, "text": doc.text, "source": doc.source}
    record.update(doc.meta)
    return record


def dump_record(record: dict) -> str:
    """Deterministic one-line JSON serialization (sorted keys, compact)."""
    return json.dumps(record, ensure_ascii=False, sort_keys=True,
                      separators=(",", ":"))


def write_jsonl(records: Iterable[dict], path: str | Path) -> int:
    """Write records as JSONL atomically-by-rename. Returns the line count."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    count = 0
    with open(tmp, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(dump_record(record))
            handle.write("\n")
            count += 1
    tmp.replace(path)
    return count
