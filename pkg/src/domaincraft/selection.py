"""Corpus selection: score a document stream and admit a subset by policy.

Policies:

* ``token_budget`` - rank candidates by (score desc, id asc) and walk that
  ranking greedily, stopping at the first document whose tokens would push
  the running total past the budget. Implemented streaming with a bounded
  heap so the full corpus never has to be sorted or held.
* ``top_k_docs`` - the k best documents by the same ordering.
* ``score_threshold`` - every document with score >= min_score, input order
  preserved.

The quality filter re-scores selected documents for educational value and
retains strictly greater than the threshold.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .classifier import DomainNgramClassifier
from .corpus import Document

logger = logging.getLogger(__name__)

POLICY_MODES = ("token_budget", "top_k_docs", "score_threshold")
DEFAULT_QUALITY_THRESHOLD = 1.5


class SelectionError(Exception):
    """Invalid policy or selection input."""


@dataclass
class ScoredDocument:
    """A document with its domain score and, once filtered, quality score."""

    document: Document
    domain_score: float
    quality_score: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.domain_score <= 1.0:
            raise SelectionError(
                f"domain_score must be in [0, 1], got {self.domain_score}"
            )

    @property
    def id(self) -> str:
        return self.document.id

    @property
    def token_count(self) -> int:
        return self.document.token_count


@dataclass(frozen=True)
class SelectionPolicy:
    """Exactly the field matching ``mode`` must be set; the others stay None."""

    mode: str
    budget_tokens: int | None = None
    k: int | None = None
    min_score: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in POLICY_MODES:
            raise SelectionError(f"unknown selection mode {self.mode!r}")
        required = {
            "token_budget": "budget_tokens",
            "top_k_docs": "k",
            "score_threshold": "min_score",
        }[self.mode]
        for name in ("budget_tokens", "k", "min_score"):
            value = getattr(self, name)
            if name == required:
                if value is None:
                    raise SelectionError(f"mode {self.mode} requires {name}")
            elif value is not None:
                raise SelectionError(f"mode {self.mode} does not take {name}")
        if self.mode == "token_budget" and self.budget_tokens <= 0:
            raise SelectionError("budget_tokens must be positive")
        if self.mode == "top_k_docs" and self.k <= 0:
            raise SelectionError("k must be positive")
        if self.mode == "score_threshold" and not 0.0 <= self.min_score <= 1.0:
            raise SelectionError("min_score must be in [0, 1]")


def score_stream(
    model: DomainNgramClassifier, docs: Iterable[Document]
) -> Iterator[ScoredDocument]:
    """Scores documents lazily, one output per input, order preserved."""
    for doc in docs:
        yield ScoredDocument(doc, model.score_text(doc.text))


# ---------------------------------------------------------------------------
# Ranking order: higher score first, ties broken by ascending id. The heap
# keeps the WORST admitted document on top, so entries invert that order.
# ---------------------------------------------------------------------------

class _WorstFirst:
    __slots__ = ("score", "doc_id", "item")

    def __init__(self, item: ScoredDocument) -> None:
        self.score = item.domain_score
        self.doc_id = item.id
        self.item = item

    def __lt__(self, other: "_WorstFirst") -> bool:
        if self.score != other.score:
            return self.score < other.score
        return self.doc_id > other.doc_id

    def ranks_at_or_below(self, cut: "_WorstFirst") -> bool:
        if self.score != cut.score:
            return self.score < cut.score
        return self.doc_id >= cut.doc_id


def _rank_key(item: ScoredDocument) -> tuple[float, str]:
    return (-item.domain_score, item.id)


def _select_token_budget(
    scored: Iterable[ScoredDocument], budget: int
) -> list[ScoredDocument]:
    """Streaming equivalent of: sort by rank, admit the greedy prefix, stop
    at the first document that would exceed the budget.

    The heap holds the current admitted set. When the running total exceeds
    the budget, worst entries are evicted until it fits again; the best
    evicted entry so far is the "cut". In the final ranking every evicted
    document sits at or below the cut, and everything at or below the cut is
    behind the first budget violator, so exclusion is permanent and the
    stream can drop such documents immediately.
    """
    heap: list[_WorstFirst] = []
    total = 0
    cut: _WorstFirst | None = None
    for item in scored:
        entry = _WorstFirst(item)
        if cut is not None and entry.ranks_at_or_below(cut):
            continue
        heapq.heappush(heap, entry)
        total += item.token_count
        while total > budget and heap:
            worst = heapq.heappop(heap)
            total -= worst.item.token_count
            if cut is None or cut < worst:
                cut = worst
    return sorted((e.item for e in heap), key=_rank_key)


def _select_top_k(scored: Iterable[ScoredDocument], k: int) -> list[ScoredDocument]:
    heap: list[_WorstFirst] = []
    for item in scored:
        entry = _WorstFirst(item)
        if len(heap) < k:
            heapq.heappush(heap, entry)
        elif heap[0] < entry:
            heapq.heapreplace(heap, entry)
    return sorted((e.item for e in heap), key=_rank_key)


def select(
    scored: Iterable[ScoredDocument], policy: SelectionPolicy
) -> list[ScoredDocument]:
    """Apply ``policy`` to a scored stream.

    token_budget and top_k_docs return documents in ranking order;
    score_threshold preserves the input order.
    """
    if policy.mode == "token_budget":
        return _select_token_budget(scored, policy.budget_tokens)
    if policy.mode == "top_k_docs":
        return _select_top_k(scored, policy.k)
    return [s for s in scored if s.domain_score >= policy.min_score]


# ---------------------------------------------------------------------------
# Quality filtering
# ---------------------------------------------------------------------------

@dataclass
class QualityFilterResult:
    retained: list[ScoredDocument]
    scored_count: int = 0
    dropped_count: int = 0
    error_count: int = 0
    retained_tokens: int = 0
    dropped_tokens: int = 0

    def to_dict(self) -> dict:
        return {
            "retained": len(self.retained),
            "scored": self.scored_count,
            "dropped": self.dropped_count,
            "errors": self.error_count,
            "retained_tokens": self.retained_tokens,
            "dropped_tokens": self.dropped_tokens,
        }


def quality_filter(
    docs: Iterable[ScoredDocument],
    scorer: Callable[[str], float],
    threshold: float = DEFAULT_QUALITY_THRESHOLD,
) -> QualityFilterResult:
    """Retain documents whose educational value is strictly above threshold.

    Every input document gets its ``quality_score`` populated (left None when
    the scorer fails; such documents are dropped and counted as errors).
    Deterministic scorers make the filter idempotent: refiltering the
    retained set retains everything.
    """
    result = QualityFilterResult(retained=[])
    for item in docs:
        try:
            item.quality_score = float(scorer(item.document.text))
        except Exception:
            item.quality_score = None
            result.error_count += 1
            result.dropped_count += 1
            result.dropped_tokens += item.token_count
            logger.warning("quality scorer failed on doc %s, dropped", item.id)
            continue
        result.scored_count += 1
        if item.quality_score > threshold:
            result.retained.append(item)
            result.retained_tokens += item.token_count
        else:
            result.dropped_count += 1
            result.dropped_tokens += item.token_count
    return result


# ---------------------------------------------------------------------------
# Parallel scoring. Workers each load the model once via the pool initializer
# and score chunks of texts; chunk order is preserved on reassembly.
# ---------------------------------------------------------------------------

_WORKER_MODEL: DomainNgramClassifier | None = None


def _init_worker(model_path: str) -> None:
    global _WORKER_MODEL
    _WORKER_MODEL = DomainNgramClassifier.load(model_path)


def _score_chunk(texts: list[str]) -> list[float]:
    assert _WORKER_MODEL is not None
    return [float(p) for p in _WORKER_MODEL.predict_proba(texts)[:, 1]]


def score_documents(
    model: DomainNgramClassifier,
    docs: list[Document],
    n_workers: int = 1,
    model_path: str | None = None,
    chunk_size: int = 256,
) -> list[ScoredDocument]:
    """Score a document list, optionally across processes.

    Multi-worker mode needs ``model_path`` so workers can load the model
    themselves instead of inheriting it over pickle. Output order matches
    input order in both modes.
    """
    if n_workers <= 1 or len(docs) <= chunk_size:
        return list(score_stream(model, docs))
    if model_path is None:
        raise SelectionError("parallel scoring requires model_path")
    import multiprocessing

    texts = [d.text for d in docs]
    chunks = [texts[i : i + chunk_size] for i in range(0, len(texts), chunk_size)]
    with multiprocessing.Pool(
        processes=n_workers, initializer=_init_worker, initargs=(model_path,)
    ) as pool:
        scored_chunks = pool.map(_score_chunk, chunks)
    scores = [s for chunk in scored_chunks for s in chunk]
    return [ScoredDocument(d, s) for d, s in zip(docs, scores)]
