"""Evaluation metrics: ROC AUC, position-debiased judge win rate, and
query-rewrite density/diversity.

AUC follows the Mann-Whitney convention (tied pairs count 0.5) via average
ranks, O(n log n), and agrees exactly with the quadratic pair-counting
definition.

Win rate queries the judge twice per case with the responses in both orders:
a case scores 1 when the system response wins both rounds, 0 when it loses
both, 0.5 when the orderings disagree. Cases whose verdicts stay unparsable
after retries become abstentions: counted, excluded from the denominator.

Density is the mean number of Good rewrites per 10-rewrite set; diversity is
the mean number of greedy-leader clusters per set (scan rewrites in order,
join the first cluster whose LEADER is at least ``similarity_threshold``
cosine-similar, else found a new cluster). The default embedding is a
character-trigram term-frequency vector; greedy clustering is order-dependent
within a set by construction, and the report records the configuration.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .gateway import GatewayError, GenerationParams, ModelGateway

logger = logging.getLogger(__name__)

REWRITE_COUNT = 10
DEFAULT_SIMILARITY_THRESHOLD = 0.8
WINRATE_CONVENTION = (
    "disagreements score 0.5 and stay in the denominator; "
    "abstentions are excluded from the denominator"
)


class EvaluationError(Exception):
    """Invalid metric input."""


# ---------------------------------------------------------------------------
# AUC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabeledScore:
    score: float
    label: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise EvaluationError(f"score must be finite, got {self.score}")
        if self.label not in (0, 1):
            raise EvaluationError(f"label must be 0 or 1, got {self.label}")


def compute_auc(items: Sequence[LabeledScore]) -> float:
    """Mann-Whitney AUC by average-rank sum.

    Equals (concordant + 0.5 * tied) / (positives * negatives) exactly:
    ranks are integers or halves, so the arithmetic is exact in floats.
    """
    n = len(items)
    positives = sum(1 for it in items if it.label == 1)
    negatives = n - positives
    if positives == 0 or negatives == 0:
        raise EvaluationError(
            "AUC needs both classes; got "
            f"{positives} positives and {negatives} negatives"
        )
    order = sorted(range(n), key=lambda i: items[i].score)
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j < n and items[order[j]].score == items[order[i]].score:
            j += 1
        avg = (i + 1 + j) / 2.0  # average of 1-based ranks i+1 .. j
        for k in range(i, j):
            ranks[order[k]] = avg
        i = j
    rank_sum = sum(r for r, it in zip(ranks, items) if it.label == 1)
    return (rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives)


# ---------------------------------------------------------------------------
# Judge win rate
# ---------------------------------------------------------------------------

JUDGE_PROMPT_TEMPLATE = """You are comparing two responses to the same instruction.

Instruction:
{instruction}

Response A:
{response_a}

Response B:
{response_b}

Which response better satisfies the instruction? Answer with exactly one letter: A or B."""

_VERDICT = re.compile(r"\b([AB])\b")


@dataclass(frozen=True)
class JudgeCase:
    instruction: str
    response_a: str  # system under test
    response_b: str  # baseline
    task: str = ""

    def __post_init__(self) -> None:
        if not self.response_a or not self.response_b:
            raise EvaluationError("both responses must be non-empty")


@dataclass
class CaseVerdicts:
    task: str
    verdict_first: str | None  # raw reply, (A, B) ordering
    verdict_swapped: str | None  # raw reply, (B, A) ordering
    outcome: float | None  # 1 / 0 / 0.5, None = abstention

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "verdict_first": self.verdict_first,
            "verdict_swapped": self.verdict_swapped,
            "outcome": self.outcome,
        }


@dataclass
class WinRateReport:
    win_rate: float | None
    wins: int
    losses: int
    disagreements: int
    abstentions: int
    cases: int
    per_task: dict[str, dict] = field(default_factory=dict)
    verdicts: list[CaseVerdicts] = field(default_factory=list)
    convention: str = WINRATE_CONVENTION

    def to_dict(self) -> dict:
        return {
            "metric": "winrate",
            "win_rate": self.win_rate,
            "wins": self.wins,
            "losses": self.losses,
            "disagreements": self.disagreements,
            "abstentions": self.abstentions,
            "cases": self.cases,
            "per_task": self.per_task,
            "convention": self.convention,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }


def _parse_letter(reply: str) -> str | None:
    match = _VERDICT.search(reply)
    return match.group(1) if match else None


def _ask(
    gateway: ModelGateway,
    prompt: str,
    params: GenerationParams,
    max_attempts: int,
) -> str | None:
    """Query until the reply parses; None means abstention."""
    for _ in range(max_attempts):
        try:
            reply = gateway.complete(prompt, params)
        except GatewayError as exc:
            logger.warning("judge call failed: %s", exc)
            return None
        if _parse_letter(reply) is not None:
            return reply
    return None


def judge_winrate(
    gateway: ModelGateway,
    cases: Sequence[JudgeCase],
    template: str = JUDGE_PROMPT_TEMPLATE,
    max_attempts: int = 2,
    max_in_flight: int = 4,
    params: GenerationParams | None = None,
) -> WinRateReport:
    """Debiased pairwise evaluation of response_a (system) vs response_b."""
    if not cases:
        raise EvaluationError("judge_winrate needs at least one case")
    params = params or GenerationParams(temperature=0.0, max_tokens=8)
    prompts = []
    for case in cases:
        prompts.append(template.format(
            instruction=case.instruction,
            response_a=case.response_a,
            response_b=case.response_b,
        ))
        prompts.append(template.format(
            instruction=case.instruction,
            response_a=case.response_b,
            response_b=case.response_a,
        ))

    ask = lambda prompt: _ask(gateway, prompt, params, max_attempts)
    if max_in_flight > 1 and len(prompts) > 1:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            replies = list(pool.map(ask, prompts))
    else:
        replies = [ask(p) for p in prompts]

    report = WinRateReport(
        win_rate=None, wins=0, losses=0, disagreements=0,
        abstentions=0, cases=len(cases),
    )
    tally: dict[str, Counter] = {}
    for idx, case in enumerate(cases):
        first, swapped = replies[2 * idx], replies[2 * idx + 1]
        if first is None or swapped is None:
            outcome = None
        else:
            # In the swapped round, the system response sits in slot B.
            a_first = _parse_letter(first) == "A"
            a_swapped = _parse_letter(swapped) == "B"
            outcome = (
                1.0 if a_first and a_swapped
                else 0.0 if not a_first and not a_swapped
                else 0.5
            )
        report.verdicts.append(CaseVerdicts(case.task, first, swapped, outcome))
        counts = tally.setdefault(case.task, Counter())
        if outcome is None:
            report.abstentions += 1
            counts["abstentions"] += 1
        elif outcome == 1.0:
            report.wins += 1
            counts["wins"] += 1
        elif outcome == 0.0:
            report.losses += 1
            counts["losses"] += 1
        else:
            report.disagreements += 1
            counts["disagreements"] += 1

    counted = report.cases - report.abstentions
    if counted:
        report.win_rate = (report.wins + 0.5 * report.disagreements) / counted
    for task, counts in sorted(tally.items()):
        task_counted = counts["wins"] + counts["losses"] + counts["disagreements"]
        report.per_task[task] = {
            "wins": counts["wins"],
            "losses": counts["losses"],
            "disagreements": counts["disagreements"],
            "abstentions": counts["abstentions"],
            "win_rate": (
                (counts["wins"] + 0.5 * counts["disagreements"]) / task_counted
                if task_counted else None
            ),
        }
    return report


# ---------------------------------------------------------------------------
# Rewrite density / diversity
# ---------------------------------------------------------------------------

REWRITE_JUDGE_TEMPLATE = """Original query:
{query}

Rewrite:
{rewrite}

Does this rewrite preserve the search intent of the original query - answer Good or Bad."""

_GOOD_BAD = re.compile(r"\b(good|bad)\b", re.IGNORECASE)

Embedder = Callable[[str], Mapping[str, float]]


@dataclass
class RewriteSet:
    query: str
    rewrites: list[str]
    good_flags: list[bool] | None = None

    def __post_init__(self) -> None:
        if len(self.rewrites) != REWRITE_COUNT:
            raise EvaluationError(
                f"a rewrite set holds exactly {REWRITE_COUNT} rewrites, "
                f"got {len(self.rewrites)}"
            )
        if self.good_flags is not None and len(self.good_flags) != REWRITE_COUNT:
            raise EvaluationError("good_flags length must match rewrites")


def judge_rewrites(
    gateway: ModelGateway,
    sets: Sequence[RewriteSet],
    template: str = REWRITE_JUDGE_TEMPLATE,
    params: GenerationParams | None = None,
) -> list[RewriteSet]:
    """Populate good_flags on each set via the Good/Bad intent judge."""
    params = params or GenerationParams(temperature=0.0, max_tokens=8)
    out = []
    for rs in sets:
        flags = []
        for rewrite in rs.rewrites:
            reply = gateway.complete(
                template.format(query=rs.query, rewrite=rewrite), params
            )
            match = _GOOD_BAD.search(reply)
            if match is None:
                raise EvaluationError(
                    f"rewrite judge reply unparsable: {reply!r}"
                )
            flags.append(match.group(1).lower() == "good")
        out.append(RewriteSet(rs.query, list(rs.rewrites), flags))
    return out


def compute_density(sets: Sequence[RewriteSet]) -> float:
    """Mean count of Good rewrites per set; in [0, 10]."""
    if not sets:
        raise EvaluationError("compute_density needs at least one set")
    for rs in sets:
        if rs.good_flags is None:
            raise EvaluationError(f"good_flags not populated for {rs.query!r}")
    return sum(sum(rs.good_flags) for rs in sets) / len(sets)


def char_trigram_embedding(text: str) -> Counter:
    """Term frequencies of every contiguous 3-character substring.

    Strings shorter than 3 characters embed as a single whole-string term.
    """
    if len(text) < 3:
        return Counter({text: 1})
    return Counter(text[i : i + 3] for i in range(len(text) - 2))


def cosine_similarity(u: Mapping[str, float], v: Mapping[str, float]) -> float:
    if not u or not v:
        return 0.0
    dot = sum(weight * v[term] for term, weight in u.items() if term in v)
    norm_u = math.sqrt(sum(w * w for w in u.values()))
    norm_v = math.sqrt(sum(w * w for w in v.values()))
    if norm_u == 0.0 or norm_v == 0.0:
        return 0.0
    return dot / (norm_u * norm_v)


def cluster_count(
    rewrites: Sequence[str],
    embed: Embedder = char_trigram_embedding,
    similarity_threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
) -> int:
    """Greedy leader clustering: scan in order, join the first cluster whose
    leader clears the threshold, else open a new cluster."""
    leaders: list[Mapping[str, float]] = []
    for rewrite in rewrites:
        vector = embed(rewrite)
        for leader in leaders:
            if cosine_similarity(vector, leader) >= similarity_threshold:
                break
        else:
            leaders.append(vector)
    return len(leaders)


def compute_diversity(
    sets: Sequence[RewriteSet],
    embed: Embedder = char_trigram_embedding,
    similarity_threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
) -> float:
    """Mean cluster count per set; in [1, 10] for non-empty input."""
    if not sets:
        raise EvaluationError("compute_diversity needs at least one set")
    return sum(
        cluster_count(rs.rewrites, embed, similarity_threshold) for rs in sets
    ) / len(sets)
