"""Task-oriented synthetic passage generation.

A passage request bundles 2-4 problems, each from a DIFFERENT downstream
task. The rendered prompt instructs the model to write one analysis
paragraph per problem plus a closing "enlightenment" paragraph that ties the
tasks together, and to return the passage between <Passage></Passage> tags.

Two sampling modes exist for how problems are drawn:

* ``entity_centered`` - problems share a common entity seen from different
  aspects (ads, finance);
* ``knowledge_centered`` - problems share techniques rather than entities
  (math, physics).

With the bundled pools both modes sample uniformly; the mode is recorded on
the request and in the output records so corpora stay separable downstream.
"""

from __future__ import annotations

import hashlib
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .gateway import DEFAULT_PARAMS, GatewayError, GenerationParams, ModelGateway

logger = logging.getLogger(__name__)

MODES = ("entity_centered", "knowledge_centered")
MIN_PROBLEMS = 2
MAX_PROBLEMS = 4
DEFAULT_MIN_PARAGRAPH_WORDS = 20
PASSAGE_OPEN = "<Passage>"
PASSAGE_CLOSE = "</Passage>"

PROMPT_TEMPLATE = """#### Structured Guideline for Passage Generation

#### Inputs Required:

- **Questions**: The question for each task.

#### Passage Generation Steps:

- Task specific: For each of the downstream tasks listed below, write one paragraph analyzing the potential answers and the reasoning process associated with each. Please list the answer explicitly.

- Enlightenment: After writing paragraphs for all tasks, highlighting shared learnings across all tasks and distinct problem solving tricks for each task, specifically the current problem.

#### Quality Considerations:

- Ensure coherence and logical flow throughout the passage.

- Maintain a concise and clear writing style, avoiding redundancy and focusing on summarizing key points.

#### Input:
Please return only the generated passage between tags {open_tag}{close_tag} given below input.

{input_lines}
"""


class SynthesisError(Exception):
    """Invalid request construction or sampling input."""


class PassageParseError(Exception):
    """The model reply could not be parsed into a passage."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


@dataclass(frozen=True)
class TaskDef:
    name: str
    description: str = ""

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise SynthesisError("task name must be non-empty")


@dataclass(frozen=True)
class ProblemInstance:
    task: TaskDef
    statement: str

    def __post_init__(self) -> None:
        if not self.statement.strip():
            raise SynthesisError("problem statement must be non-empty")


@dataclass(frozen=True)
class PassageRequest:
    """Problems from pairwise-distinct tasks, plus generation params.

    The default bound of 2-4 problems matches the worked examples this
    pipeline targets; ``max_problems`` widens it when a corpus already
    contains passages covering more tasks.
    """

    mode: str
    problems: tuple[ProblemInstance, ...]
    params: GenerationParams = DEFAULT_PARAMS
    max_problems: int = MAX_PROBLEMS

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise SynthesisError(f"unknown mode {self.mode!r}")
        if self.max_problems < MIN_PROBLEMS:
            raise SynthesisError(f"max_problems must be >= {MIN_PROBLEMS}")
        if not MIN_PROBLEMS <= len(self.problems) <= self.max_problems:
            raise SynthesisError(
                f"a request needs {MIN_PROBLEMS}-{self.max_problems} problems, "
                f"got {len(self.problems)}"
            )
        names = [p.task.name for p in self.problems]
        if len(set(names)) != len(names):
            raise SynthesisError("each problem must come from a different task")

    @property
    def request_id(self) -> str:
        payload = "\x1f".join(
            [self.mode] + [f"{p.task.name}\x1e{p.statement}" for p in self.problems]
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass
class SyntheticPassage:
    request_id: str
    mode: str
    task_paragraphs: list[tuple[str, str]]  # (task name, paragraph)
    enlightenment: str
    raw_text: str

    @property
    def text(self) -> str:
        """Clean passage body: task paragraphs then enlightenment."""
        return "\n\n".join([p for _, p in self.task_paragraphs] + [self.enlightenment])


@dataclass
class GenerationFailure:
    request_id: str
    reason: str
    attempts: int
    raw_responses: list[str] = field(default_factory=list)


@dataclass
class GenerationResult:
    request_id: str
    passage: SyntheticPassage | None = None
    failure: GenerationFailure | None = None

    @property
    def ok(self) -> bool:
        return self.passage is not None


# ---------------------------------------------------------------------------
# Sampling and prompt rendering
# ---------------------------------------------------------------------------

def sample_request(
    pools: Mapping[str, Sequence[str]],
    problems_per_passage: int,
    mode: str = "entity_centered",
    seed: int = 0,
    params: GenerationParams = DEFAULT_PARAMS,
) -> PassageRequest:
    """Draw one request: ``problems_per_passage`` distinct tasks uniformly,
    then one problem uniformly from each chosen task's pool.

    ``pools`` maps task name to its problem statements. Tasks iterate in
    sorted-name order so the draw depends only on contents and seed.
    """
    if not MIN_PROBLEMS <= problems_per_passage <= MAX_PROBLEMS:
        raise SynthesisError(
            f"problems_per_passage must be in [{MIN_PROBLEMS}, {MAX_PROBLEMS}], "
            f"got {problems_per_passage}"
        )
    usable = {name: pool for name, pool in pools.items() if pool}
    if len(usable) < problems_per_passage:
        raise SynthesisError(
            f"need {problems_per_passage} non-empty task pools, have {len(usable)}"
        )
    rng = random.Random(seed)
    names = rng.sample(sorted(usable), problems_per_passage)
    problems = tuple(
        ProblemInstance(TaskDef(name), rng.choice(list(usable[name])))
        for name in names
    )
    return PassageRequest(mode=mode, problems=problems, params=params)


def build_prompt(request: PassageRequest) -> str:
    """Render the generation prompt. Pure; problem order is preserved."""
    lines = "\n\n".join(
        f"- {p.task.name}: {p.statement}" for p in request.problems
    )
    return PROMPT_TEMPLATE.format(
        open_tag=PASSAGE_OPEN, close_tag=PASSAGE_CLOSE, input_lines=lines
    )


# ---------------------------------------------------------------------------
# Parsing and validation
# ---------------------------------------------------------------------------

def _split_paragraphs(body: str) -> list[str]:
    paragraphs = []
    for block in body.split("\n\n"):
        cleaned = block.strip()
        if cleaned:
            paragraphs.append(cleaned)
    return paragraphs


def parse_passage(raw: str, request: PassageRequest) -> SyntheticPassage:
    """Extract the passage between the first open tag and the last close tag.

    Paragraphs split on blank lines. With N problems: the first N paragraphs
    map to the tasks in request order and the LAST paragraph is the
    enlightenment. Any surplus paragraphs in between are folded into the
    last task's paragraph, preserving their blank-line separation. Fewer
    than N+1 paragraphs is a parse error.
    """
    start = raw.find(PASSAGE_OPEN)
    end = raw.rfind(PASSAGE_CLOSE)
    if start == -1 or end == -1 or end < start:
        raise PassageParseError("no_tags", "reply lacks <Passage></Passage> tags")
    body = raw[start + len(PASSAGE_OPEN) : end]
    paragraphs = _split_paragraphs(body)
    n = len(request.problems)
    if len(paragraphs) < n + 1:
        raise PassageParseError(
            "too_few_paragraphs",
            f"got {len(paragraphs)} paragraphs, need {n + 1}",
        )
    task_paragraphs = paragraphs[:n]
    surplus = paragraphs[n:-1]
    if surplus:
        task_paragraphs[n - 1] = "\n\n".join([task_paragraphs[n - 1]] + surplus)
    return SyntheticPassage(
        request_id=request.request_id,
        mode=request.mode,
        task_paragraphs=[
            (p.task.name, para)
            for p, para in zip(request.problems, task_paragraphs)
        ],
        enlightenment=paragraphs[-1],
        raw_text=raw,
    )


def validate_passage(
    passage: SyntheticPassage,
    request: PassageRequest,
    min_paragraph_words: int = DEFAULT_MIN_PARAGRAPH_WORDS,
) -> list[str]:
    """Structural checks; returns violation names (empty means valid)."""
    violations = []
    if len(passage.task_paragraphs) != len(request.problems):
        violations.append("paragraph_count_mismatch")
    for (name, _), problem in zip(passage.task_paragraphs, request.problems):
        if name != problem.task.name:
            violations.append(f"task_order_mismatch:{problem.task.name}")
    for name, para in passage.task_paragraphs:
        if len(para.split()) < min_paragraph_words:
            violations.append(f"task_paragraph_too_short:{name}")
    if not passage.enlightenment.strip():
        violations.append("enlightenment_empty")
    elif len(passage.enlightenment.split()) < min_paragraph_words:
        violations.append("enlightenment_too_short")
    # The enlightenment must be the final paragraph of the tagged body.
    body_paragraphs = _split_paragraphs(
        passage.raw_text[
            passage.raw_text.find(PASSAGE_OPEN) + len(PASSAGE_OPEN):
            passage.raw_text.rfind(PASSAGE_CLOSE)
        ]
    ) if PASSAGE_OPEN in passage.raw_text and PASSAGE_CLOSE in passage.raw_text else []
    if body_paragraphs and body_paragraphs[-1] != passage.enlightenment:
        violations.append("enlightenment_not_last")
    return violations


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def generate(
    gateway: ModelGateway,
    request: PassageRequest,
    max_attempts: int = 3,
    min_paragraph_words: int = DEFAULT_MIN_PARAGRAPH_WORDS,
) -> GenerationResult:
    """Prompt, parse, validate; retry on parse/validation failure.

    A request that cannot produce a valid passage within ``max_attempts``
    (or whose gateway calls are exhausted) yields a failure record carrying
    every raw response seen, so nothing is silently dropped.
    """
    prompt = build_prompt(request)
    raw_responses: list[str] = []
    reason = "unknown"
    for attempt in range(1, max_attempts + 1):
        try:
            raw = gateway.complete(prompt, request.params)
        except GatewayError as exc:
            reason = f"gateway_error: {exc}"
            break
        raw_responses.append(raw)
        try:
            passage = parse_passage(raw, request)
        except PassageParseError as exc:
            reason = f"parse_error: {exc.reason}"
            continue
        violations = validate_passage(passage, request, min_paragraph_words)
        if not violations:
            return GenerationResult(request.request_id, passage=passage)
        reason = "validation_error: " + ",".join(violations)
    logger.warning("request %s failed after %d responses (%s)",
                   request.request_id, len(raw_responses), reason)
    return GenerationResult(
        request.request_id,
        failure=GenerationFailure(
            request_id=request.request_id,
            reason=reason,
            attempts=len(raw_responses),
            raw_responses=raw_responses,
        ),
    )


def generate_batch(
    gateway: ModelGateway,
    requests: Sequence[PassageRequest],
    max_attempts: int = 3,
    min_paragraph_words: int = DEFAULT_MIN_PARAGRAPH_WORDS,
    max_in_flight: int = 4,
) -> tuple[list[SyntheticPassage], list[GenerationFailure]]:
    """Generate many requests with a bounded fan-out.

    Results are re-sequenced to request order; passages plus failures always
    account for every request.
    """
    if max_in_flight < 1:
        raise SynthesisError("max_in_flight must be >= 1")
    if max_in_flight == 1 or len(requests) <= 1:
        results = [
            generate(gateway, r, max_attempts, min_paragraph_words)
            for r in requests
        ]
    else:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            results = list(
                pool.map(
                    lambda r: generate(gateway, r, max_attempts, min_paragraph_words),
                    requests,
                )
            )
    passages = [r.passage for r in results if r.ok]
    failures = [r.failure for r in results if not r.ok]
    return passages, failures


def passage_to_record(passage: SyntheticPassage) -> dict:
    """JSONL record; includes id/text so the file re-ingests as a corpus."""
    return {
        "id": passage.request_id,
        "text": passage.text,
        "source": "synthetic",
        "mode": passage.mode,
        "tasks": [name for name, _ in passage.task_paragraphs],
        "task_paragraphs": [
            {"task": name, "paragraph": para}
            for name, para in passage.task_paragraphs
        ],
        "enlightenment": passage.enlightenment,
    }


def requests_from_pools(
    pools: Mapping[str, Sequence[str]],
    count: int,
    problems_per_passage: int,
    mode: str = "entity_centered",
    seed: int = 0,
    params: GenerationParams = DEFAULT_PARAMS,
) -> list[PassageRequest]:
    """Derive ``count`` requests with per-request seeds seed, seed+1, ..."""
    return [
        sample_request(pools, problems_per_passage, mode, seed + i, params)
        for i in range(count)
    ]
