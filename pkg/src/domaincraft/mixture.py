"""Two-stage training-manifest planning and learning-rate schedules.

Stage 1 mixes the original in-domain corpus with the selected data
(knowledge acquisition, with the selected data doubling as replay); stage 2
holds the synthetic task-oriented passages (task alignment). The planner
emits a JSON manifest describing data only; no trainer is included.

Schedules are pure functions of (step, config):

* ``wsd_lr`` - linear warmup over W = round(warmup_frac * total) steps,
  constant plateau at max_lr, then exponential decay over the final
  round(decay_frac * total) steps landing exactly on
  max_lr * decay_floor_ratio at the last step.
* ``cosine_lr`` - the same warmup, then a half-cosine from max_lr to 0.

Phase boundaries round half up so W = round(0.03 * 1000) = 30 exactly.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import CorpusStats, TokenCounter, count_tokens, stats_for_file

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
DEFAULT_BATCH_SIZE_TOKENS = 1_048_576
INTERLEAVE_POLICIES = ("concatenate_shuffled", "proportional_round_robin")
NO_REPLAY_NOTE = "no replay data"


class MixtureError(Exception):
    """Invalid plan input: missing source, budget over availability, ..."""


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class ScheduleConfig:
    total_steps: int
    max_lr: float = 2e-5
    warmup_frac: float = 0.03
    decay_frac: float = 0.10
    decay_floor_ratio: float = 0.10

    def __post_init__(self) -> None:
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if self.max_lr <= 0:
            raise ValueError("max_lr must be positive")
        if self.warmup_frac <= 0 or self.decay_frac <= 0:
            raise ValueError("warmup_frac and decay_frac must be positive")
        if self.warmup_frac + self.decay_frac >= 1:
            raise ValueError("warmup_frac + decay_frac must be < 1")
        if not 0 < self.decay_floor_ratio <= 1:
            raise ValueError("decay_floor_ratio must be in (0, 1]")
        warmup, decay_start = self.phase_bounds()
        if warmup < 1 or warmup >= decay_start or decay_start >= self.total_steps:
            raise ValueError(
                f"total_steps={self.total_steps} leaves a degenerate phase "
                f"(warmup {warmup}, decay starts {decay_start})"
            )

    def phase_bounds(self) -> tuple[int, int]:
        """(W, D0): warmup covers [0, W), decay covers [D0, total)."""
        warmup = _round_half_up(self.warmup_frac * self.total_steps)
        decay_start = self.total_steps - _round_half_up(
            self.decay_frac * self.total_steps
        )
        return warmup, decay_start

    def to_dict(self, schedule_type: str = "wsd") -> dict:
        return {
            "type": schedule_type,
            "total_steps": self.total_steps,
            "max_lr": self.max_lr,
            "warmup_frac": self.warmup_frac,
            "decay_frac": self.decay_frac,
            "decay_floor_ratio": self.decay_floor_ratio,
        }


def wsd_lr(step: int, config: ScheduleConfig) -> float:
    """Warmup-Stable-Decay learning rate at ``step``."""
    if not 0 <= step < config.total_steps:
        raise ValueError(f"step {step} out of range [0, {config.total_steps})")
    warmup, decay_start = config.phase_bounds()
    if step < warmup:
        # Multiply by the ratio, not (max_lr * k) / W: the ratio is <= 1.0
        # exactly, so the ramp can never round one ULP above max_lr.
        return config.max_lr * ((step + 1) / warmup)
    if step < decay_start:
        return config.max_lr
    decay_len = config.total_steps - decay_start
    ratio = config.decay_floor_ratio ** (1.0 / decay_len)
    return config.max_lr * ratio ** (step - decay_start + 1)


def cosine_lr(
    step: int,
    total: int,
    max_lr: float = 5e-6,
    warmup_frac: float = 0.03,
) -> float:
    """Linear warmup then half-cosine decay to zero at the final step."""
    if total < 2:
        raise ValueError("total must be >= 2")
    if not 0 <= step < total:
        raise ValueError(f"step {step} out of range [0, {total})")
    warmup = _round_half_up(warmup_frac * total)
    if warmup < 1 or warmup >= total:
        raise ValueError(f"warmup_frac {warmup_frac} degenerate for total {total}")
    if step < warmup:
        return max_lr * ((step + 1) / warmup)
    return max_lr * 0.5 * (1.0 + math.cos(math.pi * (step - warmup) / (total - warmup)))


# ---------------------------------------------------------------------------
# Manifest planning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SourceEntry:
    path: str
    docs: int
    tokens: int

    def to_dict(self) -> dict:
        return {"path": self.path, "docs": self.docs, "tokens": self.tokens}


@dataclass
class StagePlan:
    stage1: list[SourceEntry]
    stage2: list[SourceEntry]
    batch_size_tokens: int
    interleave: str
    seed: int
    schedule: ScheduleConfig
    schedule_type: str
    replay_note: str
    interleave_order: dict[str, list[str]]

    @property
    def stage1_tokens(self) -> int:
        return sum(e.tokens for e in self.stage1)

    @property
    def stage2_tokens(self) -> int:
        return sum(e.tokens for e in self.stage2)

    def to_dict(self) -> dict:
        return {
            "version": MANIFEST_VERSION,
            "stage1": [e.to_dict() for e in self.stage1],
            "stage2": [e.to_dict() for e in self.stage2],
            "batch_size_tokens": self.batch_size_tokens,
            "interleave": self.interleave,
            "seed": self.seed,
            "schedule": self.schedule.to_dict(self.schedule_type),
            "replay_note": self.replay_note,
            "interleave_order": self.interleave_order,
        }

    def write(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")
        tmp.replace(path)


def _source_entry(
    path: str | Path,
    label: str,
    budget: int | None,
    token_counter: TokenCounter,
) -> tuple[SourceEntry, CorpusStats]:
    if not Path(path).exists():
        raise MixtureError(f"{label} source does not exist: {path}")
    stats = stats_for_file(path, label, token_counter)
    tokens = stats.token_count
    if budget is not None:
        if budget <= 0:
            raise MixtureError(f"{label} budget must be positive, got {budget}")
        if budget > tokens:
            raise MixtureError(
                f"{label} budget {budget} exceeds available {tokens} tokens "
                f"in {path}"
            )
        tokens = budget
    return SourceEntry(str(path), stats.document_count, tokens), stats


def plan_two_stage(
    in_domain_path: str | Path,
    synthetic_path: str | Path,
    selected_path: str | Path | None = None,
    *,
    schedule: ScheduleConfig,
    schedule_type: str = "wsd",
    batch_size_tokens: int = DEFAULT_BATCH_SIZE_TOKENS,
    interleave: str = "concatenate_shuffled",
    seed: int = 0,
    in_domain_budget: int | None = None,
    selected_budget: int | None = None,
    synthetic_budget: int | None = None,
    token_counter: TokenCounter = count_tokens,
    output_path: str | Path | None = None,
) -> StagePlan:
    """Build (and optionally write) the two-stage manifest.

    Budgets default to each source's full token count and may not exceed it.
    The selected source is optional; without it the plan carries the
    "no replay data" note, since only selected data originates from the
    general corpus.
    """
    if interleave not in INTERLEAVE_POLICIES:
        raise MixtureError(f"unknown interleave policy {interleave!r}")
    if batch_size_tokens <= 0:
        raise MixtureError("batch_size_tokens must be positive")
    if schedule_type not in ("wsd", "cosine"):
        raise MixtureError(f"unknown schedule type {schedule_type!r}")

    in_domain, _ = _source_entry(
        in_domain_path, "in-domain", in_domain_budget, token_counter
    )
    stage1 = [in_domain]
    if selected_path is not None:
        selected, _ = _source_entry(
            selected_path, "selected", selected_budget, token_counter
        )
        stage1.append(selected)
        replay_note = (
            f"replay: stage1 source {selected.path} is selected general-corpus data"
        )
    else:
        replay_note = NO_REPLAY_NOTE
    synthetic, _ = _source_entry(
        synthetic_path, "synthetic", synthetic_budget, token_counter
    )
    stage2 = [synthetic]

    rng = random.Random(seed)
    order1 = [e.path for e in stage1]
    rng.shuffle(order1)
    order2 = [e.path for e in stage2]
    rng.shuffle(order2)

    plan = StagePlan(
        stage1=stage1,
        stage2=stage2,
        batch_size_tokens=batch_size_tokens,
        interleave=interleave,
        seed=seed,
        schedule=schedule,
        schedule_type=schedule_type,
        replay_note=replay_note,
        interleave_order={"stage1": order1, "stage2": order2},
    )
    if output_path is not None:
        plan.write(output_path)
        logger.info("wrote manifest to %s (stage1 %d tokens, stage2 %d tokens)",
                    output_path, plan.stage1_tokens, plan.stage2_tokens)
    return plan
