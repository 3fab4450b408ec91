"""Shared fixtures and the acceptance-criteria summary hook."""

from __future__ import annotations

import json
import re
from pathlib import Path

import pytest

from domaincraft.classifier import DomainNgramClassifier
from domaincraft.corpus import Document, count_tokens, ingest

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"
SEPARABLE = FIXTURES / "separable"
DEMO = FIXTURES / "demo"

# Small enough to keep test models light; large enough that n-gram
# collisions stay rare on the fixture corpora.
TEST_BUCKETS = 65536


def make_doc(doc_id: str, text: str, source: str = "test") -> Document:
    return Document(
        id=doc_id, text=text, source=source, token_count=count_tokens(text)
    )


def load_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines() if line]


@pytest.fixture(scope="session")
def separable_docs() -> tuple[list[Document], list[Document]]:
    positives, _ = ingest(SEPARABLE / "in_domain.jsonl", "in-domain")
    negatives, _ = ingest(SEPARABLE / "general.jsonl", "general")
    return positives, negatives


@pytest.fixture(scope="session")
def separable_model(separable_docs) -> DomainNgramClassifier:
    """Defaults-shaped model fit on the full disjoint-vocabulary corpus."""
    positives, negatives = separable_docs
    texts = [d.text for d in positives] + [d.text for d in negatives]
    labels = [1] * len(positives) + [0] * len(negatives)
    model = DomainNgramClassifier(bucket_count=TEST_BUCKETS)
    return model.fit(texts, labels)


@pytest.fixture(scope="session")
def demo_docs() -> tuple[list[Document], list[Document]]:
    in_domain, _ = ingest(DEMO / "in_domain.jsonl", "in-domain")
    general, _ = ingest(DEMO / "general.jsonl", "general")
    return in_domain, general


# ---------------------------------------------------------------------------
# Acceptance summary: one line per criterion, printed whether it passed,
# failed, or was skipped, so the test log always shows the gate's state.
# ---------------------------------------------------------------------------

CRITERIA = {
    1: "classifier fidelity",
    2: "AUC oracle equivalence",
    3: "win-rate debiasing",
    4: "density/diversity",
    5: "selection correctness",
    6: "LR schedules",
    7: "synthesis round-trip",
    8: "mixture manifest",
    9: "throughput",
}

_CRITERION_ID = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    by_criterion: dict[int, list[tuple[str, object]]] = {}
    for category in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(category, []):
            match = _CRITERION_ID.search(getattr(report, "nodeid", ""))
            if match:
                by_criterion.setdefault(int(match.group(1)), []).append(
                    (category, report)
                )
    if not by_criterion:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(CRITERIA):
        reports = by_criterion.get(number)
        if not reports:
            terminalreporter.write_line(
                f"CRITERION {number} ({CRITERIA[number]}): NOT RUN"
            )
            continue
        categories = {category for category, _ in reports}
        if categories & {"failed", "error"}:
            status = "FAIL"
        elif categories == {"skipped"}:
            status = "SKIP"
        else:
            status = "PASS"
        notes = []
        for category, report in reports:
            if category == "skipped":
                longrepr = report.longrepr
                reason = (
                    longrepr[2] if isinstance(longrepr, tuple) else str(longrepr)
                )
                notes.append(reason.removeprefix("Skipped: "))
        line = f"CRITERION {number} ({CRITERIA[number]}): {status}"
        if notes:
            line += " [" + "; ".join(notes) + "]"
        terminalreporter.write_line(line)
