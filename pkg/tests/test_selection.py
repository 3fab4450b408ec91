"""Selection policies, streaming equivalence to oracles, quality filtering."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domaincraft.classifier import DomainNgramClassifier
from domaincraft.selection import (
    DEFAULT_QUALITY_THRESHOLD,
    ScoredDocument,
    SelectionError,
    SelectionPolicy,
    quality_filter,
    score_documents,
    score_stream,
    select,
)
from tests.conftest import make_doc


def scored(doc_id: str, score: float, tokens: int = 10) -> ScoredDocument:
    return ScoredDocument(make_doc(doc_id, "w " * tokens), score)


def ranked_oracle(items):
    """Full in-memory ranking: score descending, id ascending on ties."""
    return sorted(items, key=lambda s: (-s.domain_score, s.id))


def token_budget_oracle(items, budget):
    """Greedy prefix of the full sort, stopping at the first violator."""
    out, total = [], 0
    for item in ranked_oracle(items):
        if total + item.token_count > budget:
            break
        out.append(item)
        total += item.token_count
    return out


def random_corpus(rng, n):
    # Scores drawn from a coarse grid so ties across distinct ids are common.
    return [
        scored(f"d{i:04d}", rng.choice([0.1, 0.3, 0.5, 0.7, 0.9]), rng.randint(1, 20))
        for i in rng.sample(range(n * 10), n)
    ]


class TestPolicyValidation:
    def test_exactly_one_field_per_mode(self):
        SelectionPolicy(mode="token_budget", budget_tokens=10)
        SelectionPolicy(mode="top_k_docs", k=3)
        SelectionPolicy(mode="score_threshold", min_score=0.5)
        with pytest.raises(SelectionError):
            SelectionPolicy(mode="token_budget")
        with pytest.raises(SelectionError):
            SelectionPolicy(mode="token_budget", budget_tokens=10, k=5)
        with pytest.raises(SelectionError):
            SelectionPolicy(mode="top_k_docs", min_score=0.1)

    def test_positivity_and_range(self):
        with pytest.raises(SelectionError):
            SelectionPolicy(mode="token_budget", budget_tokens=0)
        with pytest.raises(SelectionError):
            SelectionPolicy(mode="top_k_docs", k=-1)
        with pytest.raises(SelectionError):
            SelectionPolicy(mode="score_threshold", min_score=1.5)

    def test_unknown_mode(self):
        with pytest.raises(SelectionError):
            SelectionPolicy(mode="best_effort", k=1)


class TestTokenBudget:
    def test_greedy_prefix_definition(self):
        items = [scored("a", 0.9), scored("b", 0.8), scored("c", 0.7)]
        policy = SelectionPolicy(mode="token_budget", budget_tokens=25)
        result = select(items, policy)
        assert [s.id for s in result] == ["a", "b"]

    def test_budget_smaller_than_smallest_doc_is_empty(self):
        items = [scored("a", 0.9, tokens=10)]
        policy = SelectionPolicy(mode="token_budget", budget_tokens=5)
        assert select(items, policy) == []

    def test_tie_break_is_id_ascending(self):
        items = [scored("b", 0.5), scored("a", 0.5), scored("c", 0.5)]
        policy = SelectionPolicy(mode="token_budget", budget_tokens=20)
        assert [s.id for s in select(items, policy)] == ["a", "b"]

    def test_matches_full_sort_oracle_on_random_corpora(self):
        rng = random.Random(2024)
        for trial in range(100):
            corpus = random_corpus(rng, rng.randint(1, 120))
            budget = rng.randint(1, 400)
            expected = token_budget_oracle(corpus, budget)
            got = select(iter(corpus), SelectionPolicy(mode="token_budget", budget_tokens=budget))
            assert [s.id for s in got] == [s.id for s in expected], f"trial {trial}"

    def test_input_permutation_invariance(self):
        rng = random.Random(5)
        corpus = random_corpus(rng, 60)
        policy = SelectionPolicy(mode="token_budget", budget_tokens=150)
        baseline = [s.id for s in select(list(corpus), policy)]
        for _ in range(5):
            shuffled = list(corpus)
            rng.shuffle(shuffled)
            assert [s.id for s in select(shuffled, policy)] == baseline

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_never_exceeds_budget(self, data):
        n = data.draw(st.integers(0, 50))
        corpus = [
            scored(
                f"d{i:03d}",
                data.draw(st.sampled_from([0.2, 0.4, 0.6, 0.8])),
                data.draw(st.integers(1, 30)),
            )
            for i in range(n)
        ]
        budget = data.draw(st.integers(1, 300))
        result = select(corpus, SelectionPolicy(mode="token_budget", budget_tokens=budget))
        assert sum(s.token_count for s in result) <= budget


class TestTopK:
    def test_simple_case(self):
        items = [scored("a", 0.9), scored("b", 0.5), scored("c", 0.8)]
        result = select(items, SelectionPolicy(mode="top_k_docs", k=2))
        assert [s.id for s in result] == ["a", "c"]

    def test_k_larger_than_corpus_returns_all_ranked(self):
        items = [scored("b", 0.5), scored("a", 0.9)]
        result = select(items, SelectionPolicy(mode="top_k_docs", k=10))
        assert [s.id for s in result] == ["a", "b"]

    def test_matches_full_sort_oracle(self):
        rng = random.Random(99)
        for _ in range(50):
            corpus = random_corpus(rng, rng.randint(1, 200))
            k = rng.randint(1, 150)
            expected = ranked_oracle(corpus)[:k]
            got = select(iter(corpus), SelectionPolicy(mode="top_k_docs", k=k))
            assert [s.id for s in got] == [s.id for s in expected]


class TestThreshold:
    def test_preserves_input_order_and_admits_at_boundary(self):
        items = [scored("c", 0.5), scored("a", 0.9), scored("b", 0.2)]
        result = select(items, SelectionPolicy(mode="score_threshold", min_score=0.5))
        assert [s.id for s in result] == ["c", "a"]  # >= min_score, input order


class TestScoreStream:
    def test_empty_stream(self, separable_model):
        assert list(score_stream(separable_model, [])) == []

    def test_composition_identity(self, separable_model, separable_docs):
        positives, _ = separable_docs
        doc = positives[0]
        (item,) = list(score_stream(separable_model, [doc]))
        assert item.domain_score == separable_model.score_text(doc.text)
        assert item.document is doc

    def test_order_preserving_one_to_one_in_range(self, separable_model, separable_docs):
        positives, negatives = separable_docs
        docs = positives[:50] + negatives[:50]
        items = list(score_stream(separable_model, iter(docs)))
        assert [s.id for s in items] == [d.id for d in docs]
        assert all(0.0 <= s.domain_score <= 1.0 for s in items)


class TestParallelScoring:
    def test_two_workers_match_serial(self, tmp_path, separable_docs):
        positives, negatives = separable_docs
        texts = [d.text for d in positives[:100]] + [d.text for d in negatives[:100]]
        model = DomainNgramClassifier(dim=16, bucket_count=512).fit(
            texts, [1] * 100 + [0] * 100
        )
        model_path = tmp_path / "model.traitft"
        model.save(model_path)
        docs = (positives + negatives)[:600]
        serial = score_documents(model, docs, n_workers=1)
        parallel = score_documents(
            model, docs, n_workers=2, model_path=str(model_path), chunk_size=128
        )
        assert [s.id for s in parallel] == [s.id for s in serial]
        assert [s.domain_score for s in parallel] == [s.domain_score for s in serial]

    def test_parallel_requires_model_path(self, separable_model, separable_docs):
        positives, _ = separable_docs
        with pytest.raises(SelectionError, match="model_path"):
            score_documents(separable_model, positives, n_workers=2, chunk_size=10)


class TestQualityFilter:
    def test_constant_above_threshold_retains_everything(self):
        items = [scored(f"d{i}", 0.5) for i in range(5)]
        result = quality_filter(items, lambda text: 2.0, threshold=1.5)
        assert len(result.retained) == 5
        assert result.dropped_count == 0
        assert all(item.quality_score == 2.0 for item in items)

    def test_boundary_is_strict(self):
        items = [scored(f"d{i}", 0.5) for i in range(5)]
        result = quality_filter(items, lambda text: 1.5, threshold=1.5)
        assert result.retained == []
        assert result.dropped_count == 5

    def test_default_threshold_value(self):
        assert DEFAULT_QUALITY_THRESHOLD == 1.5

    def test_scorer_failure_drops_and_counts(self):
        items = [scored("good", 0.5), scored("bad", 0.5), scored("fine", 0.5)]
        calls = []

        def flaky(text):
            calls.append(text)
            if len(calls) == 2:
                raise RuntimeError("scorer exploded")
            return 3.0

        result = quality_filter(items, flaky, threshold=1.5)
        assert [s.id for s in result.retained] == ["good", "fine"]
        assert result.error_count == 1
        assert result.dropped_count == 1
        assert items[1].quality_score is None
        assert len(calls) == 3  # the run continued past the failure

    def test_token_accounting(self):
        items = [scored("a", 0.5, tokens=7), scored("b", 0.5, tokens=11)]
        result = quality_filter(items, lambda t: 2.0)
        assert result.retained_tokens == 18
        assert result.dropped_tokens == 0
        result = quality_filter(items, lambda t: 0.0)
        assert result.dropped_tokens == 18
        assert result.retained_tokens == 0

    def test_idempotent(self):
        rng = random.Random(1)
        items = [
            ScoredDocument(make_doc(f"d{i}", f"text number {i}"), 0.5)
            for i in range(40)
        ]
        fixed = {item.document.text: rng.uniform(0, 5) for item in items}
        scorer = lambda text: fixed[text]

        first = quality_filter(items, scorer, threshold=1.5)
        assert 0 < len(first.retained) < 40  # both branches exercised
        second = quality_filter(first.retained, scorer, threshold=1.5)
        assert second.retained == first.retained
        assert second.dropped_count == 0

    def test_results_report_shape(self):
        items = [scored("a", 0.9)]
        result = quality_filter(items, lambda t: 4.0)
        as_dict = result.to_dict()
        assert as_dict["retained"] == 1
        assert as_dict["scored"] == 1
        assert as_dict["errors"] == 0


class TestScoredDocument:
    def test_properties_delegate(self):
        item = scored("doc-1", 0.4, tokens=6)
        assert item.id == "doc-1"
        assert item.token_count == 6
        assert item.quality_score is None

    def test_score_range_validation(self):
        with pytest.raises(SelectionError):
            ScoredDocument(make_doc("d", "x"), 1.2)
        with pytest.raises(SelectionError):
            ScoredDocument(make_doc("d", "x"), -0.1)
