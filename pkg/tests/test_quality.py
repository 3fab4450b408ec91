"""Educational-value scorers: heuristic rubric and gateway-backed rating."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domaincraft.gateway import MockChatGateway
from domaincraft.quality import (
    EDU_PROMPT_TEMPLATE,
    GatewayEducationalScorer,
    HeuristicEducationalScorer,
    QualityScoreError,
    make_scorer,
)
from domaincraft.selection import ScoredDocument, quality_filter
from tests.conftest import make_doc

WORKED_EXAMPLE = (
    "To solve the equation 2x + 6 = 14, first subtract 6 from both sides, "
    "because both sides must stay balanced. This means 2x = 8. Finally, "
    "divide both sides by 2, so that x = 4. Note that checking the answer "
    "means substituting it back into the original equation."
)

PRODUCT_SPAM = (
    "Cheap watches sale! Best prices! Buy now! Free shipping on orders! "
    "Rolex replica watches discount watches luxury watches! Click here! "
    "Order now! Limited offer!"
)

NAVIGATION_PAGE = (
    "Home | About | Products | Contact | Sitemap. Sign up for our newsletter. "
    "Privacy policy. Terms of use. All rights reserved. Copyright 2024."
)


class TestHeuristicScorer:
    @pytest.fixture()
    def scorer(self):
        return HeuristicEducationalScorer()

    def test_exact_full_credit_case(self, scorer):
        # Hand-derived: 2 segments of 11/15 words (structure 1.0), stopword
        # ratio 11/26 inside the band (1.0), connectives "because" +
        # "for example" + "as a result" = 3 hits (1.0), no boilerplate (1.0):
        # 5 * (0.30 + 0.15 + 0.35 + 0.20) = 5.0.
        text = (
            "Water expands when it freezes because ice crystals need more room. "
            "For example, a full bottle cracks in the freezer as a result of "
            "that expansion."
        )
        assert scorer.score(text) == pytest.approx(5.0, rel=1e-12)

    def test_exact_boilerplate_case(self, scorer):
        # Hand-derived: both segments under 6 words (structure 0), stopword
        # ratio 2/7 in band (1.0), no connectives (0), three distinct
        # boilerplate markers zero the clean signal: 5 * 0.15 = 0.75.
        assert scorer.score("Buy now and click here; win big deals") == pytest.approx(
            0.75, rel=1e-12
        )

    def test_exact_keyword_stuffing_case(self, scorer):
        # Hand-derived: 5-word segment (structure 0), stopword ratio 0 gives
        # 1 - 4*0.15 = 0.4, no connectives, clean 1.0:
        # 5 * (0.15*0.4 + 0.20) = 1.3.
        assert scorer.score("machu picchu tour packages luxury") == pytest.approx(
            1.3, rel=1e-12
        )

    def test_empty_text_scores_zero(self, scorer):
        assert scorer.score("") == 0.0
        assert scorer.score("   \n  ") == 0.0

    def test_worked_example_clears_filter_spam_does_not(self, scorer):
        assert scorer.score(WORKED_EXAMPLE) > 3.0
        assert scorer.score(PRODUCT_SPAM) < 1.0
        assert scorer.score(NAVIGATION_PAGE) < 1.0

    def test_three_fixture_filter_outcome(self, scorer):
        items = [
            ScoredDocument(make_doc("worked", WORKED_EXAMPLE), 0.9),
            ScoredDocument(make_doc("spam", PRODUCT_SPAM), 0.9),
            ScoredDocument(make_doc("nav", NAVIGATION_PAGE), 0.9),
        ]
        result = quality_filter(items, scorer.score, threshold=1.5)
        assert [s.id for s in result.retained] == ["worked"]
        assert result.dropped_count == 2

    def test_deterministic(self, scorer):
        assert scorer.score(WORKED_EXAMPLE) == scorer.score(WORKED_EXAMPLE)

    @given(st.text(max_size=300))
    @settings(max_examples=150)
    def test_range_property(self, text):
        score = HeuristicEducationalScorer().score(text)
        assert 0.0 <= score <= 5.0

    def test_connective_word_boundaries(self, scorer):
        # "also that" must not fire the "so that" connective.
        without = scorer.score("He also that day went for a walk in the town park")
        with_hit = scorer.score("He slept early so that he could walk in the town park")
        assert with_hit > without


class _ScriptedGateway:
    def __init__(self, reply):
        self.reply = reply
        self.prompts = []

    def complete(self, prompt, params=None):
        self.prompts.append(prompt)
        return self.reply


class TestGatewayScorer:
    @pytest.mark.parametrize(
        "reply,expected",
        [
            ("3.5", 3.5),
            ("Score: 4", 4.0),
            ("I would rate this 2.25 overall", 2.25),
            ("7", 5.0),  # clamped to the scale
            ("-2", 0.0),
        ],
    )
    def test_parses_and_clamps(self, reply, expected):
        gateway = _ScriptedGateway(reply)
        assert GatewayEducationalScorer(gateway).score("some text") == expected

    def test_prompt_embeds_text_and_rubric(self):
        gateway = _ScriptedGateway("3")
        GatewayEducationalScorer(gateway).score("THE DOCUMENT BODY")
        (prompt,) = gateway.prompts
        assert prompt == EDU_PROMPT_TEMPLATE.format(text="THE DOCUMENT BODY")
        assert "educational value" in prompt

    def test_unparsable_reply_raises(self):
        gateway = _ScriptedGateway("no verdict here")
        with pytest.raises(QualityScoreError, match="no numeric score"):
            GatewayEducationalScorer(gateway).score("text")

    def test_mock_gateway_integration_is_deterministic_in_range(self):
        scorer = GatewayEducationalScorer(MockChatGateway(seed=4))
        first = scorer.score("an informative explanation of tides")
        second = scorer.score("an informative explanation of tides")
        assert first == second
        assert 0.0 <= first <= 5.0


class TestMakeScorer:
    def test_heuristic(self):
        assert isinstance(make_scorer("heuristic"), HeuristicEducationalScorer)

    def test_gateway_requires_gateway(self):
        with pytest.raises(ValueError):
            make_scorer("gateway")
        scorer = make_scorer("gateway", MockChatGateway())
        assert isinstance(scorer, GatewayEducationalScorer)

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            make_scorer("mystery")
