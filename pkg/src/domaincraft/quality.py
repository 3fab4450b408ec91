"""Educational-value scoring on a 0-5 scale.

Two interchangeable scorers feed the corpus quality filter:

* :class:`HeuristicEducationalScorer` - a deterministic lexical rubric,
  cheap enough for web-scale streams. It is a stand-in for a learned
  quality model and is documented precisely below so filtering decisions
  are auditable.
* :class:`GatewayEducationalScorer` - asks a chat model to rate the text
  and parses the numeric reply.

Both return floats in [0, 5]; the filter retains strictly above 1.5.
"""

from __future__ import annotations

import re
from typing import Protocol

from .gateway import GenerationParams, ModelGateway


class QualityScoreError(Exception):
    """The scorer could not produce a score for a document."""


class QualityScorer(Protocol):
    def score(self, text: str) -> float: ...


# ---------------------------------------------------------------------------
# Heuristic rubric constants
# ---------------------------------------------------------------------------

STOPWORDS = frozenset(
    """a an the and or but if then than that this these those is are was were
    be been being am do does did have has had i you he she it we they them
    his her its their our your my me him us of to in on at by for with about
    against between into through during before after above below from up down
    out off over under again further there here when where why how all any
    both each few more most other some such no nor not only own same so too
    very can will just as what which who whom""".split()
)

# Phrases that signal explanatory, instructional writing.
CONNECTIVE_PHRASES = (
    "because", "therefore", "thus", "hence", "for example", "for instance",
    "in other words", "which means", "note that", "so that", "as a result",
    "in conclusion", "first", "second", "finally", "step", "consequently",
    "in summary", "to summarize", "this means",
)

# Phrases typical of navigation chrome, ads, and calls to action.
BOILERPLATE_MARKERS = (
    "click here", "buy now", "order now", "limited offer", "free shipping",
    "subscribe", "sign up", "log in", "login", "register", "privacy policy",
    "terms of use", "terms of service", "all rights reserved", "copyright",
    "sitemap", "home |", "| about", "add to cart", "read more", "next page",
    "previous page", "newsletter", "follow us", "visit www", "win big",
)

_SEGMENT_SPLIT = re.compile(r"[.!?\n|;]+")
_WEIGHTS = {"structure": 0.30, "stopword": 0.15, "explain": 0.35, "clean": 0.20}
_STOPWORD_BAND = (0.15, 0.55)
_SEGMENT_WORD_RANGE = (6, 40)
_MAX_SCORE = 5.0


def _phrase_pattern(phrase: str) -> re.Pattern[str]:
    # Word boundaries where the phrase starts/ends with a word character,
    # so "so that" does not fire inside "also that" etc.
    prefix = r"\b" if phrase[0].isalnum() else ""
    suffix = r"\b" if phrase[-1].isalnum() else ""
    return re.compile(prefix + re.escape(phrase) + suffix)

_CONNECTIVE_PATTERNS = tuple(_phrase_pattern(p) for p in CONNECTIVE_PHRASES)
_BOILERPLATE_PATTERNS = tuple(_phrase_pattern(p) for p in BOILERPLATE_MARKERS)


class HeuristicEducationalScorer:
    """Lexical educational-value rubric.

    The text is split into segments on sentence enders, newlines, pipes and
    semicolons. Four signals in [0, 1] are combined::

        structure  (w=0.30)  fraction of segments with 6-40 words
        stopword   (w=0.15)  1.0 inside the ratio band [0.15, 0.55],
                             falling off linearly at 4x the distance outside
        explain    (w=0.35)  explanatory-connective occurrences, capped at 3
                             (hits / 3)
        clean      (w=0.20)  1 - (distinct boilerplate markers / 2), floored
                             at 0

        score = 5 * (0.30*structure + 0.15*stopword + 0.35*explain + 0.20*clean)

    Connected prose with worked reasoning lands near 5; keyword spam and
    navigation chrome land well under 1, so the 1.5 retention gate has wide
    margins on both sides. Empty or whitespace-only text scores 0.
    """

    def score(self, text: str) -> float:
        words = text.lower().split()
        if not words:
            return 0.0
        lowered = text.lower()

        segments = [s for s in _SEGMENT_SPLIT.split(text) if s.strip()]
        lo, hi = _SEGMENT_WORD_RANGE
        well_formed = sum(1 for s in segments if lo <= len(s.split()) <= hi)
        s_structure = well_formed / len(segments) if segments else 0.0

        ratio = sum(1 for w in words if w.strip(".,;:!?()\"'") in STOPWORDS) / len(words)
        band_lo, band_hi = _STOPWORD_BAND
        if band_lo <= ratio <= band_hi:
            s_stopword = 1.0
        else:
            dist = band_lo - ratio if ratio < band_lo else ratio - band_hi
            s_stopword = max(0.0, 1.0 - 4.0 * dist)

        hits = sum(len(p.findall(lowered)) for p in _CONNECTIVE_PATTERNS)
        s_explain = min(1.0, hits / 3.0)

        distinct = sum(1 for p in _BOILERPLATE_PATTERNS if p.search(lowered))
        s_clean = max(0.0, 1.0 - distinct / 2.0)

        return _MAX_SCORE * (
            _WEIGHTS["structure"] * s_structure
            + _WEIGHTS["stopword"] * s_stopword
            + _WEIGHTS["explain"] * s_explain
            + _WEIGHTS["clean"] * s_clean
        )


EDU_PROMPT_TEMPLATE = """Rate the educational value of the following text on a scale from 0 to 5, \
where 0 means no instructional value (spam, navigation menus, advertising) and \
5 means textbook-quality explanatory writing. Reply with a single number.

Text:
{text}

Score:"""


class GatewayEducationalScorer:
    """Rates text via a chat model with a fixed rubric prompt."""

    def __init__(self, gateway: ModelGateway, params: GenerationParams | None = None):
        self.gateway = gateway
        self.params = params or GenerationParams(temperature=0.0, max_tokens=8)

    def score(self, text: str) -> float:
        reply = self.gateway.complete(EDU_PROMPT_TEMPLATE.format(text=text), self.params)
        match = re.search(r"-?\d+(?:\.\d+)?", reply)
        if match is None:
            raise QualityScoreError(f"no numeric score in judge reply: {reply!r}")
        return min(_MAX_SCORE, max(0.0, float(match.group())))


def make_scorer(name: str, gateway: ModelGateway | None = None) -> QualityScorer:
    if name == "heuristic":
        return HeuristicEducationalScorer()
    if name == "gateway":
        if gateway is None:
            raise ValueError("gateway scorer requires a configured gateway")
        return GatewayEducationalScorer(gateway)
    raise ValueError(f"unknown quality scorer {name!r}")
