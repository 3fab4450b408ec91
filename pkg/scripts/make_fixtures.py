#!/usr/bin/env python3
"""Regenerate the committed test fixtures under fixtures/.

Everything is seeded; rerunning this script reproduces the same bytes.

Layout:
    fixtures/separable/   two 500-doc corpora over disjoint 50-word
                          vocabularies (classifier accuracy oracle)
    fixtures/demo/        1k-doc pipeline corpus (300 in-domain ads,
                          700 general), problem pools, judge cases,
                          rewrite sets, scored predictions, a demo config,
                          and a static parse fixture (ads_example.txt)
"""

from __future__ import annotations

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

SEED = 20240817

# ---------------------------------------------------------------------------
# Disjoint vocabularies for the separable corpus
# ---------------------------------------------------------------------------

TRAVEL_WORDS = """tour luxury package hotel flight booking resort cruise
safari villa suite spa beach island getaway itinerary airfare concierge
upgrade deluxe premium bespoke charter excursion voucher discount promo deal
fare lodge retreat paradise sunset lagoon snorkel yacht guide expedition
passport visa departure arrival nonstop layover amenities oceanview penthouse
honeymoon allinclusive traveler""".split()

OTHER_WORDS = """recipe flour butter oven simmer saute garlic onion broth
season protein molecule electron photon gravity orbit neuron enzyme bacteria
fossil mineral glacier volcano sediment equation theorem integer fraction
algebra geometry compiler kernel debugger syntax database network firewall
server browser pixel canvas sculpture sonnet violin orchestra melody harvest
tractor meadow sparrow""".split()

assert len(TRAVEL_WORDS) == 50, len(TRAVEL_WORDS)
assert len(OTHER_WORDS) == 50, len(OTHER_WORDS)
assert not set(TRAVEL_WORDS) & set(OTHER_WORDS)


def write_jsonl(path: Path, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            handle.write("\n")
    print(f"wrote {path} ({len(records)} lines)")


def make_separable() -> None:
    rng = random.Random(SEED)
    for name, words, prefix in (
        ("in_domain", TRAVEL_WORDS, "pos"),
        ("general", OTHER_WORDS, "neg"),
    ):
        records = []
        for i in range(500):
            length = rng.randint(8, 20)
            text = " ".join(rng.choice(words) for _ in range(length))
            records.append({"id": f"{prefix}-{i:04d}", "text": text})
        write_jsonl(FIXTURES / "separable" / f"{name}.jsonl", records)


# ---------------------------------------------------------------------------
# Demo corpus
# ---------------------------------------------------------------------------

DESTINATIONS = [
    "Machu Picchu", "Kyoto", "Santorini", "Patagonia", "Zanzibar", "Reykjavik",
    "Marrakech", "Queenstown", "Tulum", "Lisbon", "Hanoi", "Cappadocia",
]
BRANDS = [
    "Inca Expert", "Summit Trails", "Blue Lagoon Travel", "Atlas Journeys",
    "Golden Compass", "Harbor & Peak",
]
ADJECTIVES = ["luxury", "boutique", "private", "premium", "bespoke", "deluxe"]

AD_TEMPLATES = [
    ("{brand} presents {adj} {dest} tour packages with private guides, "
     "handpicked hotels and seamless airport transfers. Our concierge team "
     "plans every excursion around your pace, so the itinerary always feels "
     "personal. Reserve a suite upgrade on select departures this season."),
    ("Discover {dest} with {brand}. Each {adj} package bundles nonstop "
     "flights, an oceanview resort stay and a dedicated local guide. Because "
     "group sizes stay small, every traveler gets unhurried attention at "
     "each stop on the route."),
    ("{adj} escapes to {dest}, crafted by {brand}. Expect spa mornings, "
     "sunset cruises and a guided expedition through the old quarter. "
     "Flexible fare classes and transparent pricing make the booking simple "
     "from start to finish."),
]

GUIDE_TEMPLATES = [
    ("Planning a trip to {dest} starts with the flight calendar. Because "
     "high season lifts airfare sharply, travelers who book early usually "
     "pay far less for the same cabin. For example, a package that bundles "
     "the hotel and the tour often beats booking each part separately. "
     "Therefore it pays to compare at least three itineraries before "
     "committing to a fare."),
    ("A good {dest} itinerary balances the famous sights with slower days. "
     "First, lock in the long excursion while energy is high. Note that "
     "many hotels release upgrade inventory midweek, which means a short "
     "schedule shift can buy a better suite for the same price. Finally, "
     "keep one morning free, because the best guides rebook quickly."),
    ("Travel insurance for a {dest} cruise is worth understanding before "
     "departure. The premium scales with the fare, so a modest cabin keeps "
     "the cost down. As a result, most itineraries under ten days are cheap "
     "to cover. In other words, read the policy first and the booking "
     "decisions become much easier."),
]

SPAM_TEMPLATES = [
    ("CHEAP {dest} FLIGHTS!!! Click here. Book now. Limited offer. Free "
     "shipping on travel kits. Best hotel deal. Promo promo promo. Win big. "
     "Subscribe today."),
    ("{dest} tour SALE!!! Buy now!!! Luxury cruise discount. Click here. "
     "Order now. Voucher voucher. Register free. Newsletter signup. "
     "Follow us."),
]

OFFTOPIC_TEMPLATES = [
    ("A reliable broth starts with roasted bones and a patient simmer. "
     "Because the collagen releases slowly, the first hour decides the "
     "body of the stock. For example, skimming early keeps the liquid "
     "clear, which means the final season lands cleaner on the palate."),
    ("The compiler lowers each function to an intermediate form before "
     "register allocation. Note that the debugger maps line numbers through "
     "this form, so optimized builds can step strangely. Therefore keep a "
     "debug profile in the build matrix for every release branch."),
    ("Glaciers carry sediment far from the source rock, and the deposits "
     "record the climate that moved them. Because each layer traps pollen, "
     "a single core reads like a calendar. As a result, the glacier margin "
     "is one of the best archives geology has."),
    ("An orchestra tunes to the oboe because its pitch carries cleanly "
     "through the hall. First the strings settle, then the winds match. "
     "This means the opening chord is a negotiated agreement, not a "
     "single instrument's decree."),
    ("The enzyme binds its substrate in a pocket that excludes water. "
     "Because the fit is tight, a single substitution near the site can "
     "slow the reaction a thousandfold, which means sequence and function "
     "must be read together."),
]


def make_demo_corpus() -> None:
    rng = random.Random(SEED + 1)
    in_domain = []
    for i in range(300):
        template = rng.choice(AD_TEMPLATES)
        text = template.format(
            brand=rng.choice(BRANDS),
            dest=rng.choice(DESTINATIONS),
            adj=rng.choice(ADJECTIVES),
        )
        in_domain.append({"id": f"ad-{i:04d}", "text": text})
    write_jsonl(FIXTURES / "demo" / "in_domain.jsonl", in_domain)

    general = []
    for i in range(170):
        text = rng.choice(GUIDE_TEMPLATES).format(dest=rng.choice(DESTINATIONS))
        general.append({"id": f"gen-guide-{i:04d}", "text": text})
    for i in range(30):
        text = rng.choice(SPAM_TEMPLATES).format(dest=rng.choice(DESTINATIONS))
        general.append({"id": f"gen-spam-{i:04d}", "text": text})
    for i in range(500):
        general.append({"id": f"gen-other-{i:04d}", "text": rng.choice(OFFTOPIC_TEMPLATES)})
    rng.shuffle(general)
    write_jsonl(FIXTURES / "demo" / "general.jsonl", general)


# ---------------------------------------------------------------------------
# Problem pools (entity-centered ad tasks)
# ---------------------------------------------------------------------------

TASKS = {
    "Query Rewriting": "Rewrite the user query '{query}' into a variant that "
                       "preserves its intent for ad matching.",
    "Ad Copy Generation": "Write a complete ad copy for a landing page about "
                          "{adj} {dest} tours by {brand}.",
    "Title Rewriting": "Rewrite the ad title for '{query}' so it highlights "
                       "the {adj} angle.",
    "Query-Ad Copy Relevance": "Judge whether the ad copy for {brand}'s "
                               "{dest} tours is relevant to the query "
                               "'{query}'.",
    "Query-Landing Page Relevance": "Judge whether a landing page about "
                                    "{adj} {dest} travel satisfies the query "
                                    "'{query}'.",
}


def make_problems() -> None:
    rng = random.Random(SEED + 2)
    records = []
    for task, template in TASKS.items():
        for _ in range(6):
            dest = rng.choice(DESTINATIONS)
            adj = rng.choice(ADJECTIVES)
            statement = template.format(
                query=f"{dest.lower()} tour packages {adj}",
                dest=dest,
                adj=adj,
                brand=rng.choice(BRANDS),
            )
            records.append({"task": task, "statement": statement})
    write_jsonl(FIXTURES / "demo" / "problems.jsonl", records)


# ---------------------------------------------------------------------------
# Judge cases: 12 where response_a is longer, 6 shorter, 2 equal length.
# ---------------------------------------------------------------------------

def make_judge_cases() -> None:
    rng = random.Random(SEED + 3)
    tasks = ["Query Rewriting", "Title Rewriting"]
    records = []

    def response(words: int) -> str:
        return " ".join(rng.choice(TRAVEL_WORDS) for _ in range(words))

    for i in range(20):
        if i < 12:
            a, b = response(30), response(12)
        elif i < 18:
            a, b = response(10), response(28)
        else:
            text = response(15)
            a, b = text, text
        records.append({
            "instruction": f"Rewrite the query 'trip {i}' keeping its intent.",
            "response_a": a,
            "response_b": b,
            "task": tasks[i % 2],
        })
    write_jsonl(FIXTURES / "demo" / "judge_cases.jsonl", records)


# ---------------------------------------------------------------------------
# Rewrite sets. The first set is the frozen clustering fixture whose greedy
# leader clustering at threshold 0.8 over character trigrams yields exactly
# 4 clusters (margins: min within-cluster cosine 0.86, max cross 0.05).
# ---------------------------------------------------------------------------

CLUSTER_FIXTURE = [
    "cheap flights to paris",
    "cheap flights to paris france",
    "hotel deals in rome italy",
    "cheap flights to paris",
    "hotel deals in rome italy today",
    "weather forecast for london",
    "hotel deals in rome italy",
    "weather forecast for london uk",
    "line dancing lessons near me",
    "cheap flights to paris france",
]


def make_rewrites() -> None:
    rng = random.Random(SEED + 4)
    records = [{
        "query": "paris travel search",
        "rewrites": CLUSTER_FIXTURE,
        "good_flags": [True, True, False, True, False, False, False, False,
                       False, True],
    }]
    for i in range(9):
        base = f"{rng.choice(DESTINATIONS).lower()} {rng.choice(ADJECTIVES)} tours"
        rewrites, flags = [], []
        for j in range(10):
            good = rng.random() < 0.6
            if good:
                rewrites.append(f"{base} option {j}")
            else:
                rewrites.append(f"unrelated {rng.choice(OTHER_WORDS)} query {j}")
            flags.append(good)
        records.append({"query": base, "rewrites": rewrites, "good_flags": flags})
    write_jsonl(FIXTURES / "demo" / "rewrites.jsonl", records)


def make_predictions() -> None:
    rng = random.Random(SEED + 5)
    records = []
    for i in range(100):
        score = round(min(1.0, max(0.0, rng.gauss(0.68, 0.15))), 2)
        records.append({"score": score, "label": 1})
    for i in range(100):
        score = round(min(1.0, max(0.0, rng.gauss(0.40, 0.15))), 2)
        records.append({"score": score, "label": 0})
    rng.shuffle(records)
    write_jsonl(FIXTURES / "demo" / "predictions.jsonl", records)


def make_demo_config() -> None:
    config = {
        "paths": {
            "in_domain": "fixtures/demo/in_domain.jsonl",
            "general": "fixtures/demo/general.jsonl",
            "problems": "fixtures/demo/problems.jsonl",
            "predictions": "fixtures/demo/predictions.jsonl",
            "judge_cases": "fixtures/demo/judge_cases.jsonl",
            "rewrites": "fixtures/demo/rewrites.jsonl",
            "output": "demo_output",
        },
        "classifier": {"bucket_count": 65536},
        "selection": {"mode": "token_budget", "budget_tokens": 6000},
        "synthesis": {"passage_count": 20, "problems_per_passage": 2},
        "mixture": {"schedule": {"total_steps": 1000}},
    }
    path = FIXTURES / "demo" / "config.json"
    path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# Static parse fixture: a known-good five-task passage reply.
# ---------------------------------------------------------------------------

ADS_EXAMPLE_TASKS = [
    ("Query Rewrites (QR)", "Rewrite the user query 'machu picchu tour packages luxury'."),
    ("Ad Copy Generation (AG)", "Create a complete ad copy from the landing page content."),
    ("Title Rewriting (TR)", "Refine the ad title to better suit the user's needs."),
    ("Query-Ad Copy Relevance (QAC)", "Examine the relevance of the user's query to the ad copy."),
    ("Query-Landing Page Relevance (QLP)", "Assess the relevance between the user's query and the landing page content."),
]

ADS_EXAMPLE_PARAGRAPHS = [
    """For the Query Rewrites (QR) task, the potential answers revolve around creating variations of the user query "machu picchu tour packages luxury." Possible rewrites could include "luxury Machu Picchu travel packages," "high-end Machu Picchu tours," and "premium tour packages to Machu Picchu." Each rewrite aims to capture the essence of the user's request while incorporating keywords that might improve the ad's visibility and relevance. The reasoning process involves ensuring that the rewrites maintain the focus on luxury and Machu Picchu, aligning with the user's intent and the ad's offer.""",
    """In the Ad Copy Generation (AG) task, the goal is to create a complete ad copy directly from the landing page content. This involves synthesizing the key elements of the landing page into a compelling ad. For example: "Discover High-End Machu Picchu Tours with Inca Expert. Since 1998, we've crafted bespoke travel experiences with the guidance of our award-winning specialists, including Emmy-winning filmmaker Kim MacQuarrie and World's Top Chef Virgilio Martinez. Experience Peru with private guides and boutique services. Visit us at https://www.incaexpert.com." The reasoning here includes selecting the most impressive and relevant details from the landing page to attract potential customers while maintaining a concise and engaging format.""",
    """For the Title Rewriting (TR) task, the focus is on refining the ad title to better suit the user's needs. Given the user's query, a more targeted title could be "Luxury Machu Picchu Tours by Peru Experts" or "Top-Rated High-End Machu Picchu Travel." The aim is to enhance engagement by clearly communicating the luxury aspect and the expertise of the travel firm, making it more appealing and relevant to the user's search.""",
    """In the Query-Ad Copy Relevance (QAC) task, the relevance of the user's query to the ad copy must be examined. The user query "machu picchu tour packages luxury" directly aligns with the ad copy, which promotes "High-End Machu Picchu Tours" and highlights boutique service and private guided tours. The ad copy effectively addresses the user's desire for a luxury travel experience, ensuring high relevance. The reasoning involves matching keywords and themes from the query with those in the ad copy to ensure they resonate well.""",
    """The Query-Landing Page Relevance (QLP) task assesses the relevance between the user's query and the advertisement's landing page content. The landing page details Inca Expert's specialization in boutique, high-end travel to Peru, featuring notable specialists and personalized services, which strongly align with the user's search for luxury Machu Picchu tour packages. The primary content supports the luxury and personalized experience sought by the user. The reasoning here involves confirming that the landing page provides substantial and relevant information that fulfills the user's query.""",
    """In conclusion, the key points across the tasks highlight the importance of aligning ad copy and titles with the user's intent for luxury travel, ensuring high relevance and engagement. Each task focuses on different aspects: Query Rewrites (QR) focusing on synonyms to luxury; Ad Copy Generation (AG) synthesizes key landing page information like personalized services provided by award-winning specialists in flim-making and cooking, into compelling ads; and Title Rewriting (TR) enhances engagement by clearly communicating the luxury aspect and the expertise of the travel firm. Query-Ad Copy Relevance (QAC) and Query-Landing Page Relevance (QLP) ensure consistency and alignment between user expectations, ad content, and landing page details for the high-quality travel experiences provided. These tasks collectively improve the user's experience by ensuring coherence and relevance across all touchpoints, ultimately driving engagement and satisfaction.""",
]


def make_ads_example() -> None:
    body = "\n\n".join(ADS_EXAMPLE_PARAGRAPHS)
    text = f"<Passage>\n{body}\n</Passage>\n"
    path = FIXTURES / "demo" / "ads_example.txt"
    path.write_text(text, encoding="utf-8")
    tasks_path = FIXTURES / "demo" / "ads_example_tasks.json"
    tasks_path.write_text(
        json.dumps(
            [{"task": t, "statement": s} for t, s in ADS_EXAMPLE_TASKS],
            indent=2,
        ) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {path}")
    print(f"wrote {tasks_path}")


def main() -> None:
    make_separable()
    make_demo_corpus()
    make_problems()
    make_judge_cases()
    make_rewrites()
    make_predictions()
    make_demo_config()
    make_ads_example()


if __name__ == "__main__":
    main()
