"""A small synthetic navigation domain for experiments and tests.

Twelve intents and fifteen slots, with a pool of templates whose popularity
follows a Zipf law so that the head templates dominate and a long tail of
rare and unseen ones remains, as in real task-oriented data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .tree import Kind, Label, Mask, NonTerminal, Token, extract_template, fill_template, template_key

IN = lambda name: Label(Kind.INTENT, name)  # noqa: E731
SL = lambda name: Label(Kind.SLOT, name)  # noqa: E731

# intent -> (openers, slots it may take)
INTENTS: dict[str, tuple[list[str], list[str]]] = {
    "GET_DISTANCE": (["how far is it", "what is the distance", "how many miles is it", "distance"], ["DESTINATION", "SOURCE", "METHOD_TRAVEL", "PATH"]),
    "GET_ESTIMATED_DURATION": (["how long will it take", "how long is the drive", "what is the travel time", "how many minutes"], ["DESTINATION", "SOURCE", "METHOD_TRAVEL", "DATE_TIME_DEPARTURE", "PATH", "WAYPOINT"]),
    "GET_DIRECTIONS": (["directions", "show me the way", "navigate", "take me", "give me directions"], ["DESTINATION", "SOURCE", "METHOD_TRAVEL", "PATH", "WAYPOINT"]),
    "GET_INFO_TRAFFIC": (["how is the traffic", "is there traffic", "any traffic", "traffic update", "is it busy"], ["LOCATION", "PATH", "DATE_TIME", "DESTINATION"]),
    "GET_INFO_ROAD_CONDITION": (["are the roads", "how are the roads", "road conditions", "is the road"], ["ROAD_CONDITION", "LOCATION", "PATH", "DATE_TIME"]),
    "GET_LOCATION": (["the nearest", "a", "the closest", "any"], ["CATEGORY_LOCATION", "LOCATION", "POINT_ON_MAP", "CONTACT"]),
    "GET_EVENT": (["events", "what is happening", "the schedule of", "shows"], ["CATEGORY_EVENT", "NAME_EVENT", "LOCATION", "DATE_TIME"]),
    "GET_ESTIMATED_ARRIVAL": (["when will i arrive", "what time will i get", "eta", "when do i get"], ["DESTINATION", "SOURCE", "DATE_TIME_DEPARTURE", "METHOD_TRAVEL"]),
    "GET_ESTIMATED_DEPARTURE": (["when should i leave", "what time do i need to leave", "when to leave"], ["DESTINATION", "DATE_TIME_ARRIVAL", "SOURCE", "METHOD_TRAVEL"]),
    "UPDATE_DIRECTIONS": (["reroute me", "change my route", "update directions", "avoid"], ["PATH", "WAYPOINT", "DESTINATION", "ROAD_CONDITION"]),
    "GET_CONTACT": (["the house of", "the place of", "where does"], ["CONTACT", "LOCATION"]),
    "UNSUPPORTED_NAVIGATION": (["what is the speed limit", "is parking free", "how much is gas", "can i park"], []),
}

# slot -> (connective before it, filler phrases, intents it may nest)
SLOTS: dict[str, tuple[list[str], list[str], list[str]]] = {
    "DESTINATION": (["to", "to get to", "until"], ["work", "home", "boston", "the airport", "downtown", "chicago", "the mall", "school", "my office", "the beach"], ["GET_LOCATION", "GET_EVENT", "GET_CONTACT"]),
    "SOURCE": (["from", "starting at", "leaving from"], ["home", "work", "here", "boston", "the station", "my house"], ["GET_LOCATION", "GET_CONTACT"]),
    "DATE_TIME": (["for", "around", "during"], ["now", "today", "tonight", "this morning", "tomorrow", "at 5 pm", "this weekend", "right now"], []),
    "DATE_TIME_ARRIVAL": (["to arrive", "to be there", "to get there"], ["by 9 am", "at noon", "by 5 pm", "at 8", "before 6 pm", "tomorrow morning"], []),
    "DATE_TIME_DEPARTURE": (["if i leave", "leaving", "departing"], ["at 5 pm", "now", "at 8", "in an hour", "tomorrow morning", "at noon"], []),
    "METHOD_TRAVEL": (["by", "if i", "when"], ["car", "bus", "walk", "bike", "train", "drive", "driving"], []),
    "LOCATION": (["in", "on", "near", "around"], ["downtown", "boston", "the city", "main street", "the bay area", "here", "my area"], ["GET_LOCATION"]),
    "ROAD_CONDITION": (["for", "with", "because of"], ["icy", "snowy", "flooded", "closed", "wet", "construction", "accidents", "tolls"], []),
    "PATH": (["on", "via", "taking", "using"], ["i-90", "the highway", "route 1", "the interstate", "the bridge", "main street", "the tunnel"], []),
    "CATEGORY_EVENT": (["for", "with"], ["concerts", "games", "festivals", "parades", "shows", "fireworks"], []),
    "NAME_EVENT": (["for", "at", "like"], ["the marathon", "the super bowl", "jazz fest", "the parade", "comic con"], []),
    "CONTACT": (["of", "for"], ["mom", "john", "my sister", "dad", "sarah", "my boss"], []),
    "POINT_ON_MAP": (["at", "by"], ["central park", "city hall", "the pier", "union station", "the museum"], []),
    "CATEGORY_LOCATION": (["for", "kind of"], ["gas station", "restaurant", "hospital", "pharmacy", "coffee shop", "parking lot", "hotel"], []),
    "WAYPOINT": (["with a stop at", "stopping at", "through"], ["the bank", "starbucks", "the gas station", "the store", "school"], ["GET_LOCATION"]),
}

# closers never double as slot fillers, so every phrase has one consistent label
CLOSERS = ["please", "thanks", "asap", "quickly", "for me"]

N_INTENTS = len(INTENTS)
N_SLOTS = len(SLOTS)


@dataclass(frozen=True)
class ToyConfig:
    n_templates: int = 1000
    n_train: int = 2000
    n_test: int = 500
    # 0.9 over 1000 templates gives top-10 mass ~0.30 and ~14% singletons at 2000 items
    zipf_s: float = 0.9
    filler_zipf_s: float = 1.1
    nest_prob: float = 0.25
    max_depth: int = 2


def _phrase(text: str) -> tuple[str, ...]:
    return tuple(text.split())


def _make_template(rng: np.random.Generator, intent: str, depth: int, cfg: ToyConfig, nested: bool) -> NonTerminal:
    """Random skeleton for ``intent``: masks interleaved with 0-3 slots."""
    _, slots = INTENTS[intent]
    n_slots = 0 if not slots else int(rng.choice([0, 1, 1, 2, 2, 3])) if not nested else int(rng.choice([1, 1, 2]))
    chosen = list(rng.choice(slots, size=min(n_slots, len(slots)), replace=False)) if n_slots else []
    children: list = [Mask()]
    for slot in chosen:
        _, _, nestable = SLOTS[slot]
        if nestable and depth < cfg.max_depth and rng.random() < cfg.nest_prob:
            inner = _make_template(rng, str(rng.choice(nestable)), depth + 1, cfg, nested=True)
            content: tuple = (inner,)
        else:
            content = (Mask(),)
        if not isinstance(children[-1], Mask) and rng.random() < 0.7:
            children.append(Mask())
        children.append(NonTerminal(SL(slot), content))
    if chosen and rng.random() < 0.25:
        children.append(Mask())
    return NonTerminal(IN(intent), tuple(children))


def _fill(rng: np.random.Generator, template: NonTerminal, zipf_s: float) -> NonTerminal:
    spans: list[tuple[str, ...]] = []

    def pick(options: list[str]) -> str:
        w = 1.0 / np.arange(1, len(options) + 1) ** zipf_s
        return options[int(rng.choice(len(options), p=w / w.sum()))]

    def visit(node: NonTerminal) -> None:
        kids = node.children
        for i, child in enumerate(kids):
            if isinstance(child, NonTerminal):
                visit(child)
                continue
            name = node.label.name
            if node.label.kind is Kind.SLOT:
                spans.append(_phrase(pick(SLOTS[name][1])))
                continue
            words: list[str] = []
            if i == 0:
                words += _phrase(pick(INTENTS[name][0]))
            nxt = kids[i + 1] if i + 1 < len(kids) else None
            if isinstance(nxt, NonTerminal):
                words += _phrase(pick(SLOTS[nxt.label.name][0]))
            elif i > 0:
                words += _phrase(pick(CLOSERS))
            spans.append(tuple(words))

    visit(template)
    return fill_template(template, spans)


def template_pool(seed: int, cfg: ToyConfig = ToyConfig()) -> list[NonTerminal]:
    """Up to ``cfg.n_templates`` distinct templates in popularity order."""
    rng = np.random.default_rng([seed, 1])
    names = list(INTENTS)
    pool: dict[str, NonTerminal] = {}
    attempts = 0
    while len(pool) < cfg.n_templates and attempts < 50 * cfg.n_templates:
        attempts += 1
        t = _make_template(rng, str(rng.choice(names)), 0, cfg, nested=False)
        pool.setdefault(template_key(t), t)
    return list(pool.values())


def make_toy_corpora(seed: int = 0, cfg: ToyConfig = ToyConfig()) -> tuple[Corpus, Corpus]:
    """Train and test corpora drawn i.i.d. from a Zipf mixture over templates."""
    pool = template_pool(seed, cfg)
    rng = np.random.default_rng([seed, 2])
    weights = 1.0 / np.arange(1, len(pool) + 1) ** cfg.zipf_s
    picks = rng.choice(len(pool), size=cfg.n_train + cfg.n_test, p=weights / weights.sum())
    trees = [_fill(rng, pool[i], cfg.filler_zipf_s) for i in picks]
    return Corpus.from_trees(trees[: cfg.n_train], "train"), Corpus.from_trees(trees[cfg.n_train:], "test")


# -- random valid trees for property tests ----------------------------------

_WORDS = ["a", "b", "x", "5:00", "naïve", "in:foo", "sl", "über", "mask", "-", "'s", "42"]


def random_tree(rng: np.random.Generator, n_labels: int = 6, max_depth: int = 3, max_children: int = 4) -> NonTerminal:
    """A random well-formed annotation over labels ``L0..L{n-1}`` and a small word list."""

    def node(kind: Kind, depth: int) -> NonTerminal:
        label = Label(kind, f"L{int(rng.integers(n_labels))}")
        n = int(rng.integers(1, max_children + 1))
        children = []
        for _ in range(n):
            if depth < max_depth and rng.random() < 0.35:
                other = Kind.SLOT if kind is Kind.INTENT else Kind.INTENT
                children.append(node(other, depth + 1))
            else:
                children.append(Token(_WORDS[int(rng.integers(len(_WORDS)))]))
        return NonTerminal(label, tuple(children))

    return node(Kind.INTENT, 0)


def random_template(rng: np.random.Generator, **kw) -> NonTerminal:
    return extract_template(random_tree(rng, **kw))
