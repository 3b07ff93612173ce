"""Template-conditioned span infilling with nucleus (top-p) sampling.

The built-in generator is a count-based stand-in for a neural infiller: each
``[mask]`` is filled independently with a word span drawn from the empirical
distribution of spans seen at the same position in training trees, backing
off to coarser contexts when the exact one was never observed.
"""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Hashable, Iterable, Iterator, Mapping, Sequence, TypeVar

from .corpus import Corpus
from .rng import SplitMix64, derive_seed
from .tree import (
    Form,
    Label,
    Mode,
    NonTerminal,
    extract_template,
    fill_template,
    parse_linearized,
    serialize,
    template_key,
    terminal_runs,
    utterance_of,
)

K = TypeVar("K", bound=Hashable)
Span = tuple[str, ...]

# cumulative mass within this much of p counts as reaching p (float summation slack)
NUCLEUS_EPS = 1e-12
DEFAULT_K = 5
DEFAULT_P = 0.9


class EmptyCorpus(ValueError):
    pass


class DegenerateDistribution(ValueError):
    pass


@dataclass(frozen=True)
class MaskContext:
    path: tuple[Label, ...]
    slot_index: int

    @property
    def parent(self) -> Label:
        return self.path[-1]


class Backoff(enum.IntEnum):
    FULL = 0
    PARENT_SLOT = 1
    PARENT = 2
    GLOBAL = 3


def mask_contexts(template: NonTerminal) -> list[MaskContext]:
    """Contexts of the masks of ``template`` in pre-order."""
    return [ctx for ctx, _ in _runs_with_context(template)]


def mask_fillers(tree: NonTerminal) -> list[tuple[MaskContext, Span]]:
    """Pair each maximal word run of ``tree`` with the context of its mask."""
    return [(ctx, tuple(t.text for t in run)) for ctx, run in _runs_with_context(tree)]


def _runs_with_context(node: NonTerminal, path: tuple[Label, ...] = ()) -> Iterator[tuple[MaskContext, list]]:
    path = path + (node.label,)
    index = 0
    for group in terminal_runs(node):
        if isinstance(group[0], NonTerminal):
            yield from _runs_with_context(group[0], path)
        else:
            yield MaskContext(path, index), group
            index += 1


def _normalize(counts: Counter) -> dict:
    total = sum(counts.values())
    return {span: c / total for span, c in counts.items()}


@dataclass
class InfillerModel:
    full: dict[MaskContext, Counter] = field(default_factory=dict)
    parent_slot: dict[tuple[Label, int], Counter] = field(default_factory=dict)
    parent: dict[Label, Counter] = field(default_factory=dict)
    global_: Counter = field(default_factory=Counter)
    vocabulary: set[str] = field(default_factory=set)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def tables(self, level: Backoff) -> Mapping:
        return {
            Backoff.FULL: self.full,
            Backoff.PARENT_SLOT: self.parent_slot,
            Backoff.PARENT: self.parent,
        }[level]

    def lookup(self, ctx: MaskContext) -> tuple[Backoff, Counter]:
        """Most specific table with observations for ``ctx``."""
        for level, key in (
            (Backoff.FULL, ctx),
            (Backoff.PARENT_SLOT, (ctx.parent, ctx.slot_index)),
            (Backoff.PARENT, ctx.parent),
        ):
            counts = self.tables(level).get(key)
            if counts:
                return level, counts
        return Backoff.GLOBAL, self.global_

    def distribution(self, ctx: MaskContext) -> tuple[Backoff, dict[Span, float]]:
        level, counts = self.lookup(ctx)
        return level, _normalize(counts)

    def nucleus(self, ctx: MaskContext, p: float) -> tuple[Backoff, list[tuple[Span, float]]]:
        """Truncated distribution for ``ctx`` as an ordered list, cached per (table, p)."""
        level, counts = self.lookup(ctx)
        cache_key = (id(counts), p)
        hit = self._cache.get(cache_key)
        if hit is None:
            hit = list(top_p_truncate(_normalize(counts), p).items())
            self._cache[cache_key] = hit
        return level, hit


def fit_infiller(corpus: Corpus | Iterable[NonTerminal]) -> InfillerModel:
    """Tally every observed filler span under its full context and both backoffs."""
    trees = corpus.trees if isinstance(corpus, Corpus) else list(corpus)
    if not trees:
        raise EmptyCorpus("cannot fit an infiller on an empty corpus")
    model = InfillerModel()
    for tree in trees:
        for node in tree.walk():
            model.vocabulary.add(str(node.label))
        for ctx, span in mask_fillers(tree):
            model.vocabulary.update(span)
            model.full.setdefault(ctx, Counter())[span] += 1
            model.parent_slot.setdefault((ctx.parent, ctx.slot_index), Counter())[span] += 1
            model.parent.setdefault(ctx.parent, Counter())[span] += 1
            model.global_[span] += 1
    return model


def top_p_truncate(dist: Mapping[K, float], p: float) -> dict[K, float]:
    """Restrict ``dist`` to its nucleus and renormalize.

    Outcomes are ordered by descending probability, ties broken by ascending
    key.  The nucleus is the shortest prefix of that order whose cumulative
    mass reaches ``p``; the result preserves that order.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if not dist:
        raise DegenerateDistribution("empty support")
    total = math.fsum(dist.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {total}, not 1")
    ordered = sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))
    cum = 0.0
    cut = len(ordered)
    for i, (_, prob) in enumerate(ordered):
        cum += prob
        if cum >= p - NUCLEUS_EPS:
            cut = i + 1
            break
    nucleus = ordered[:cut]
    mass = math.fsum(prob for _, prob in nucleus)
    return {k: prob / mass for k, prob in nucleus}


def sample_from(ordered: Sequence[tuple[K, float]], rng: SplitMix64) -> K:
    u = rng.random()
    cum = 0.0
    for key, prob in ordered:
        cum += prob
        if u < cum:
            return key
    return ordered[-1][0]


# -- synthetic samples ------------------------------------------------------

class Verdict(str, enum.Enum):
    PENDING = "pending"
    KEPT = "kept"
    DROPPED = "dropped"


@dataclass(frozen=True)
class SyntheticSample:
    template_key: str
    tree: NonTerminal | None
    utterance: tuple[str, ...]
    generator_id: str
    seed: int
    candidate: str = ""
    rejected: str | None = None
    verdict: Verdict = Verdict.PENDING
    backoff: tuple[int, ...] = ()

    @property
    def valid(self) -> bool:
        return self.rejected is None

    def to_dict(self) -> dict:
        return {
            "template_key": self.template_key,
            "source": serialize(parse_linearized(self.template_key, Mode.TEMPLATE), Form.GENERATOR_SOURCE),
            "candidate": self.candidate,
            "tree": serialize(self.tree) if self.tree is not None else None,
            "utterance": list(self.utterance),
            "validity": "valid" if self.valid else "rejected",
            "reject_reason": self.rejected,
            "verdict": self.verdict.value,
            "generator": self.generator_id,
            "seed": self.seed,
            "backoff": list(self.backoff),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SyntheticSample":
        tree = parse_linearized(d["tree"]) if d.get("tree") else None
        return cls(
            template_key=d["template_key"],
            tree=tree,
            utterance=tuple(d.get("utterance") or (utterance_of(tree) if tree else ())),
            generator_id=d.get("generator", ""),
            seed=int(d.get("seed", 0)),
            candidate=d.get("candidate", ""),
            rejected=d.get("reject_reason"),
            verdict=Verdict(d.get("verdict", "pending")),
            backoff=tuple(d.get("backoff", ())),
        )

    def with_verdict(self, verdict: Verdict) -> "SyntheticSample":
        return replace(self, verdict=verdict)


def dedup_key(tree: NonTerminal) -> tuple[str, tuple[str, ...]]:
    return template_key(extract_template(tree)), tuple(utterance_of(tree))


def generate(
    model: InfillerModel,
    templates: Sequence[NonTerminal],
    k: int = DEFAULT_K,
    p: float = DEFAULT_P,
    seed: int = 0,
    exclude: Iterable[NonTerminal] = (),
    dedup: bool = True,
    draws: int | None = None,
) -> list[SyntheticSample]:
    """Fill every template ``k`` times.

    Each template gets its own SplitMix64 stream derived from ``(seed, key)``,
    so the result does not depend on how templates are ordered or split
    across workers.  With ``draws`` set, templates are instead drawn uniformly
    with replacement ``draws`` times and each draw yields one filling.
    Duplicate (template, utterance) pairs, and pairs present in ``exclude``,
    are dropped when ``dedup`` is on.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    unique: dict[str, NonTerminal] = {}
    for t in templates:
        unique.setdefault(template_key(t), t)
    keys = list(unique)
    if draws is None:
        per_template = {key: k for key in keys}
    else:
        picker = SplitMix64.for_key(seed, "<draws>")
        per_template = Counter(keys[picker.below(len(keys))] for _ in range(draws))
    seen = {dedup_key(t) for t in exclude} if dedup else set()
    out: list[SyntheticSample] = []
    for key in keys:
        n = per_template.get(key, 0)
        if not n:
            continue
        template = unique[key]
        contexts = mask_contexts(template)
        rng = SplitMix64(derive_seed(seed, key))
        for _ in range(n):
            spans, levels = [], []
            for ctx in contexts:
                level, nucleus = model.nucleus(ctx, p)
                spans.append(sample_from(nucleus, rng))
                levels.append(int(level))
            tree = fill_template(template, spans)
            words = tuple(utterance_of(tree))
            if dedup:
                if (key, words) in seen:
                    continue
                seen.add((key, words))
            out.append(
                SyntheticSample(
                    template_key=key,
                    tree=tree,
                    utterance=words,
                    generator_id="builtin",
                    seed=seed,
                    candidate=serialize(tree),
                    backoff=tuple(levels),
                )
            )
    return out


def backoff_histogram(samples: Iterable[SyntheticSample]) -> dict[str, int]:
    hist = Counter(Backoff(level).name.lower() for s in samples for level in s.backoff)
    return {level.name.lower(): hist.get(level.name.lower(), 0) for level in Backoff}


def dedup_samples(samples: Iterable[SyntheticSample], exclude: Iterable[NonTerminal] = ()) -> list[SyntheticSample]:
    """Drop valid samples repeating an earlier (template, utterance) pair or one in ``exclude``."""
    seen = {dedup_key(t) for t in exclude}
    out = []
    for s in samples:
        if s.valid:
            key = (s.template_key, s.utterance)
            if key in seen:
                continue
            seen.add(key)
        out.append(s)
    return out
