"""Dataset loading, template-frequency statistics and subsampling."""
from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rng import SplitMix64
from .tree import (
    NonTerminal,
    TreeSyntaxError,
    extract_template,
    parse_linearized,
    serialize,
    template_key,
    utterance_of,
)

log = logging.getLogger(__name__)

UNSUPPORTED_PREFIX = "UNSUPPORTED"


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotatedUtterance:
    raw: str
    tokens: tuple[str, ...]
    tree: NonTerminal
    template_key: str

    @classmethod
    def from_tree(cls, tree: NonTerminal, raw: str | None = None) -> "AnnotatedUtterance":
        tokens = tuple(utterance_of(tree))
        return cls(
            raw=" ".join(tokens) if raw is None else raw,
            tokens=tokens,
            tree=tree,
            template_key=template_key(extract_template(tree)),
        )

    @property
    def linearized(self) -> str:
        return serialize(self.tree)


@dataclass(frozen=True)
class LoadError:
    line: int
    message: str


@dataclass
class Corpus:
    split: str
    items: list[AnnotatedUtterance]
    errors: list[LoadError] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def trees(self) -> list[NonTerminal]:
        return [item.tree for item in self.items]

    @classmethod
    def from_trees(cls, trees: Iterable[NonTerminal], split: str = "train") -> "Corpus":
        return cls(split, [AnnotatedUtterance.from_tree(t) for t in trees])

    def templates(self) -> list[NonTerminal]:
        """Distinct templates, in order of first appearance."""
        seen: dict[str, NonTerminal] = {}
        for item in self.items:
            if item.template_key not in seen:
                seen[item.template_key] = extract_template(item.tree)
        return list(seen.values())


@dataclass(frozen=True)
class ColumnLayout:
    """Zero-based column indices; ``None`` when the column is absent."""

    tree: int = 2
    raw: int | None = 0
    tokens: int | None = 1

    @classmethod
    def trees_only(cls) -> "ColumnLayout":
        return cls(tree=0, raw=None, tokens=None)


TOP_LAYOUT = ColumnLayout()


def load_tsv(
    path: str | Path,
    layout: ColumnLayout | None = None,
    strict: bool = False,
    split: str = "train",
) -> Corpus:
    """Read a TSV of annotated utterances.

    With ``layout=None`` a line with a single column is read as a bare tree and
    anything else uses the TOP release layout (raw, tokenized, tree).  Bad lines
    abort the load when ``strict`` and are otherwise skipped and listed in
    ``Corpus.errors``.
    """
    path = Path(path)
    items: list[AnnotatedUtterance] = []
    errors: list[LoadError] = []
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            try:
                items.append(_parse_line(line, layout))
            except (TreeSyntaxError, CorpusError) as exc:
                if strict:
                    raise CorpusError(f"{path}:{lineno}: {exc}") from exc
                errors.append(LoadError(lineno, str(exc)))
    if errors:
        log.warning("%s: skipped %d malformed line(s)", path, len(errors))
    if not items:
        raise CorpusError(f"{path}: no valid items")
    return Corpus(split, items, errors)


def _parse_line(line: str, layout: ColumnLayout | None) -> AnnotatedUtterance:
    cols = line.split("\t")
    if layout is None:
        layout = ColumnLayout.trees_only() if len(cols) == 1 else TOP_LAYOUT
    needed = max(i for i in (layout.tree, layout.raw, layout.tokens) if i is not None)
    if len(cols) <= needed:
        raise CorpusError(f"expected at least {needed + 1} columns, got {len(cols)}")
    tree = parse_linearized(cols[layout.tree])
    item = AnnotatedUtterance.from_tree(tree, raw=cols[layout.raw] if layout.raw is not None else None)
    if layout.tokens is not None and tuple(cols[layout.tokens].split()) != item.tokens:
        raise CorpusError("tokenized column disagrees with the tree's words")
    return item


def write_tsv(corpus: Corpus | Iterable[AnnotatedUtterance], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        for item in corpus:
            fh.write(f"{item.raw}\t{' '.join(item.tokens)}\t{item.linearized}\n")


# -- statistics -------------------------------------------------------------

@dataclass
class FrequencyTable:
    counts: dict[str, int]

    @classmethod
    def from_keys(cls, keys: Iterable[str]) -> "FrequencyTable":
        return cls(dict(Counter(keys)))

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __getitem__(self, key: str) -> int:
        return self.counts.get(key, 0)

    def __len__(self) -> int:
        return len(self.counts)

    def ranked(self) -> list[tuple[str, int]]:
        """Templates by descending count; ties by key for a stable order."""
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def top_k_mass(self, k: int = 10) -> float:
        return sum(c for _, c in self.ranked()[:k]) / self.total

    def singleton_fraction(self) -> float:
        """Share of items whose template occurs exactly once."""
        return sum(1 for c in self.counts.values() if c == 1) / self.total

    def zipf_exponent(self, max_rank: int | None = None) -> float:
        """Negated slope of a least-squares line through log(rank), log(count)."""
        counts = np.array([c for _, c in self.ranked()[:max_rank]], dtype=float)
        if len(counts) < 2:
            return math.nan
        ranks = np.arange(1, len(counts) + 1, dtype=float)
        slope, _ = np.polyfit(np.log(ranks), np.log(counts), 1)
        return float(-slope)

    def report(self, top: int = 50) -> dict:
        return {
            "total": self.total,
            "distinct_templates": len(self),
            "top_10_mass": self.top_k_mass(10),
            "singleton_fraction": self.singleton_fraction(),
            "singleton_templates": sum(1 for c in self.counts.values() if c == 1),
            "zipf_exponent": self.zipf_exponent(),
            "top_templates": [{"template": k, "count": c} for k, c in self.ranked()[:top]],
            "rank_frequency": [[rank, c] for rank, (_, c) in enumerate(self.ranked(), 1)],
        }

    def to_json(self, top: int = 50) -> str:
        return json.dumps(self.report(top), indent=2)

    def rank_frequency_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rank", "count", "template"])
        for rank, (key, c) in enumerate(self.ranked(), 1):
            writer.writerow([rank, c, key])
        return buf.getvalue()


def template_stats(corpus: Corpus | Iterable[AnnotatedUtterance]) -> FrequencyTable:
    return FrequencyTable.from_keys(item.template_key for item in corpus)


def is_unsupported(item: AnnotatedUtterance) -> bool:
    return item.tree.label.name.startswith(UNSUPPORTED_PREFIX)


def filter_unsupported(corpus: Corpus) -> Corpus:
    return Corpus(corpus.split, [it for it in corpus.items if not is_unsupported(it)], list(corpus.errors))


def subsample_one_per_template(corpus: Corpus, seed: int, cap: int | None = None) -> Corpus:
    """Keep one uniformly chosen item per template.

    Each template draws from its own SplitMix64 stream keyed by the template,
    so the choice for one template does not depend on the others.  With
    ``cap`` set and more templates than ``cap``, a uniform subset of ``cap``
    templates is kept.  Output preserves the corpus order of first appearance.
    """
    groups: dict[str, list[AnnotatedUtterance]] = {}
    for item in corpus.items:
        groups.setdefault(item.template_key, []).append(item)
    chosen = [SplitMix64.for_key(seed, key).choice(members) for key, members in groups.items()]
    if cap is not None and len(chosen) > cap:
        keep = SplitMix64.for_key(seed, "<cap>").sample_indices(len(chosen), cap)
        chosen = [chosen[i] for i in keep]
    return Corpus(corpus.split, chosen)


# -- frequency buckets ------------------------------------------------------

class Bucket(enum.Enum):
    FREQUENT = "f>=5"
    RARE = "f<5"
    UNSEEN = "f=0"


BUCKETS: Sequence[Bucket] = (Bucket.FREQUENT, Bucket.RARE, Bucket.UNSEEN)


def frequency_bucket(train_stats: FrequencyTable, key: str) -> Bucket:
    f = train_stats[key]
    if f == 0:
        return Bucket.UNSEEN
    return Bucket.RARE if f < 5 else Bucket.FREQUENT
