"""Auxiliary-parser filtering: keep a synthetic pair only if the parser
reproduces its tree from its words."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import BUCKETS, FrequencyTable, frequency_bucket
from .infill import SyntheticSample, Verdict
from .pcfg import ParserFn, exact_match
from .tree import NonTerminal


def parse_all(parser_fn: ParserFn, utterances: Sequence[Sequence[str]], jobs: int = 1) -> list[NonTerminal | None]:
    """Parse a batch, using the parser's own batching or a process pool when available."""
    batch = getattr(parser_fn, "parse_many", None)
    if batch is not None:
        return batch(utterances)
    if jobs > 1 and len(utterances) > 1:
        chunk = max(1, len(utterances) // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(parser_fn, utterances, chunksize=chunk))
    return [parser_fn(u) for u in utterances]


@dataclass
class FilterReport:
    total: int = 0
    kept: int = 0
    invalid: int = 0
    by_bucket: dict[str, list[int]] = field(default_factory=dict)  # bucket -> [kept, total]

    @property
    def keep_rate(self) -> float | None:
        return self.kept / self.total if self.total else None

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "kept": self.kept,
            "dropped": self.total - self.kept,
            "invalid": self.invalid,
            "keep_rate": self.keep_rate,
            "by_bucket": {b: {"kept": k, "total": t} for b, (k, t) in self.by_bucket.items()},
        }


def filter_synthetic(
    parser_fn: ParserFn,
    samples: Sequence[SyntheticSample],
    train_stats: FrequencyTable | None = None,
    jobs: int = 1,
) -> tuple[list[SyntheticSample], FilterReport]:
    """Mark each valid sample KEPT iff ``parser_fn(words)`` equals its tree exactly.

    Rejected (invalid) samples are passed through as DROPPED and counted
    separately.  Keep rates are broken down by the template's training
    frequency bucket when ``train_stats`` is given.
    """
    report = FilterReport()
    if train_stats is not None:
        report.by_bucket = {b.value: [0, 0] for b in BUCKETS}
    valid = [s for s in samples if s.valid]
    predictions = iter(parse_all(parser_fn, [s.utterance for s in valid], jobs))
    out: list[SyntheticSample] = []
    for sample in samples:
        if not sample.valid:
            report.invalid += 1
            out.append(sample.with_verdict(Verdict.DROPPED))
            continue
        keep = exact_match(next(predictions), sample.tree)
        out.append(sample.with_verdict(Verdict.KEPT if keep else Verdict.DROPPED))
        report.total += 1
        report.kept += keep
        if train_stats is not None:
            cell = report.by_bucket[frequency_bucket(train_stats, sample.template_key).value]
            cell[0] += keep
            cell[1] += 1
    return out, report


def soundness_violations(parser_fn: ParserFn, samples: Sequence[SyntheticSample]) -> list[SyntheticSample]:
    """Kept samples whose words no longer parse back to their tree."""
    kept = [s for s in samples if s.verdict is Verdict.KEPT]
    parsed = parse_all(parser_fn, [s.utterance for s in kept])
    return [s for s, tree in zip(kept, parsed) if not exact_match(tree, s.tree)]
