"""Exact-match evaluation, frequency-bucket breakdowns and multi-seed summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import BUCKETS, Corpus, FrequencyTable, frequency_bucket
from .filtering import parse_all
from .pcfg import ParserFn, exact_match


class MismatchedTotals(ValueError):
    pass


class TooFewRuns(ValueError):
    pass


def _pct(x: float | None) -> str:
    return "-" if x is None else f"{100 * x:.2f}"


@dataclass
class EvalReport:
    matched: int = 0
    total: int = 0
    buckets: dict[str, list[int]] = field(default_factory=lambda: {b.value: [0, 0] for b in BUCKETS})
    counts: dict[str, int] = field(default_factory=dict)
    name: str = ""

    @property
    def accuracy(self) -> float:
        return self.matched / self.total if self.total else 0.0

    def bucket_accuracy(self, bucket: str) -> float | None:
        m, t = self.buckets[bucket]
        return m / t if t else None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "matched": self.matched,
            "total": self.total,
            "accuracy": self.accuracy,
            "buckets": {
                b: {"matched": m, "total": t, "accuracy": m / t if t else None}
                for b, (m, t) in self.buckets.items()
            },
            "counts": dict(self.counts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            matched=d["matched"],
            total=d["total"],
            buckets={b: [v["matched"], v["total"]] for b, v in d["buckets"].items()},
            counts=dict(d.get("counts", {})),
            name=d.get("name", ""),
        )


def evaluate(
    parser_fn: ParserFn,
    test_corpus: Corpus,
    train_stats: FrequencyTable,
    jobs: int = 1,
    name: str = "",
) -> EvalReport:
    """Exact-match accuracy overall and per training-frequency bucket.

    Items the parser cannot parse count as misses.
    """
    report = EvalReport(name=name)
    predictions = parse_all(parser_fn, [item.tokens for item in test_corpus], jobs)
    for item, predicted in zip(test_corpus, predictions):
        hit = exact_match(predicted, item.tree)
        cell = report.buckets[frequency_bucket(train_stats, item.template_key).value]
        cell[0] += hit
        cell[1] += 1
        report.matched += hit
        report.total += 1
    return report


@dataclass
class Delta:
    overall: float
    buckets: dict[str, float | None]

    def to_dict(self) -> dict:
        return {"overall_pp": self.overall, "buckets_pp": dict(self.buckets)}


def compare(baseline: EvalReport, augmented: EvalReport) -> Delta:
    """Signed accuracy differences in percentage points (augmented minus baseline)."""
    if baseline.total != augmented.total or any(
        baseline.buckets[b][1] != augmented.buckets[b][1] for b in baseline.buckets
    ):
        raise MismatchedTotals("reports were computed on different test sets")
    buckets = {}
    for b in baseline.buckets:
        x, y = baseline.bucket_accuracy(b), augmented.bucket_accuracy(b)
        buckets[b] = None if x is None else 100 * (y - x)
    return Delta(100 * (augmented.accuracy - baseline.accuracy), buckets)


@dataclass
class SeedSummary:
    mean: float
    sd: float
    n: int

    @property
    def se(self) -> float:
        return self.sd / math.sqrt(self.n)

    @property
    def variance(self) -> float:
        return self.sd ** 2

    def __str__(self) -> str:
        return f"{100 * self.mean:.2f} ± {100 * self.sd:.2f}"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "sd": self.sd,
            "se": self.se,
            "variance": self.variance,
            "spread": "sample standard deviation (ddof=1)",
            "formatted": str(self),
        }


def multi_seed_summary(reports: Iterable[EvalReport | float]) -> SeedSummary:
    accs = np.array([r.accuracy if isinstance(r, EvalReport) else float(r) for r in reports])
    if len(accs) < 2:
        raise TooFewRuns("need at least two runs")
    return SeedSummary(float(accs.mean()), float(accs.std(ddof=1)), len(accs))


def render_table(baseline: EvalReport, others: Sequence[EvalReport] = ()) -> str:
    """Plain-text results table: accuracy and per-bucket columns, deltas in parentheses."""
    head = ["Data", "#Samples", "Acc (%)"] + [b.value for b in BUCKETS]
    rows = []
    for rep in [baseline, *others]:
        n = rep.counts.get("real", 0) + rep.counts.get("synthetic_kept", 0)
        acc = _pct(rep.accuracy)
        cols = [_pct(rep.bucket_accuracy(b.value)) for b in BUCKETS]
        if rep is not baseline:
            d = compare(baseline, rep)
            acc += f" ({d.overall:+.2f})"
            cols = [c if d.buckets[b.value] is None else f"{c} ({d.buckets[b.value]:+.2f})" for c, b in zip(cols, BUCKETS)]
        rows.append([rep.name or "-", f"{n:,}", acc, *cols])
    widths = [max(len(r[i]) for r in [head, *rows]) for i in range(len(head))]
    fmt = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
    lines = [fmt(head), "  ".join("-" * w for w in widths), *map(fmt, rows)]
    return "\n".join(lines) + "\n"


def render_seed_table(rows: Sequence[tuple[str, float, SeedSummary]]) -> str:
    """Low-resource table: ``(name, mean #samples, summary)`` per row."""
    lines = [f"{'Training data':<14}{'#Samples':>10}  Acc (%)"]
    for name, n, summary in rows:
        lines.append(f"{name:<14}{n:>10,.0f}  {summary}")
    return "\n".join(lines) + "\n"
