import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topaug.corpus import Corpus, template_stats
from topaug.evaluation import (
    EvalReport,
    MismatchedTotals,
    SeedSummary,
    TooFewRuns,
    compare,
    evaluate,
    multi_seed_summary,
    render_seed_table,
    render_table,
)
from topaug.tree import parse_linearized

TRAIN = Corpus.from_trees(
    [parse_linearized(t) for t in ["[IN:A x ]"] * 5 + ["[IN:B y [SL:S z ] ]"] * 2]
)
TEST = Corpus.from_trees(
    [parse_linearized(t) for t in ["[IN:A p ]", "[IN:A q ]", "[IN:B r [SL:S s ] ]", "[IN:C t ]"]]
)
STATS = template_stats(TRAIN)


def memorizer(corpus):
    table = {item.tokens: item.tree for item in corpus}
    return lambda tokens: table.get(tuple(tokens))


def test_bounds():
    full = evaluate(memorizer(TEST), TEST, STATS)
    assert full.accuracy == 1.0
    assert all(full.bucket_accuracy(b) == 1.0 for b in full.buckets)
    none = evaluate(lambda t: None, TEST, STATS)
    assert none.accuracy == 0.0
    assert all(none.bucket_accuracy(b) == 0.0 for b in none.buckets)


def test_three_of_four():
    wrong = {("t",)}
    table = memorizer(TEST)
    rep = evaluate(lambda toks: None if tuple(toks) in wrong else table(toks), TEST, STATS)
    assert (rep.matched, rep.total, rep.accuracy) == (3, 4, 0.75)
    assert rep.buckets == {"f>=5": [2, 2], "f<5": [1, 1], "f=0": [0, 1]}


def test_compare():
    base = EvalReport(6, 10, {"f>=5": [4, 5], "f<5": [2, 4], "f=0": [0, 1]})
    aug = EvalReport(8, 10, {"f>=5": [5, 5], "f<5": [2, 4], "f=0": [1, 1]})
    d = compare(base, aug)
    assert d.overall == pytest.approx(20.0)
    assert d.buckets == {"f>=5": pytest.approx(20.0), "f<5": 0.0, "f=0": pytest.approx(100.0)}
    assert compare(base, base).overall == 0.0
    assert set(compare(base, base).buckets.values()) == {0.0}
    with pytest.raises(MismatchedTotals):
        compare(base, EvalReport(6, 11, {"f>=5": [4, 5], "f<5": [2, 5], "f=0": [0, 1]}))


def test_empty_bucket_delta_is_none():
    a = EvalReport(1, 1, {"f>=5": [1, 1], "f<5": [0, 0], "f=0": [0, 0]})
    assert compare(a, a).buckets["f<5"] is None


def test_seed_summary():
    s = multi_seed_summary([0.70, 0.74])
    assert s.mean == pytest.approx(0.72)
    assert s.sd == pytest.approx(0.0283, abs=5e-5)
    assert str(s) == "72.00 ± 2.83"
    assert multi_seed_summary([EvalReport(3, 4)] * 5).sd == 0.0
    d = s.to_dict()
    assert d["se"] == pytest.approx(s.sd / 2 ** 0.5) and d["variance"] == pytest.approx(s.sd ** 2)
    with pytest.raises(TooFewRuns):
        multi_seed_summary([0.5])


def test_tables_render():
    base = EvalReport(6, 10, {"f>=5": [4, 5], "f<5": [2, 4], "f=0": [0, 1]}, {"real": 28414}, "Real")
    aug = EvalReport(8, 10, {"f>=5": [5, 5], "f<5": [2, 4], "f=0": [1, 1]}, {"real": 28414, "synthetic_kept": 25265}, "+syn")
    text = render_table(base, [aug])
    assert "53,679" in text and "80.00 (+20.00)" in text and "50.00 (+0.00)" in text
    seed_text = render_seed_table([("Real", 6000, SeedSummary(0.7224, 0.0005, 5))])
    assert seed_text.splitlines()[1].split() == ["Real", "6,000", "72.24", "±", "0.05"]


def test_report_dict_roundtrip():
    rep = evaluate(memorizer(TEST), TEST, STATS, name="x")
    assert EvalReport.from_dict(rep.to_dict()) == rep


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_pure_fold_and_partition(seed):
    rng = random.Random(seed)
    items = list(TEST.items) * 3
    rng.shuffle(items)
    hits = {it.tokens for it in items if rng.random() < 0.5}
    table = memorizer(TEST)
    fn = lambda toks: table(toks) if tuple(toks) in hits else None  # noqa: E731
    rep = evaluate(fn, Corpus("test", items), STATS)
    rng.shuffle(items)
    assert evaluate(fn, Corpus("test", items), STATS) == rep
    assert sum(m for m, _ in rep.buckets.values()) == rep.matched
    assert sum(t for _, t in rep.buckets.values()) == rep.total
