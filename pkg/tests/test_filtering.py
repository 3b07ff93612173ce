import pytest

from topaug.corpus import Corpus, template_stats
from topaug.filtering import FilterReport, filter_synthetic, parse_all, soundness_violations
from topaug.infill import SyntheticSample, Verdict, fit_infiller, generate
from topaug.pcfg import induce_grammar
from topaug.tree import extract_template, parse_linearized, template_key, utterance_of


def sample(text):
    t = parse_linearized(text)
    return SyntheticSample(template_key(extract_template(t)), t, tuple(utterance_of(t)), "test", 0)


# "home" is mostly a destination, so the parser prefers SL:X for it
AMBIGUOUS = [parse_linearized(t) for t in ["[IN:A go to [SL:X home ] ]"] * 3 + ["[IN:A go to [SL:Y home ] ]"]]


def test_memorized_sample_kept_and_ambiguous_dropped():
    g = induce_grammar(AMBIGUOUS)
    out, report = filter_synthetic(g, [sample("[IN:A go to [SL:X home ] ]"), sample("[IN:A go to [SL:Y home ] ]")])
    assert [s.verdict for s in out] == [Verdict.KEPT, Verdict.DROPPED]
    assert (report.total, report.kept, report.invalid) == (2, 1, 0)
    assert report.keep_rate == 0.5


def test_unparseable_sample_dropped():
    g = induce_grammar(AMBIGUOUS, unk_mass=0.0)
    out, _ = filter_synthetic(g, [sample("[IN:A go to [SL:X mars ] ]")])
    assert out[0].verdict is Verdict.DROPPED


def test_rejected_samples_pass_through_as_dropped():
    g = induce_grammar(AMBIGUOUS)
    bad = SyntheticSample("[IN:A [mask] ]", None, (), "test", 0, "[in:zz x in:zz]", "UnknownLabel")
    out, report = filter_synthetic(g, [bad, sample("[IN:A go to [SL:X home ] ]")])
    assert out[0].verdict is Verdict.DROPPED and out[0].rejected == "UnknownLabel"
    assert (report.total, report.kept, report.invalid) == (1, 1, 1)


def test_empty_sample_list():
    out, report = filter_synthetic(lambda toks: None, [])
    assert out == []
    assert report.keep_rate is None
    assert report.to_dict()["keep_rate"] is None


def test_bucket_breakdown():
    g = induce_grammar(AMBIGUOUS)
    stats = template_stats(Corpus.from_trees(AMBIGUOUS))
    _, report = filter_synthetic(g, [sample("[IN:A go to [SL:X home ] ]"), sample("[IN:B x ]")], stats)
    assert report.by_bucket == {"f>=5": [0, 0], "f<5": [1, 1], "f=0": [0, 1]}


def test_soundness_after_filtering():
    train = [parse_linearized(t) for t in [
        "[IN:A go to [SL:X home ] ]",
        "[IN:A go to [SL:X work ] ]",
        "[IN:A go from [SL:Y home ] ]",
        "[IN:A leave from [SL:Y work ] now ]",
        "[IN:B where is [SL:X home ] ]",
    ]]
    g = induce_grammar(train)
    samples = generate(fit_infiller(train), Corpus.from_trees(train).templates(), k=10, seed=0)
    out, report = filter_synthetic(g, samples)
    assert report.kept > 0
    assert soundness_violations(g, out) == []
    # a kept sample the parser does not reproduce is reported
    forged = sample("[IN:A go to [SL:Y home ] ]").with_verdict(Verdict.KEPT)
    assert soundness_violations(induce_grammar(AMBIGUOUS), [forged]) == [forged]


def test_parse_all_process_pool_matches_serial():
    g = induce_grammar(AMBIGUOUS)
    utts = [("go", "to", "home")] * 5 + [("go", "to", "x")]
    assert parse_all(g, utts, jobs=2) == parse_all(g, utts, jobs=1)


def test_report_to_dict():
    rep = FilterReport(total=4, kept=3, invalid=1, by_bucket={"f<5": [3, 4]})
    assert rep.to_dict() == {
        "total": 4,
        "kept": 3,
        "dropped": 1,
        "invalid": 1,
        "keep_rate": 0.75,
        "by_bucket": {"f<5": {"kept": 3, "total": 4}},
    }
