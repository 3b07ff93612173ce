import sys
from pathlib import Path

import pytest

from topaug.adapter import (
    AdapterCrashed,
    AdapterTimeout,
    ExternalParser,
    ProtocolViolation,
    external_generate,
)
from topaug.adapters.echo import fill
from topaug.pcfg import induce_grammar
from topaug.tree import Form, labels_of, parse_linearized, parse_template, serialize

BAD = str(Path(__file__).parent / "fixtures" / "bad_adapter.py")
ECHO = [sys.executable, "-m", "topaug.adapters.echo"]

TEMPLATES = [
    parse_template("[IN:GET_DISTANCE [mask] [SL:DESTINATION [mask] ] ]"),
    parse_template("[IN:GET_DISTANCE [mask] ]"),
]
LABELS = labels_of(TEMPLATES[0])


def bad(mode):
    return [sys.executable, BAD, mode]


def test_echo_fill():
    src = serialize(TEMPLATES[0], Form.GENERATOR_SOURCE)
    assert fill(src) == "[in:get_distance x [sl:destination x sl:destination] in:get_distance]"


def test_echo_generate():
    out = external_generate(ECHO, TEMPLATES, LABELS, k=3, seed=1)
    assert len(out) == 6
    assert all(s.valid for s in out)
    assert str(out[0].tree) == "[IN:GET_DISTANCE x [SL:DESTINATION x ] ]"
    assert out[0].utterance == ("x", "x")
    assert out[0].generator_id.startswith("external:")


def test_rejections_are_counted_not_fatal():
    out = external_generate(bad("flat"), TEMPLATES, LABELS, k=2)
    assert [s.rejected for s in out] == ["Structural", "Structural", None, None]
    out = external_generate(bad("unknown_label"), TEMPLATES[:1], LABELS, k=2)
    assert [s.rejected for s in out] == ["UnknownLabel", "UnknownLabel"]
    assert all(s.tree is None and s.candidate for s in out)


def test_crash():
    with pytest.raises(AdapterCrashed) as info:
        external_generate(bad("crash"), TEMPLATES, LABELS, k=2)
    assert info.value.request_id == 0


def test_garbage_line():
    with pytest.raises(ProtocolViolation, match="malformed"):
        external_generate(bad("garbage"), TEMPLATES, LABELS, k=1)


def test_short_response_names_request():
    with pytest.raises(ProtocolViolation) as info:
        external_generate(bad("short"), TEMPLATES, LABELS, k=5)
    assert info.value.request_id == 0
    assert "request 0" in str(info.value)
    assert len(info.value.partial) == 3


def test_wrong_id():
    with pytest.raises(ProtocolViolation, match="request 0"):
        external_generate(bad("wrong_id"), TEMPLATES, LABELS, k=1)


def test_missing_candidate():
    with pytest.raises(ProtocolViolation, match="candidate"):
        external_generate(bad("no_candidate"), TEMPLATES, LABELS, k=1)


def test_timeout():
    with pytest.raises(AdapterTimeout):
        external_generate(bad("hang"), TEMPLATES, LABELS, k=1, timeout=0.5)


def test_stderr_does_not_block():
    out = external_generate(bad("stderr_flood"), TEMPLATES * 5, LABELS, k=2)
    assert len(out) == 20


def test_external_parser_roundtrip(tmp_path):
    trees = [parse_linearized("[IN:A go to [SL:X home ] ]"), parse_linearized("[IN:B hi ]")]
    g = induce_grammar(trees)
    g.save(tmp_path / "g.json")
    parser = ExternalParser([sys.executable, "-m", "topaug.adapters.pcfg_parser", str(tmp_path / "g.json")])
    utts = [("go", "to", "home"), ("hi",), ("go", "to", "hi")]
    assert parser.parse_many(utts) == [g(u) for u in utts]
    assert parser(("hi",)) == trees[1]


def test_external_parser_bad_tree_is_no_parse():
    assert ExternalParser(bad("bad_tree")).parse_many([("a",), ("b",)]) == [None, None]


def test_external_parser_short_output():
    with pytest.raises(ProtocolViolation):
        ExternalParser(bad("garbage")).parse_many([("a",)])
