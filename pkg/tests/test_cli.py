import json
import subprocess
import sys
from pathlib import Path

import pytest

from topaug.cli import EXIT_ADAPTER, EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from topaug.corpus import filter_unsupported, write_tsv
from topaug.filtering import soundness_violations
from topaug.infill import SyntheticSample
from topaug.pcfg import Grammar
from topaug.toy import ToyConfig, make_toy_corpora

BAD = str(Path(__file__).parent / "fixtures" / "bad_adapter.py")
SMALL = ToyConfig(n_templates=150, n_train=300, n_test=80)


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    train, test = make_toy_corpora(5, SMALL)
    write_tsv(train, d / "train.tsv")
    write_tsv(test, d / "test.tsv")
    return d


def run(*argv):
    return main([str(a) for a in argv])


def test_make_pairs_single_tree(tmp_path):
    (tmp_path / "one.tsv").write_text("[IN:GET_DISTANCE how far is [SL:DESTINATION boston ] ]\n", encoding="utf-8")
    assert run("make-pairs", "--train", tmp_path / "one.tsv", "--out-dir", tmp_path / "o") == EXIT_OK
    (line,) = (tmp_path / "o" / "pairs.tsv").read_text(encoding="utf-8").splitlines()
    assert line.split("\t") == [
        "[in:get_distance [mask] [sl:destination [mask] sl:destination] in:get_distance]",
        "[in:get_distance how far is [sl:destination boston sl:destination] in:get_distance]",
    ]


def test_stats_and_templates(data, tmp_path):
    assert run("stats", "--train", data / "train.tsv", "--out-dir", tmp_path) == EXIT_OK
    stats = json.loads((tmp_path / "stats.json").read_text())
    assert stats["total"] == 300 and stats["inputs"]["train"].startswith("sha256:")
    assert (tmp_path / "rank_frequency.csv").read_text().startswith("rank,count,template\n")
    assert run("templates", "--train", data / "train.tsv", "--out-dir", tmp_path) == EXIT_OK
    counts = [int(l.split("\t")[0]) for l in (tmp_path / "templates.tsv").read_text().splitlines()]
    assert sum(counts) == 300 and counts == sorted(counts, reverse=True)
    manifest = json.loads((tmp_path / "stats.manifest.json").read_text())
    assert set(manifest) == {"command", "version", "seed", "config", "inputs", "outputs"}


def _generate_and_filter(data, out):
    common = ["--train", data / "train.tsv", "--out-dir", out, "--seed", 11]
    assert run("generate", *common) == EXIT_OK
    assert run("train-parser", *common) == EXIT_OK
    assert run("filter", *common, "--grammar", out / "grammar.json", "--candidates", out / "candidates.jsonl") == EXIT_OK
    return (out / "filtered.jsonl").read_bytes()


def test_generate_filter_byte_identical(data, tmp_path):
    first = _generate_and_filter(data, tmp_path / "a")
    second = _generate_and_filter(data, tmp_path / "b")
    assert first == second and first
    for name in ("generate", "filter"):
        ma = json.loads((tmp_path / "a" / f"{name}.manifest.json").read_text())
        mb = json.loads((tmp_path / "b" / f"{name}.manifest.json").read_text())
        assert ma["outputs"] == mb["outputs"] and ma["inputs"] == mb["inputs"]
    # the filter output is sound with respect to the grammar it used
    samples = [SyntheticSample.from_dict(json.loads(l)) for l in first.decode().splitlines()]
    grammar = Grammar.load(tmp_path / "a" / "grammar.json")
    assert soundness_violations(grammar, samples) == []


def test_train_parser_with_kept_and_eval(data, tmp_path):
    _generate_and_filter(data, tmp_path)
    assert run("train-parser", "--train", data / "train.tsv", "--candidates", tmp_path / "filtered.jsonl", "--out-dir", tmp_path / "aug") == EXIT_OK
    assert run("eval", "--train", data / "train.tsv", "--test", data / "test.tsv", "--grammar", tmp_path / "aug" / "grammar.json", "--out-dir", tmp_path / "aug") == EXIT_OK
    report = json.loads((tmp_path / "aug" / "report.json").read_text())
    assert 0.0 < report["accuracy"] <= 1.0
    assert sum(b["total"] for b in report["buckets"].values()) == report["total"]


def test_subsample_seeds(data, tmp_path):
    assert run("subsample", "--train", data / "train.tsv", "--seeds", 0, 1, "--cap", 20, "--out-dir", tmp_path) == EXIT_OK
    info = json.loads((tmp_path / "subsample.json").read_text())
    assert info["sizes"] == {"0": 20, "1": 20}


def test_augment_multi_seed(data, tmp_path):
    argv = ["augment", "--train", data / "train.tsv", "--test", data / "test.tsv", "--seeds", 0, 1, "--subsample", "--out-dir", tmp_path]
    assert run(*argv) == EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["seeds"] == [0, 1]
    assert (tmp_path / "seed_0" / "report.json").exists()
    assert "±" in (tmp_path / "summary.txt").read_text()
    manifest = json.loads((tmp_path / "augment.manifest.json").read_text())
    assert "seed_1/report.json" in manifest["outputs"]


def test_usage_errors(tmp_path, capsys):
    assert run("frobnicate") == EXIT_USAGE
    assert run("generate", "--k", 0, "--out-dir", tmp_path) == EXIT_USAGE
    assert run("generate", "--out-dir", tmp_path) == EXIT_USAGE
    err = capsys.readouterr().err
    record = json.loads(err.splitlines()[-2] if err.splitlines()[-1].startswith("usage") else err.splitlines()[-1])
    assert record["exit_code"] == EXIT_USAGE


def test_data_error_quarantines(tmp_path, capsys):
    (tmp_path / "bad.tsv").write_text("[IN:BROKEN\n", encoding="utf-8")
    assert run("stats", "--train", tmp_path / "bad.tsv", "--out-dir", tmp_path / "o") == EXIT_DATA
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "CorpusError"
    assert (tmp_path / "o" / "quarantine" / "stats" / "error.json").exists()
    assert not (tmp_path / "o" / "stats.json").exists()


def test_adapter_error_exit_code_and_partial_output(data, tmp_path, capsys):
    gen = f"{sys.executable} {BAD} short"
    code = run("generate", "--train", data / "train.tsv", "--generator", gen, "--out-dir", tmp_path)
    assert code == EXIT_ADAPTER
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "ProtocolViolation" and record["request_id"] == 0
    q = tmp_path / "quarantine" / "generate"
    assert len((q / "candidates.partial.jsonl").read_text().splitlines()) == 3


def test_env_default_paths(data, tmp_path, monkeypatch):
    monkeypatch.setenv("TOPAUG_TRAIN", str(data / "train.tsv"))
    monkeypatch.setenv("TOPAUG_OUT", str(tmp_path))
    assert main(["templates"]) == EXIT_OK
    assert (tmp_path / "templates.tsv").exists()


def test_module_entry_point(data, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "topaug", "templates", "--train", str(data / "train.tsv"), "--out-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "topaug", "nope"], capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
