"""Command-line entry point.

Every subcommand writes into ``--out-dir``.  Outputs are first assembled in a
staging directory and moved into place only when the command succeeds, along
with ``<command>.manifest.json`` recording the configuration, seed and the
digests of inputs and outputs.  On failure the staged files are moved to
``quarantine/<command>/`` next to an ``error.json`` record, the same record is
printed to stderr as one JSON line, and the process exits with

    0  success
    1  usage or configuration error
    2  data error (unreadable or malformed inputs)
    3  adapter or protocol error
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .adapter import AdapterError, ExternalParser
from .corpus import Corpus, CorpusError, filter_unsupported, load_tsv, subsample_one_per_template, template_stats, write_tsv
from .evaluation import MismatchedTotals, TooFewRuns, evaluate, render_table
from .filtering import filter_synthetic
from .infill import DegenerateDistribution, SyntheticSample, Verdict
from .infill import EmptyCorpus as EmptyInfillCorpus
from .pcfg import EmptyCorpus as EmptyGrammarCorpus
from .pcfg import Grammar, induce_grammar
from .pipeline import (
    BUILTIN,
    ConfigError,
    PipelineConfig,
    StageError,
    augment,
    augment_seeds,
    corpus_digest,
    file_digest,
    prepare_train,
    synthesize,
)
from .tree import Form, TreeSyntaxError, extract_template, serialize

log = logging.getLogger("topaug")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ADAPTER = 0, 1, 2, 3

# environment variables supply default paths only
ENV_PATHS = {"train": "TOPAUG_TRAIN", "valid": "TOPAUG_VALID", "test": "TOPAUG_TEST", "out_dir": "TOPAUG_OUT"}

DATA_ERRORS = (
    TreeSyntaxError,
    CorpusError,
    EmptyInfillCorpus,
    EmptyGrammarCorpus,
    DegenerateDistribution,
    MismatchedTotals,
    TooFewRuns,
    OSError,
    json.JSONDecodeError,
    KeyError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with data errors
    def error(self, message: str):
        raise UsageError(message)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _write_jsonl(path: Path, samples: Sequence[SyntheticSample]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")


def _read_jsonl(path: Path) -> list[SyntheticSample]:
    with Path(path).open(encoding="utf-8") as fh:
        return [SyntheticSample.from_dict(json.loads(line)) for line in fh if line.strip()]


class Run:
    """Staging area for one command's outputs."""

    def __init__(self, out_dir: Path, command: str, cfg: PipelineConfig):
        self.out = Path(out_dir)
        self.command = command
        self.cfg = cfg
        self.inputs: dict[str, str] = {}
        self.staging = self.out / f".staging-{command}"
        if self.staging.exists():
            shutil.rmtree(self.staging)
        self.staging.mkdir(parents=True)

    def path(self, name: str) -> Path:
        return self.staging / name

    def add_input(self, name: str, path: Path | None = None, corpus: Corpus | None = None) -> None:
        self.inputs[name] = corpus_digest(corpus) if corpus is not None else file_digest(path)

    def commit(self) -> list[Path]:
        outputs = {
            f.relative_to(self.staging).as_posix(): file_digest(f)
            for f in sorted(self.staging.rglob("*"))
            if f.is_file()
        }
        moved = []
        for f in sorted(self.staging.iterdir()):
            target = self.out / f.name
            if target.is_dir():
                shutil.rmtree(target)
            os.replace(f, target)
            moved.append(target)
        self.staging.rmdir()
        manifest = {
            "command": self.command,
            "version": __version__,
            "seed": self.cfg.seed,
            "config": self.cfg.to_dict(),
            "inputs": self.inputs,
            "outputs": outputs,
        }
        _write_json(self.out / f"{self.command}.manifest.json", manifest)
        return moved

    def quarantine(self, record: dict) -> Path:
        dest = self.out / "quarantine" / self.command
        if dest.exists():
            shutil.rmtree(dest)
        dest.parent.mkdir(parents=True, exist_ok=True)
        os.replace(self.staging, dest)
        _write_json(dest / "error.json", record)
        return dest


# -- commands ---------------------------------------------------------------


def _load(run: Run, cfg: PipelineConfig, name: str) -> Corpus:
    path = getattr(cfg, name)
    if path is None:
        raise ConfigError(f"--{name} is required (or set {ENV_PATHS[name]})")
    corpus = load_tsv(path, strict=cfg.strict, split=name)
    run.add_input(name, Path(path))
    return corpus


def _train(run: Run, cfg: PipelineConfig) -> Corpus:
    return prepare_train(_load(run, cfg, "train"), cfg, cfg.seed)


def cmd_stats(run: Run, cfg: PipelineConfig, args) -> None:
    train = _load(run, cfg, "train")
    stats = template_stats(train)
    _write_json(run.path("stats.json"), {"inputs": run.inputs, "load_errors": len(train.errors), **stats.report(args.top)})
    run.path("rank_frequency.csv").write_text(stats.rank_frequency_csv(), encoding="utf-8")


def cmd_templates(run: Run, cfg: PipelineConfig, args) -> None:
    stats = template_stats(_load(run, cfg, "train"))
    with run.path("templates.tsv").open("w", encoding="utf-8") as fh:
        for key, count in stats.ranked():
            fh.write(f"{count}\t{key}\n")


def cmd_make_pairs(run: Run, cfg: PipelineConfig, args) -> None:
    train = _train(run, cfg)
    with run.path("pairs.tsv").open("w", encoding="utf-8") as fh:
        for item in train:
            src = serialize(extract_template(item.tree), Form.GENERATOR_SOURCE)
            fh.write(f"{src}\t{serialize(item.tree, Form.GENERATOR_TARGET)}\n")


def cmd_generate(run: Run, cfg: PipelineConfig, args) -> None:
    train = _train(run, cfg)
    try:
        samples = synthesize(train, cfg, cfg.seed)
    except AdapterError as exc:
        _write_jsonl(run.path("candidates.partial.jsonl"), exc.partial)
        raise
    _write_jsonl(run.path("candidates.jsonl"), samples)


def _parser_fn(run: Run, cfg: PipelineConfig, args):
    if cfg.parser != BUILTIN:
        return ExternalParser(cfg.parser, cfg.timeout)
    if args.grammar is None:
        raise ConfigError("--grammar is required with the builtin parser")
    run.add_input("grammar", args.grammar)
    return Grammar.load(args.grammar)


def cmd_filter(run: Run, cfg: PipelineConfig, args) -> None:
    if args.candidates is None:
        raise ConfigError("--candidates is required")
    parser_fn = _parser_fn(run, cfg, args)
    run.add_input("candidates", args.candidates)
    samples = _read_jsonl(args.candidates)
    stats = template_stats(_train(run, cfg)) if cfg.train is not None else None
    out, report = filter_synthetic(parser_fn, samples, stats, cfg.jobs)
    _write_jsonl(run.path("filtered.jsonl"), out)
    _write_json(run.path("filter_report.json"), {"inputs": run.inputs, **report.to_dict()})


def cmd_train_parser(run: Run, cfg: PipelineConfig, args) -> None:
    train = _train(run, cfg)
    trees = train.trees
    if args.candidates is not None:
        run.add_input("candidates", args.candidates)
        seen = set(trees)
        for s in _read_jsonl(args.candidates):
            if s.verdict is Verdict.KEPT and s.tree not in seen:
                seen.add(s.tree)
                trees.append(s.tree)
    grammar = induce_grammar(trees, cfg.smoothing, cfg.unk_mass)
    grammar.save(run.path("grammar.json"), run.inputs)


def cmd_eval(run: Run, cfg: PipelineConfig, args) -> None:
    parser_fn = _parser_fn(run, cfg, args)
    test = _load(run, cfg, "test")
    if not cfg.keep_unsupported:
        test = filter_unsupported(test)
    train = _train(run, cfg)
    report = evaluate(parser_fn, test, template_stats(train), cfg.jobs, args.name)
    report.counts = {"real": len(train)}
    _write_json(run.path("report.json"), {"inputs": run.inputs, **report.to_dict()})
    run.path("report.txt").write_text(render_table(report), encoding="utf-8")


def cmd_subsample(run: Run, cfg: PipelineConfig, args) -> None:
    train = _load(run, cfg, "train")
    seeds = cfg.seeds or [cfg.seed]
    sizes = {}
    for s in seeds:
        sub = subsample_one_per_template(train, s, cfg.cap)
        write_tsv(sub, run.path(f"subsample_seed{s}.tsv"))
        sizes[str(s)] = len(sub)
    _write_json(run.path("subsample.json"), {"inputs": run.inputs, "distinct_templates": len(template_stats(train)), "sizes": sizes})


def cmd_augment(run: Run, cfg: PipelineConfig, args) -> None:
    train = _load(run, cfg, "train")
    test = _load(run, cfg, "test")
    seeds = cfg.seeds or [cfg.seed]
    if len(seeds) == 1:
        augment(cfg, train, test, seed=seeds[0], out_dir=run.staging)
        return
    _, summary = augment_seeds(replace(cfg, out_dir=run.staging), seeds, train, test)
    _write_json(run.path("summary.json"), {"inputs": run.inputs, "seeds": seeds, **summary})
    run.path("summary.txt").write_text(summary["table"], encoding="utf-8")


COMMANDS: dict[str, tuple[Callable, str]] = {
    "stats": (cmd_stats, "template frequency statistics (JSON + rank/frequency CSV)"),
    "templates": (cmd_templates, "templates with their training counts"),
    "make-pairs": (cmd_make_pairs, "generator (source, target) pairs as TSV"),
    "generate": (cmd_generate, "synthetic candidates as JSONL"),
    "filter": (cmd_filter, "auxiliary-parser filtering of candidates"),
    "train-parser": (cmd_train_parser, "induce a PCFG and save it as JSON"),
    "eval": (cmd_eval, "exact-match evaluation by frequency bucket"),
    "subsample": (cmd_subsample, "one utterance per template, per seed"),
    "augment": (cmd_augment, "baseline vs augmented end to end"),
}


# -- argument handling ------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    d = PipelineConfig()
    env = lambda name: os.environ.get(ENV_PATHS[name])  # noqa: E731
    p.add_argument("--train", type=Path, default=env("train"))
    p.add_argument("--valid", type=Path, default=env("valid"))
    p.add_argument("--test", type=Path, default=env("test"))
    p.add_argument("--out-dir", type=Path, default=env("out_dir"))
    p.add_argument("--keep-unsupported", action="store_true", help="keep UNSUPPORTED* intents (dropped by default)")
    p.add_argument("--no-dedup", dest="dedup", action="store_false")
    p.add_argument("--strict", action="store_true", help="abort on the first malformed corpus line")
    p.add_argument("--k", type=int, default=d.k, help="fillings per template")
    p.add_argument("--p", type=float, default=d.p, help="nucleus mass")
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--seeds", type=int, nargs="+", default=[], help="run once per seed")
    p.add_argument("--smoothing", type=float, default=d.smoothing)
    p.add_argument("--unk-mass", type=float, default=d.unk_mass)
    p.add_argument("--generator", default=d.generator, help="'builtin' or an adapter command line")
    p.add_argument("--parser", default=d.parser, help="'builtin' or an adapter command line")
    p.add_argument("--subsample", action="store_true", help="train on one utterance per template")
    p.add_argument("--cap", type=int, default=None, help="truncate the subsample to this many items")
    p.add_argument("--draws", type=int, default=None, help="draw templates uniformly with replacement this many times")
    p.add_argument("--jobs", type=int, default=d.jobs)
    p.add_argument("--timeout", type=float, default=d.timeout, help="adapter response timeout in seconds")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topaug", description="Template-infilling data augmentation for TOP-style parsing.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_config_flags(p)
        if name in ("filter", "eval"):
            p.add_argument("--grammar", type=Path, help="grammar JSON for the builtin parser")
        if name in ("filter", "train-parser"):
            p.add_argument("--candidates", type=Path, help="candidates/filtered JSONL")
        if name == "stats":
            p.add_argument("--top", type=int, default=50, help="templates listed in the report")
        if name == "eval":
            p.add_argument("--name", default="", help="row label in the report table")
    return parser


def config_from_args(args) -> PipelineConfig:
    return PipelineConfig(
        **{f: getattr(args, f) for f in PipelineConfig.__dataclass_fields__ if hasattr(args, f)}
    )


def _error_record(exc: BaseException, code: int, command: str | None) -> dict:
    stage = None
    if isinstance(exc, StageError):
        stage, exc = exc.stage, exc.cause
    record = {"status": "error", "exit_code": code, "command": command, "error": type(exc).__name__, "message": str(exc)}
    if stage is not None:
        record["stage"] = stage
    if isinstance(exc, AdapterError):
        record["request_id"] = exc.request_id
        record["partial_results"] = len(exc.partial)
    return record


def _classify(exc: BaseException) -> int:
    cause = exc.cause if isinstance(exc, StageError) else exc
    if isinstance(cause, (UsageError, ConfigError)):
        return EXIT_USAGE
    if isinstance(cause, AdapterError):
        return EXIT_ADAPTER
    return EXIT_DATA


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = config_from_args(args)
        cfg.validate()
        if cfg.out_dir is None:
            raise ConfigError(f"--out-dir is required (or set {ENV_PATHS['out_dir']})")
    except (UsageError, ConfigError) as exc:
        print(json.dumps(_error_record(exc, EXIT_USAGE, None)), file=sys.stderr)
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    run = Run(cfg.out_dir, args.command, cfg)
    fn, _ = COMMANDS[args.command]
    try:
        fn(run, cfg, args)
    except (UsageError, ConfigError, AdapterError, StageError, *DATA_ERRORS, ValueError) as exc:
        code = _classify(exc)
        record = _error_record(exc, code, args.command)
        record["quarantine"] = str(run.quarantine(record))
        print(json.dumps(record), file=sys.stderr)
        return code
    for path in run.commit():
        log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
