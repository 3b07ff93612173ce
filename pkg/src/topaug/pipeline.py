"""End-to-end augmentation: induce, generate, filter, retrain, evaluate."""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .adapter import ExternalParser, external_generate
from .corpus import Corpus, FrequencyTable, filter_unsupported, load_tsv, subsample_one_per_template, template_stats
from .evaluation import Delta, EvalReport, compare, evaluate, multi_seed_summary, render_seed_table, render_table
from .filtering import FilterReport, filter_synthetic
from .infill import DEFAULT_K, DEFAULT_P, SyntheticSample, Verdict, dedup_samples, fit_infiller, generate
from .pcfg import DEFAULT_SMOOTHING, DEFAULT_UNK_MASS, Grammar, induce_grammar
from .tree import labels_of

log = logging.getLogger(__name__)

BUILTIN = "builtin"


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    train: Path | None = None
    valid: Path | None = None
    test: Path | None = None
    out_dir: Path | None = None
    keep_unsupported: bool = False
    dedup: bool = True
    strict: bool = False
    k: int = DEFAULT_K
    p: float = DEFAULT_P
    seed: int = 0
    seeds: list[int] = field(default_factory=list)
    smoothing: float = DEFAULT_SMOOTHING
    unk_mass: float = DEFAULT_UNK_MASS
    generator: str = BUILTIN
    parser: str = BUILTIN
    subsample: bool = False
    cap: int | None = None
    draws: int | None = None
    jobs: int = 1
    timeout: float = 60.0

    def validate(self, need_paths: Sequence[str] = ()) -> None:
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not 0.0 < self.p <= 1.0:
            raise ConfigError("p must be in (0, 1]")
        if self.smoothing < 0 or not 0.0 <= self.unk_mass < 1.0:
            raise ConfigError("smoothing must be >= 0 and unk_mass in [0, 1)")
        if self.cap is not None and self.cap < 1:
            raise ConfigError("cap must be positive")
        if self.draws is not None and self.draws < 1:
            raise ConfigError("draws must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        for name in need_paths:
            path = getattr(self, name)
            if path is None or not Path(path).is_file():
                raise ConfigError(f"{name} file not found: {path}")

    def to_dict(self) -> dict:
        return {k: (str(v) if isinstance(v, Path) else v) for k, v in asdict(self).items()}


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


def corpus_digest(corpus: Corpus) -> str:
    h = hashlib.sha256()
    for item in corpus:
        h.update(item.linearized.encode("utf-8") + b"\n")
    return "sha256:" + h.hexdigest()


@dataclass
class AugmentResult:
    baseline: EvalReport
    augmented: EvalReport
    delta: Delta
    filter_report: FilterReport
    samples: list[SyntheticSample]
    train_size: int
    seed: int

    @property
    def kept(self) -> list[SyntheticSample]:
        return [s for s in self.samples if s.verdict is Verdict.KEPT]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "baseline": self.baseline.to_dict(),
            "augmented": self.augmented.to_dict(),
            "delta": self.delta.to_dict(),
            "filter": self.filter_report.to_dict(),
        }


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:  # re-raised with the stage attached
        raise StageError(name, exc) from exc


def prepare_train(train: Corpus, cfg: PipelineConfig, seed: int) -> Corpus:
    if not cfg.keep_unsupported:
        train = filter_unsupported(train)
    if cfg.subsample:
        train = subsample_one_per_template(train, seed, cfg.cap)
    return train


def synthesize(train: Corpus, cfg: PipelineConfig, seed: int) -> list[SyntheticSample]:
    templates = train.templates()
    exclude = train.trees if cfg.dedup else ()
    if cfg.generator == BUILTIN:
        model = fit_infiller(train)
        return generate(model, templates, k=cfg.k, p=cfg.p, seed=seed, exclude=exclude, dedup=cfg.dedup, draws=cfg.draws)
    labels = set().union(*(labels_of(t) for t in train.trees))
    samples = external_generate(cfg.generator, templates, labels, k=cfg.k, p=cfg.p, seed=seed, timeout=cfg.timeout)
    return dedup_samples(samples, exclude) if cfg.dedup else samples


def augment(
    cfg: PipelineConfig,
    train: Corpus | None = None,
    test: Corpus | None = None,
    seed: int | None = None,
    out_dir: Path | None = None,
) -> AugmentResult:
    """Run baseline and augmented training for one seed.

    The target parser is always the built-in PCFG; ``cfg.parser`` picks the
    auxiliary parser used for filtering (the baseline grammar itself, or an
    external adapter).  When ``cfg.subsample`` is set the generator, the
    auxiliary parser and the target parser all see only the subsample.
    """
    cfg.validate()
    seed = cfg.seed if seed is None else seed
    if train is None:
        train = _stage("load", load_tsv, cfg.train, strict=cfg.strict, split="train")
    if test is None:
        test = _stage("load", load_tsv, cfg.test, strict=cfg.strict, split="test")
    if not cfg.keep_unsupported:
        test = filter_unsupported(test)
    train = prepare_train(train, cfg, seed)
    stats = template_stats(train)

    real_grammar = _stage("train_parser", induce_grammar, train, cfg.smoothing, cfg.unk_mass)
    baseline = _stage("eval", evaluate, real_grammar, test, stats, cfg.jobs, "Real")
    baseline.counts = {"real": len(train)}

    samples = _stage("generate", synthesize, train, cfg, seed)
    ap = real_grammar if cfg.parser == BUILTIN else ExternalParser(cfg.parser, cfg.timeout)
    samples, freport = _stage("filter", filter_synthetic, ap, samples, stats, cfg.jobs)
    kept = [s.tree for s in samples if s.verdict is Verdict.KEPT]

    aug_grammar = _stage("train_parser", induce_grammar, train.trees + kept, cfg.smoothing, cfg.unk_mass)
    augmented = _stage("eval", evaluate, aug_grammar, test, stats, cfg.jobs, "+syn")
    counts = {"real": len(train), "synthetic_generated": len(samples), "synthetic_kept": len(kept)}
    augmented.counts = counts
    baseline.counts = dict(counts, synthetic_kept=0, synthetic_generated=0)
    result = AugmentResult(baseline, augmented, compare(baseline, augmented), freport, samples, len(train), seed)
    log.info(
        "seed %d: real=%d generated=%d kept=%d baseline=%.4f augmented=%.4f",
        seed, len(train), len(samples), len(kept), baseline.accuracy, augmented.accuracy,
    )

    out_dir = out_dir or cfg.out_dir
    if out_dir is not None:
        write_artifacts(Path(out_dir), cfg, result, train, test, stats, real_grammar, aug_grammar)
    return result


def write_artifacts(
    out: Path,
    cfg: PipelineConfig,
    result: AugmentResult,
    train: Corpus,
    test: Corpus,
    stats: FrequencyTable,
    real_grammar: Grammar,
    aug_grammar: Grammar,
) -> None:
    out.mkdir(parents=True, exist_ok=True)
    inputs = {"train": corpus_digest(train), "test": corpus_digest(test)}
    (out / "stats.json").write_text(json.dumps({"inputs": inputs, **stats.report()}, indent=2) + "\n", encoding="utf-8")
    with (out / "filtered.jsonl").open("w", encoding="utf-8") as fh:
        for s in result.samples:
            fh.write(json.dumps(s.to_dict(), sort_keys=True) + "\n")
    real_grammar.save(out / "grammar_real.json", inputs)
    aug_grammar.save(out / "grammar_augmented.json", inputs)
    report = {"inputs": inputs, "config": cfg.to_dict(), **result.to_dict()}
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(render_table(result.baseline, [result.augmented]), encoding="utf-8")


def augment_seeds(cfg: PipelineConfig, seeds: Sequence[int], train: Corpus | None = None, test: Corpus | None = None):
    """Repeat ``augment`` over several seeds; returns results and Table-4 style summaries."""
    if train is None:
        train = load_tsv(cfg.train, strict=cfg.strict, split="train")
    if test is None:
        test = load_tsv(cfg.test, strict=cfg.strict, split="test")
    results = []
    for s in seeds:
        sub = Path(cfg.out_dir) / f"seed_{s}" if cfg.out_dir is not None else None
        results.append(augment(cfg, train, test, seed=s, out_dir=sub))
    summary = None
    if len(results) >= 2:
        base = multi_seed_summary([r.baseline for r in results])
        aug = multi_seed_summary([r.augmented for r in results])
        n_real = sum(r.train_size for r in results) / len(results)
        n_aug = sum(r.train_size + len(r.kept) for r in results) / len(results)
        summary = {
            "baseline": base.to_dict(),
            "augmented": aug.to_dict(),
            "table": render_seed_table([("Real", n_real, base), ("+syn", n_aug, aug)]),
        }
    return results, summary
