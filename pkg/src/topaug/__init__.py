"""Synthetic-data augmentation for hierarchical (TOP-style) semantic parsing.

Templates are extracted from annotated trees, refilled by a nucleus-sampled
span infiller, filtered by an auxiliary PCFG parser that must reproduce each
synthetic tree exactly, and evaluated by exact match per template-frequency
bucket.
"""
__version__ = "0.1.0"

from .corpus import (
    AnnotatedUtterance,
    Bucket,
    Corpus,
    FrequencyTable,
    filter_unsupported,
    frequency_bucket,
    load_tsv,
    subsample_one_per_template,
    template_stats,
)
from .evaluation import EvalReport, compare, evaluate, multi_seed_summary
from .filtering import filter_synthetic, soundness_violations
from .infill import InfillerModel, MaskContext, SyntheticSample, Verdict, fit_infiller, generate, top_p_truncate
from .pcfg import Grammar, cky_parse, exact_match, induce_grammar
from .pipeline import PipelineConfig, augment, augment_seeds
from .tree import (
    Form,
    Label,
    Mask,
    Mode,
    NonTerminal,
    Token,
    extract_template,
    fill_template,
    from_generator_output,
    parse_linearized,
    serialize,
    template_key,
    utterance_of,
)

__all__ = [
    "AnnotatedUtterance",
    "Bucket",
    "Corpus",
    "EvalReport",
    "Form",
    "FrequencyTable",
    "Grammar",
    "InfillerModel",
    "Label",
    "Mask",
    "MaskContext",
    "Mode",
    "NonTerminal",
    "PipelineConfig",
    "SyntheticSample",
    "Token",
    "Verdict",
    "augment",
    "augment_seeds",
    "cky_parse",
    "compare",
    "evaluate",
    "exact_match",
    "extract_template",
    "fill_template",
    "filter_synthetic",
    "filter_unsupported",
    "fit_infiller",
    "frequency_bucket",
    "from_generator_output",
    "generate",
    "induce_grammar",
    "load_tsv",
    "multi_seed_summary",
    "parse_linearized",
    "serialize",
    "soundness_violations",
    "subsample_one_per_template",
    "template_key",
    "template_stats",
    "top_p_truncate",
    "utterance_of",
]
