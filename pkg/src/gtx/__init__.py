"""Benchmark toolkit: datasets with provable explanation ground truth, and
scoring of feature-attribution explainers against it."""

__version__ = "0.1.0"

from .dataset import Dataset, StopConfig, generate_dataset, read_dataset, write_dataset
from .derive import (
    NEG,
    POS,
    Derivation,
    ExplanationMask,
    LabeledInstance,
    label_and_explain,
    random_derive,
)
from .grammar import (
    EGrammar,
    GrammarError,
    ParseTree,
    Rule,
    check_theorem1_preconditions,
    count_parse_trees,
    g_complexity,
    parse_grammar_text,
    validate_egrammar,
)
from .metrics import auc, k_accuracy, pearson, score_attributions, top_k_mask
from .oracle import is_correct_explanation, matches, verify_dataset
from .synth import GrammarSpec, synth_egrammar

__all__ = [
    "Dataset", "StopConfig", "generate_dataset", "read_dataset", "write_dataset",
    "NEG", "POS", "Derivation", "ExplanationMask", "LabeledInstance",
    "label_and_explain", "random_derive",
    "EGrammar", "GrammarError", "ParseTree", "Rule",
    "check_theorem1_preconditions", "count_parse_trees", "g_complexity",
    "parse_grammar_text", "validate_egrammar",
    "auc", "k_accuracy", "pearson", "score_attributions", "top_k_mask",
    "is_correct_explanation", "matches", "verify_dataset",
    "GrammarSpec", "synth_egrammar",
    "__version__",
]
