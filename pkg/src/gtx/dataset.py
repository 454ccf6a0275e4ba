"""Dataset assembly, class balancing, and the delimited file format.

A dataset is a deduplicated set of labeled strings of one length, each
positive row carrying the mask its derivation produced.  Files are CSV with
a JSON metadata sidecar; the CSV bytes are the identity of the dataset (its
sha256 is what attribution files must quote).
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .derive import (
    NEG,
    POS,
    DerivationBudgetError,
    ExplanationMask,
    LabeledInstance,
    label_and_explain,
    random_derive,
)
from .grammar import EGrammar, GrammarError, check_theorem1_preconditions, validate_egrammar

FORMAT_VERSION = 1


class GenerationError(RuntimeError):
    pass


class BudgetExhaustedError(GenerationError):
    """Generation stopped before reaching the target size."""

    def __init__(self, target: int, size: int, pos: int, attempts: int):
        ratio = pos / size if size else float("nan")
        super().__init__(
            f"budget exhausted after {attempts} attempts: "
            f"{size}/{target} instances, positive ratio {ratio:.3f}")
        self.target = target
        self.size = size
        self.pos = pos
        self.attempts = attempts


class LabelConflictError(GenerationError):
    """One string received both labels from different derivations."""

    def __init__(self, string: str):
        super().__init__(
            f"string {string!r} derived with both labels; "
            "the grammar does not induce a noise-free dataset")
        self.string = string


@dataclass(frozen=True)
class StopConfig:
    target_size: int
    pos_ratio_range: tuple[float, float] = (0.4, 0.6)
    max_attempts: int | None = None  # default 500 * target_size
    per_string_attempts: int = 1000

    def __post_init__(self):
        lo, hi = self.pos_ratio_range
        if self.target_size <= 0:
            raise ValueError("target_size must be positive")
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError("pos_ratio_range must satisfy 0 <= lo <= hi <= 1")
        if self.max_attempts is not None and self.max_attempts <= 0:
            raise ValueError("max_attempts must be positive")
        if self.per_string_attempts <= 0:
            raise ValueError("per_string_attempts must be positive")

    @property
    def attempt_budget(self) -> int:
        return self.max_attempts if self.max_attempts is not None else 500 * self.target_size


@dataclass(frozen=True)
class Dataset:
    alphabet: tuple[str, ...]
    string_length: int
    pos_threshold: int
    instances: tuple[LabeledInstance, ...]
    grammar_sha256: str = ""
    seed: int = 0

    @property
    def pos_count(self) -> int:
        return sum(1 for inst in self.instances if inst.label == POS)

    @property
    def neg_count(self) -> int:
        return len(self.instances) - self.pos_count

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["label", "string", "explanation"])
        for inst in self.instances:
            masked = inst.masked_string() if inst.label == POS else ""
            writer.writerow([inst.label, inst.string, masked])
        return buf.getvalue()

    def sha256(self) -> str:
        return hashlib.sha256(self.to_csv_text().encode("utf-8")).hexdigest()

    def metadata(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "grammar_sha256": self.grammar_sha256,
            "dataset_sha256": self.sha256(),
            "string_length": self.string_length,
            "pos_threshold": self.pos_threshold,
            "seed": self.seed,
            "alphabet": list(self.alphabet),
            "instances": len(self.instances),
            "pos": self.pos_count,
            "neg": self.neg_count,
        }

    def encode(self) -> tuple[np.ndarray, np.ndarray]:
        """Instances as (X, y): symbol codes in alphabet order, labels 0/1."""
        codes = {c: i for i, c in enumerate(self.alphabet)}
        X = np.array([[codes[c] for c in inst.string] for inst in self.instances],
                     dtype=np.int8).reshape(len(self.instances), self.string_length)
        y = np.array([1 if inst.label == POS else 0 for inst in self.instances],
                     dtype=np.int8)
        return X, y


def generate_dataset(
    g: EGrammar,
    length: int,
    threshold: int,
    stop: StopConfig,
    seed: int,
    enforce_preconditions: bool = True,
) -> Dataset:
    """Sample labeled strings until the target size is reached.

    Duplicates keep their first occurrence; a duplicate that flips the label
    is a hard error.  Each class is capped so the finished dataset lands
    inside the positive-ratio band; strings past a full class are discarded
    (they still count as attempts).  Deterministic in `seed`.
    """
    report = validate_egrammar(g)
    if not report.ok:
        raise GrammarError("invalid grammar: " + "; ".join(report.violations[:3]))
    if enforce_preconditions:
        pre = check_theorem1_preconditions(g)
        if not pre.ok:
            raise GrammarError(
                "unique-decomposition preconditions fail: " + "; ".join(pre.problems)
                + " (pass enforce_preconditions=False to generate anyway)")
    if threshold < 0:
        raise ValueError("threshold must be non-negative")

    target = stop.target_size
    lo, hi = stop.pos_ratio_range
    pos_cap = math.floor(hi * target)
    neg_cap = target - math.ceil(lo * target)
    if pos_cap + neg_cap < target:
        raise ValueError(f"no size-{target} dataset fits the ratio band [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    seen: dict[str, str] = {}
    instances: list[LabeledInstance] = []
    counts = {POS: 0, NEG: 0}
    attempts = 0
    budget = stop.attempt_budget

    while len(instances) < target and attempts < budget:
        attempts += 1
        try:
            d = random_derive(g, length, rng, max_attempts=stop.per_string_attempts)
        except DerivationBudgetError:
            # the grammar cannot hit this length at all; stopping now beats
            # burning the whole dataset budget on doomed retries
            raise BudgetExhaustedError(target, len(instances), counts[POS], attempts)
        inst = label_and_explain(d, threshold)
        prev = seen.get(inst.string)
        if prev is not None:
            if prev != inst.label:
                raise LabelConflictError(inst.string)
            continue
        seen[inst.string] = inst.label
        cap = pos_cap if inst.label == POS else neg_cap
        if counts[inst.label] >= cap:
            continue
        counts[inst.label] += 1
        instances.append(inst)

    if len(instances) < target:
        raise BudgetExhaustedError(target, len(instances), counts[POS], attempts)
    return Dataset(
        alphabet=tuple(sorted(g.terminals)),
        string_length=length,
        pos_threshold=threshold,
        instances=tuple(instances),
        grammar_sha256=g.sha256(),
        seed=seed,
    )


def meta_path_for(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def write_dataset(ds: Dataset, path: str | Path) -> Path:
    """Write the CSV and its metadata sidecar `<name>.meta.json`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(ds.to_csv_text(), encoding="utf-8")
    meta_path_for(path).write_text(
        json.dumps(ds.metadata(), indent=2) + "\n", encoding="utf-8")
    return path


def read_dataset(path: str | Path) -> Dataset:
    """Read a dataset CSV; the sidecar fills in provenance when present."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    meta = {}
    mp = meta_path_for(path)
    if mp.exists():
        meta = json.loads(mp.read_text(encoding="utf-8"))

    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["label", "string", "explanation"]:
        raise GenerationError(f"{path}: expected header label,string,explanation")
    instances: list[LabeledInstance] = []
    length: int | None = None
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise GenerationError(f"{path}:{lineno}: expected 3 columns")
        label, string, masked = row
        if length is None:
            length = len(string)
        elif len(string) != length:
            raise GenerationError(f"{path}:{lineno}: mixed string lengths")
        if label == POS:
            mask = ExplanationMask.from_masked_string(masked)
            if masked and any(
                    masked[i] != string[i] for i in mask.covered):
                raise GenerationError(f"{path}:{lineno}: mask disagrees with string")
        else:
            mask = ExplanationMask(len(string), frozenset())
        instances.append(LabeledInstance(label, string, mask))
    if length is None:
        raise GenerationError(f"{path}: no instances")

    alphabet = meta.get("alphabet")
    if alphabet is None:
        alphabet = sorted({c for inst in instances for c in inst.string})
    return Dataset(
        alphabet=tuple(alphabet),
        string_length=length,
        pos_threshold=int(meta.get("pos_threshold", 0)),
        instances=tuple(instances),
        grammar_sha256=meta.get("grammar_sha256", ""),
        seed=int(meta.get("seed", 0)),
    )


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
