"""Sweeps: synthesize grammars, generate datasets, train, explain, score.

One cell is a (string length, grammar complexity, dataset size) triple; each
cell runs several independent grammars.  Every random decision is seeded by
hashing the master seed with the cell coordinates, so runs are reproducible
and independent of execution order.  Failures (infeasible specs, exhausted
generation budgets, degenerate splits) are recorded on the cell and skipped,
never fatal.
"""
from __future__ import annotations

import hashlib
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .dataset import GenerationError, StopConfig, generate_dataset, write_dataset
from .derive import NEG, POS, DerivationBudgetError
from .explainers import (
    AttributionFile,
    AttributionRecord,
    ExplainerConfig,
    exact_shapley,
    lime_local,
    shapley_mc,
    write_attributions,
)
from .forest import ForestConfig, SingleClassError, train_forest
from .grammar import GrammarError
from .metrics import (
    DegenerateStatisticError,
    KAccuracySummary,
    auc,
    score_attributions,
)
from .oracle import verify_dataset
from .synth import GrammarSpec, InfeasibleSpecError, synth_egrammar

SEED_ENV_VAR = "GTX_SEED"
SWEEP_KINDS = ("dataset-size", "g-complexity")
KNOWN_EXPLAINERS = ("shapley", "lime", "shapley-exact")


@dataclass(frozen=True)
class EngineParams:
    """Model and explainer knobs, sized for desk-scale runs."""

    num_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 2
    max_features: int | str = "sqrt"
    shapley_samples: int = 200
    lime_samples: int = 2000
    background_size: int = 64
    explain_cap: int = 25  # explained instances per dataset
    per_string_attempts: int = 1000

    def __post_init__(self):
        if self.shapley_samples < 1 or self.lime_samples < 2:
            raise ValueError("sampler sizes must be positive")
        if self.background_size < 1 or self.explain_cap < 1:
            raise ValueError("background_size and explain_cap must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    sweep: str
    string_lengths: tuple[int, ...]
    g_complexities: tuple[int, ...]
    dataset_sizes: tuple[int, ...]
    alphabet_size: int = 2
    terminal_rhs_length: int = 2
    num_nonterminals: int = 8
    pos_threshold: int | None = None  # None: 6 at length 20, 8 elsewhere
    accuracy_k: int | None = None  # same preset rule
    grammars_per_cell: int = 5
    train_fraction: float = 0.8
    master_seed: int = 0
    explainers: tuple[str, ...] = ("shapley", "lime")
    pos_ratio_range: tuple[float, float] = (0.4, 0.6)
    engine: EngineParams = field(default_factory=EngineParams)

    def __post_init__(self):
        if self.sweep not in SWEEP_KINDS:
            raise ValueError(f"sweep must be one of {SWEEP_KINDS}")
        for name in ("string_lengths", "g_complexities", "dataset_sizes"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must be in (0, 1)")
        if self.grammars_per_cell < 1:
            raise ValueError("grammars_per_cell must be positive")
        for ex in self.explainers:
            if ex not in KNOWN_EXPLAINERS:
                raise ValueError(f"unknown explainer {ex!r}; known: {KNOWN_EXPLAINERS}")
        if not self.explainers:
            raise ValueError("need at least one explainer")

    def threshold_for(self, length: int) -> int:
        if self.pos_threshold is not None:
            return self.pos_threshold
        return 6 if length == 20 else 8

    def k_for(self, length: int) -> int:
        if self.accuracy_k is not None:
            return self.accuracy_k
        return 6 if length == 20 else 8


@dataclass(frozen=True)
class CellKey:
    string_length: int
    g_complexity: int
    dataset_size: int

    def tag(self) -> str:
        return f"l{self.string_length}_m{self.g_complexity}_n{self.dataset_size}"

    def grammar_tag(self) -> str:
        # no dataset size: a size sweep reuses one grammar per index
        return f"l{self.string_length}_m{self.g_complexity}"


@dataclass(frozen=True)
class GrammarRunResult:
    grammar_index: int
    grammar_sha256: str
    dataset_sha256: str
    train_auc: float
    test_auc: float
    summaries: dict[str, KAccuracySummary]


@dataclass(frozen=True)
class CellResult:
    key: CellKey
    pos_threshold: int
    accuracy_k: int
    runs: tuple[GrammarRunResult, ...]
    failures: tuple[str, ...]

    def auc_values(self) -> list[float]:
        return [r.test_auc for r in self.runs]

    def kacc_means(self, explainer: str) -> list[float]:
        out = []
        for r in self.runs:
            summary = r.summaries.get(explainer)
            if summary is not None and summary.mean is not None:
                out.append(summary.mean)
        return out

    def kacc_instance_values(self, explainer: str) -> list[float]:
        out = []
        for r in self.runs:
            summary = r.summaries.get(explainer)
            if summary is not None:
                out.extend(v for _, v in summary.per_instance)
        return out

    def counts(self, explainer: str) -> tuple[int, int]:
        scored = skipped = 0
        for r in self.runs:
            summary = r.summaries.get(explainer)
            if summary is not None:
                scored += summary.num_scored
                skipped += summary.num_skipped
        return scored, skipped


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    cells: tuple[CellResult, ...]


def derive_seed(master: int, *parts) -> int:
    """Stable sub-seed from the master seed and a coordinate path."""
    text = "|".join([str(master)] + [str(p) for p in parts])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 63)


def resolve_master_seed(configured: int, env: dict | None = None) -> int:
    """The environment variable wins over the config file when set."""
    env = os.environ if env is None else env
    raw = env.get(SEED_ENV_VAR)
    if raw is None or raw == "":
        return configured
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")


def _stratified_split(
    y: np.ndarray, train_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    train_parts = []
    test_parts = []
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if len(idx) < 2:
            raise SingleClassError(f"class {cls} has fewer than 2 instances")
        perm = idx[rng.permutation(len(idx))]
        cut = int(round(train_fraction * len(idx)))
        cut = min(max(cut, 1), len(idx) - 1)  # both sides keep both classes
        train_parts.append(perm[:cut])
        test_parts.append(perm[cut:])
    return (np.sort(np.concatenate(train_parts)),
            np.sort(np.concatenate(test_parts)))


def _explain_one(
    explainer: str,
    model,
    x: np.ndarray,
    background: np.ndarray,
    alphabet_size: int,
    engine: EngineParams,
    seed: int,
):
    if explainer == "shapley":
        return shapley_mc(model, x, background, engine.shapley_samples, seed)
    if explainer == "shapley-exact":
        return exact_shapley(model, x, background)
    if explainer == "lime":
        cfg = ExplainerConfig(lime_samples=engine.lime_samples)
        return lime_local(model, x, alphabet_size, cfg, seed)
    raise ValueError(f"unknown explainer {explainer!r}")


def _run_one_grammar(
    cfg: ExperimentConfig,
    key: CellKey,
    gi: int,
    master: int,
    artifacts_dir: Path | None,
) -> GrammarRunResult:
    engine = cfg.engine
    length, complexity, size = key.string_length, key.g_complexity, key.dataset_size
    t = cfg.threshold_for(length)
    k = cfg.k_for(length)

    spec = GrammarSpec(
        num_nonterminals=cfg.num_nonterminals,
        target_g_complexity=complexity,
        alphabet_size=cfg.alphabet_size,
        terminal_rhs_length=cfg.terminal_rhs_length,
        seed=derive_seed(master, key.grammar_tag(), gi, "grammar"),
    )
    g = synth_egrammar(spec)
    ds = generate_dataset(
        g, length, t,
        StopConfig(size, cfg.pos_ratio_range,
                   per_string_attempts=engine.per_string_attempts),
        seed=derive_seed(master, key.tag(), gi, "data"),
    )
    report = verify_dataset(ds)
    if not report.ok:
        raise GenerationError(f"ground truth failed verification: {report.summary()}")

    X, y = ds.encode()
    train_idx, test_idx = _stratified_split(
        y, cfg.train_fraction, derive_seed(master, key.tag(), gi, "split"))
    model = train_forest(
        X[train_idx], y[train_idx],
        ForestConfig(num_trees=engine.num_trees, max_features=engine.max_features,
                     min_samples_leaf=engine.min_samples_leaf,
                     max_depth=engine.max_depth),
        seed=derive_seed(master, key.tag(), gi, "forest"),
    )
    train_probs = model.predict_batch(X[train_idx])
    test_probs = model.predict_batch(X[test_idx])
    train_auc = auc(train_probs, y[train_idx])
    test_auc = auc(test_probs, y[test_idx])

    bg_rng = np.random.default_rng(derive_seed(master, key.tag(), gi, "background"))
    bg_size = min(engine.background_size, len(train_idx))
    background = X[train_idx][bg_rng.choice(len(train_idx), bg_size, replace=False)]

    predicted_pos = test_probs >= 0.5
    candidates = [int(di) for di, hit, truth in
                  zip(test_idx, predicted_pos, y[test_idx] == 1)
                  if hit and truth][:engine.explain_cap]

    ds_hash = ds.sha256()
    model_id = f"forest(trees={engine.num_trees},seed={model.seed})"
    summaries: dict[str, KAccuracySummary] = {}
    attr_files: dict[str, AttributionFile] = {}
    for explainer in cfg.explainers:
        records = []
        for di in candidates:
            av = _explain_one(
                explainer, model, X[di], background, len(ds.alphabet), engine,
                derive_seed(master, key.tag(), gi, explainer, di))
            records.append(AttributionRecord(di, POS, av.scores))
        attr = AttributionFile(ds_hash, explainer, model_id, tuple(records))
        attr_files[explainer] = attr
        summaries[explainer] = score_attributions(ds, attr, k)

    if artifacts_dir is not None:
        stem = artifacts_dir / key.tag() / f"g{gi}"
        write_dataset(ds, stem / "dataset.csv")
        _write_predictions(stem / "predictions.csv", test_idx, test_probs)
        for explainer, attr in attr_files.items():
            write_attributions(
                stem / f"attr_{explainer}.json", attr.dataset_sha256,
                attr.explainer, attr.model, list(attr.instances))

    return GrammarRunResult(
        grammar_index=gi,
        grammar_sha256=g.sha256(),
        dataset_sha256=ds_hash,
        train_auc=train_auc,
        test_auc=test_auc,
        summaries=summaries,
    )


def _write_predictions(path: Path, test_idx: np.ndarray, probs: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["index,predicted_label,score"]
    for di, p in zip(test_idx, probs):
        label = POS if p >= 0.5 else NEG
        lines.append(f"{int(di)},{label},{p:.6f}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cell_keys(cfg: ExperimentConfig) -> list[CellKey]:
    return [CellKey(l, m, n)
            for l in cfg.string_lengths
            for m in cfg.g_complexities
            for n in cfg.dataset_sizes]


def run_experiment(
    cfg: ExperimentConfig,
    artifacts_dir: str | Path | None = None,
    log: Callable[[str], None] | None = None,
) -> ExperimentResult:
    """Run every cell; failures are recorded per cell, not raised."""
    master = cfg.master_seed
    artifacts = Path(artifacts_dir) if artifacts_dir is not None else None
    say = log if log is not None else (lambda s: None)
    cells: list[CellResult] = []
    for key in cell_keys(cfg):
        runs: list[GrammarRunResult] = []
        failures: list[str] = []
        for gi in range(cfg.grammars_per_cell):
            try:
                runs.append(_run_one_grammar(cfg, key, gi, master, artifacts))
            except (InfeasibleSpecError, GenerationError, GrammarError,
                    DerivationBudgetError, SingleClassError,
                    DegenerateStatisticError) as exc:
                failures.append(f"grammar {gi}: {type(exc).__name__}: {exc}")
        say(f"{key.tag()}: {len(runs)}/{cfg.grammars_per_cell} grammars ok"
            + (f", {len(failures)} failed" if failures else ""))
        cells.append(CellResult(
            key=key,
            pos_threshold=cfg.threshold_for(key.string_length),
            accuracy_k=cfg.k_for(key.string_length),
            runs=tuple(runs),
            failures=tuple(failures),
        ))
    return ExperimentResult(config=cfg, cells=tuple(cells))


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an ExperimentConfig from a TOML file; unknown keys are errors."""
    if sys.version_info >= (3, 11):
        import tomllib as toml
    else:
        import tomli as toml
    raw = toml.loads(Path(path).read_text(encoding="utf-8"))

    engine_raw = raw.pop("engine", {})
    if not isinstance(engine_raw, dict):
        raise ValueError("[engine] must be a table")
    engine_fields = set(EngineParams.__dataclass_fields__)
    unknown = set(engine_raw) - engine_fields
    if unknown:
        raise ValueError(f"unknown engine keys: {sorted(unknown)}")
    engine = EngineParams(**engine_raw)

    cfg_fields = set(ExperimentConfig.__dataclass_fields__) - {"engine"}
    unknown = set(raw) - cfg_fields
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for name in ("string_lengths", "g_complexities", "dataset_sizes", "explainers"):
        if name in raw:
            raw[name] = tuple(raw[name])
    if "pos_ratio_range" in raw:
        lo, hi = raw["pos_ratio_range"]
        raw["pos_ratio_range"] = (float(lo), float(hi))
    return ExperimentConfig(engine=engine, **raw)
