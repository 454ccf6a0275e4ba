"""Train the reference forest and run the explainer backends over a dataset."""

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from .backends import Backend, make_lime, make_treeshap
from .data import NEG, POS, DatasetTable, load_dataset_table

EXPLAINER_CHOICES = ("treeshap", "lime")


@dataclass(frozen=True)
class BridgeConfig:
    dataset: Path
    out_dir: Path
    explainers: tuple[str, ...] = EXPLAINER_CHOICES
    num_trees: int = 100
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dataset", Path(self.dataset))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.num_trees < 1:
            raise ValueError("num_trees must be at least 1")
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must be in (0, 1)")
        bad = [e for e in self.explainers if e not in EXPLAINER_CHOICES]
        if bad or not self.explainers:
            raise ValueError(f"explainers must be among {EXPLAINER_CHOICES}")


@dataclass(frozen=True)
class BridgeResult:
    predictions_path: Path
    attribution_paths: dict
    backends: dict
    num_train: int
    num_test: int
    warnings: tuple[str, ...] = field(default_factory=tuple)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _split(n: int, train_fraction: float, seed: int):
    rng = np.random.default_rng(seed)
    idx = rng.permutation(n)
    cut = max(1, min(n - 1, int(round(train_fraction * n))))
    return np.sort(idx[:cut]), np.sort(idx[cut:])


def run_reference_explainers(cfg: BridgeConfig) -> BridgeResult:
    """Train, predict the test split, and write one attribution file per explainer."""
    table = load_dataset_table(cfg.dataset)
    X = table.encode()
    y = table.labels
    train_idx, test_idx = _split(len(y), cfg.train_fraction, cfg.seed)

    model = RandomForestClassifier(
        n_estimators=cfg.num_trees, random_state=cfg.seed % (2 ** 32))
    model.fit(X[train_idx], y[train_idx])
    model_id = f"sklearn-rf(trees={cfg.num_trees},seed={cfg.seed})"

    if 1 in model.classes_:
        pos_col = list(model.classes_).index(1)
        probs = model.predict_proba(X[test_idx])[:, pos_col]
    else:
        probs = np.zeros(len(test_idx))

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["index,predicted_label,score"]
    for di, p in zip(test_idx, probs):
        lines.append(f"{int(di)},{POS if p >= 0.5 else NEG},{p:.6f}")
    predictions_path = cfg.out_dir / "predictions.csv"
    _atomic_write(predictions_path, "\n".join(lines) + "\n")

    backends: dict[str, Backend] = {}
    if "treeshap" in cfg.explainers:
        backends["treeshap"] = make_treeshap(model, X[train_idx])
    if "lime" in cfg.explainers:
        backends["lime"] = make_lime(model, X[train_idx], len(table.alphabet))

    attribution_paths: dict[str, Path] = {}
    warnings: list[str] = []
    for name, backend in backends.items():
        instances = []
        for pos, (di, p) in enumerate(zip(test_idx, probs)):
            try:
                scores = backend.explain(X[di], seed=_instance_seed(cfg.seed, name, di))
            except Exception as exc:  # keep going; a bad instance is not a bad run
                warnings.append(f"{name}: instance {int(di)}: {exc}")
                continue
            instances.append({
                "index": int(di),
                "predicted_label": POS if p >= 0.5 else NEG,
                "scores": [float(s) for s in scores],
            })
        payload = {
            "dataset_sha256": table.sha256,
            "explainer": name,
            "model": model_id,
            "instances": instances,
            "settings": dict(backend.settings, backend=backend.kind),
        }
        path = cfg.out_dir / f"attr_{name}.json"
        _atomic_write(path, json.dumps(payload, indent=2) + "\n")
        attribution_paths[name] = path

    return BridgeResult(
        predictions_path=predictions_path,
        attribution_paths=attribution_paths,
        backends=backends,
        num_train=len(train_idx),
        num_test=len(test_idx),
        warnings=tuple(warnings),
    )


def _instance_seed(seed: int, explainer: str, index) -> int:
    # process-independent, unlike hash()
    text = f"{seed}|{explainer}|{int(index)}"
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:4], "big")
