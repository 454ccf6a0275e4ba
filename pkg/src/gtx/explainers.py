"""Feature attribution over categorical string classifiers.

All explainers score positions of one instance toward the positive class.
Shapley values use the interventional game: a coalition keeps the
instance's symbols and fills the rest from a background sample.
`exact_shapley` enumerates every coalition (small lengths only) and is the
reference the Monte Carlo estimator is tested against.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .derive import NEG, POS

EXACT_SHAPLEY_MAX_LEN = 12


@dataclass(frozen=True)
class ExplainerConfig:
    shapley_samples: int = 2000
    background_size: int = 100
    lime_samples: int = 5000
    lime_flip_prob: float = 0.3
    lime_kernel_width: float | None = None  # default 0.75 * sqrt(l)
    lime_ridge: float = 1e-3

    def __post_init__(self):
        if self.shapley_samples < 1 or self.lime_samples < 2:
            raise ValueError("sample counts must be positive")
        if self.background_size < 1:
            raise ValueError("background_size must be positive")
        if not (0.0 <= self.lime_flip_prob <= 1.0):
            raise ValueError("lime_flip_prob must be a probability")
        if self.lime_kernel_width is not None and self.lime_kernel_width <= 0:
            raise ValueError("lime_kernel_width must be positive")
        if self.lime_ridge < 0:
            raise ValueError("lime_ridge must be non-negative")


@dataclass(frozen=True)
class AttributionVector:
    scores: tuple[float, ...]
    explainer_id: str
    instance_index: int = -1
    warning: str = ""

    def as_array(self) -> np.ndarray:
        return np.asarray(self.scores, dtype=np.float64)


PredictFn = Callable[[np.ndarray], np.ndarray]


def _as_predict_fn(model) -> PredictFn:
    if hasattr(model, "predict_batch"):
        return model.predict_batch
    if callable(model):
        return model
    raise TypeError("model must be callable or expose predict_batch")


def _shapley_weights(l: int) -> np.ndarray:
    # weight of a coalition of size s when adding one more player
    return np.array([
        math.factorial(s) * math.factorial(l - 1 - s) / math.factorial(l)
        for s in range(l)
    ])


def exact_shapley(
    model,
    x: np.ndarray,
    background: np.ndarray,
    explainer_id: str = "shapley-exact",
    instance_index: int = -1,
) -> AttributionVector:
    """Shapley values by full coalition enumeration; O(2^l) model rows."""
    predict = _as_predict_fn(model)
    x = np.asarray(x, dtype=np.int8).ravel()
    background = np.asarray(background, dtype=np.int8)
    l = len(x)
    if l > EXACT_SHAPLEY_MAX_LEN:
        raise ValueError(f"exact enumeration capped at length {EXACT_SHAPLEY_MAX_LEN}")
    if background.ndim != 2 or background.shape[1] != l:
        raise ValueError("background must be (b, l)")

    num = 1 << l
    bits = (np.arange(num, dtype=np.uint32)[:, None] >> np.arange(l)) & 1
    keep = bits.astype(bool)  # (num, l): which positions come from x

    values = np.empty(num)
    chunk = max(1, (1 << 16) // max(1, len(background)))
    for start in range(0, num, chunk):
        end = min(num, start + chunk)
        piece = keep[start:end]  # (c, l)
        rows = np.where(piece[:, None, :], x[None, None, :], background[None, :, :])
        preds = predict(rows.reshape(-1, l))
        values[start:end] = preds.reshape(end - start, len(background)).mean(axis=1)

    sizes = keep.sum(axis=1)
    weights = _shapley_weights(l)
    scores = np.empty(l)
    for i in range(l):
        without = np.flatnonzero(~keep[:, i])
        gain = values[without + (1 << i)] - values[without]
        scores[i] = float(np.sum(weights[sizes[without]] * gain))
    return AttributionVector(tuple(scores.tolist()), explainer_id, instance_index)


def shapley_mc(
    model,
    x: np.ndarray,
    background: np.ndarray,
    n_samples: int,
    seed: int,
    explainer_id: str = "shapley",
    instance_index: int = -1,
) -> AttributionVector:
    """Permutation-sampling Shapley estimate, deterministic in `seed`.

    Each sample draws a background row and a position order, then walks the
    order switching positions to the instance's symbols; marginal prediction
    gains land on the switched position.
    """
    predict = _as_predict_fn(model)
    x = np.asarray(x, dtype=np.int8).ravel()
    background = np.asarray(background, dtype=np.int8)
    l = len(x)
    if background.ndim != 2 or background.shape[1] != l:
        raise ValueError("background must be (b, l)")
    rng = np.random.default_rng(seed)
    totals = np.zeros(l)
    chunk = 1024
    done = 0
    while done < n_samples:
        c = min(chunk, n_samples - done)
        perms = rng.permuted(np.tile(np.arange(l), (c, 1)), axis=1)
        base = background[rng.integers(0, len(background), c)].copy()
        rows = np.empty((l + 1, c, l), dtype=np.int8)
        rows[0] = base
        lanes = np.arange(c)
        for j in range(l):
            base[lanes, perms[:, j]] = x[perms[:, j]]
            rows[j + 1] = base
        preds = predict(rows.reshape(-1, l)).reshape(l + 1, c)
        gains = preds[1:] - preds[:-1]  # (l, c) gain when slot j switched
        totals += np.bincount(perms.T.ravel(), weights=gains.ravel(), minlength=l)
        done += c
    scores = totals / n_samples
    return AttributionVector(tuple(scores.tolist()), explainer_id, instance_index)


def lime_local(
    model,
    x: np.ndarray,
    alphabet_size: int,
    cfg: ExplainerConfig = ExplainerConfig(),
    seed: int = 0,
    explainer_id: str = "lime",
    instance_index: int = -1,
) -> AttributionVector:
    """Local surrogate attribution: perturb positions, fit a weighted ridge
    on keep/flip indicators, read coefficients as scores.

    A degenerate neighborhood (no indicator variance) yields all-zero
    scores with a warning instead of an error.
    """
    predict = _as_predict_fn(model)
    x = np.asarray(x, dtype=np.int8).ravel()
    l = len(x)
    if alphabet_size < 2:
        raise ValueError("alphabet_size must be at least 2")
    rng = np.random.default_rng(seed)
    width = cfg.lime_kernel_width if cfg.lime_kernel_width is not None else 0.75 * math.sqrt(l)

    flips = rng.random((cfg.lime_samples, l)) < cfg.lime_flip_prob
    offsets = rng.integers(1, alphabet_size, size=(cfg.lime_samples, l), dtype=np.int16)
    flipped = ((x[None, :].astype(np.int16) + offsets) % alphabet_size).astype(np.int8)
    Z = np.where(flips, flipped, x[None, :])
    Z[0] = x  # anchor the neighborhood at the instance itself

    kept = (Z == x[None, :]).astype(np.float64)  # (n, l) indicator features
    if not np.any(kept != kept[0]):
        return AttributionVector(
            tuple([0.0] * l), explainer_id, instance_index,
            warning="degenerate neighborhood: indicators have no variance")
    hamming = l - kept.sum(axis=1)
    w = np.exp(-(hamming ** 2) / (width ** 2))

    preds = predict(Z)
    design = np.hstack([np.ones((len(Z), 1)), kept])  # unpenalized intercept
    wd = design * w[:, None]
    gram = design.T @ wd
    gram[1:, 1:] += cfg.lime_ridge * np.eye(l)
    rhs = wd.T @ preds
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        coef, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
    return AttributionVector(tuple(coef[1:].tolist()), explainer_id, instance_index)


@dataclass(frozen=True)
class AttributionRecord:
    index: int
    predicted_label: str
    scores: tuple[float, ...]


@dataclass(frozen=True)
class AttributionFile:
    dataset_sha256: str
    explainer: str
    model: str
    instances: tuple[AttributionRecord, ...]


def write_attributions(
    path: str | Path,
    dataset_sha256: str,
    explainer: str,
    model: str,
    records: list[AttributionRecord],
) -> Path:
    """Write the interchange JSON (atomically: temp file then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "dataset_sha256": dataset_sha256,
        "explainer": explainer,
        "model": model,
        "instances": [
            {
                "index": r.index,
                "predicted_label": r.predicted_label,
                "scores": [float(s) for s in r.scores],
            }
            for r in records
        ],
    }
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    return path


class AttributionFormatError(ValueError):
    pass


def read_attributions(path: str | Path) -> AttributionFile:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AttributionFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise AttributionFormatError(f"{path}: top level must be an object")
    for key in ("dataset_sha256", "explainer", "model", "instances"):
        if key not in payload:
            raise AttributionFormatError(f"{path}: missing key {key!r}")
    records = []
    for pos, item in enumerate(payload["instances"]):
        if not isinstance(item, dict):
            raise AttributionFormatError(f"{path}: instances[{pos}] must be an object")
        try:
            index = int(item["index"])
            label = item["predicted_label"]
            scores = tuple(float(s) for s in item["scores"])
        except (KeyError, TypeError, ValueError) as exc:
            raise AttributionFormatError(f"{path}: instances[{pos}] malformed ({exc})") from exc
        if label not in (POS, NEG):
            raise AttributionFormatError(
                f"{path}: instances[{pos}] label must be {POS} or {NEG}")
        records.append(AttributionRecord(index, label, scores))
    return AttributionFile(
        dataset_sha256=str(payload["dataset_sha256"]),
        explainer=str(payload["explainer"]),
        model=str(payload["model"]),
        instances=tuple(records),
    )
