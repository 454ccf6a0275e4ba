"""Scoring attributions against ground truth, plus the small statistics the
experiment tables need (rank AUC, Pearson correlation).

The k-accuracy gate is deliberately narrow: an attribution is scored only
when the model predicted positive and the ground-truth label is positive,
because only there does the dataset pin down which positions matter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .derive import POS, ExplanationMask
from .explainers import AttributionFile


class ScoreMismatchError(ValueError):
    """Attribution file does not belong to the dataset it is scored against."""


def top_k_mask(scores, k: int, by_magnitude: bool = False) -> ExplanationMask:
    """Positions of the k best scores; ties resolve to the lowest index.

    Scores are read signed toward the positive class by default; set
    `by_magnitude` to rank on absolute value instead.
    """
    arr = np.asarray(scores, dtype=np.float64).ravel()
    if not (1 <= k <= len(arr)):
        raise ValueError(f"k must be in [1, {len(arr)}]")
    key = np.abs(arr) if by_magnitude else arr
    order = np.argsort(-key, kind="stable")  # stable keeps equal scores in index order
    return ExplanationMask(len(arr), frozenset(int(i) for i in order[:k]))


def k_accuracy(predicted: ExplanationMask, truth: ExplanationMask, k: int) -> float:
    """|top-k positions that are truly relevant| / k."""
    if predicted.length != truth.length:
        raise ValueError("masks cover strings of different lengths")
    if len(predicted.covered) != k:
        raise ValueError(f"predicted mask must cover exactly {k} positions")
    if truth.is_empty:
        raise ValueError("ground-truth mask is empty; nothing to score against")
    return len(predicted.covered & truth.covered) / k


@dataclass(frozen=True)
class KAccuracySummary:
    k: int
    explainer: str
    per_instance: tuple[tuple[int, float], ...]  # (dataset index, accuracy)
    num_scored: int
    num_skipped: int
    mean: float | None
    std: float | None

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "explainer": self.explainer,
            "num_scored": self.num_scored,
            "num_skipped": self.num_skipped,
            "mean": self.mean,
            "std": self.std,
            "per_instance": [list(p) for p in self.per_instance],
        }


def score_attributions(
    dataset: Dataset,
    attr: AttributionFile,
    k: int,
    dataset_sha256: str | None = None,
    by_magnitude: bool = False,
) -> KAccuracySummary:
    """k-accuracy of an attribution file against its dataset.

    The file's dataset hash must equal `dataset_sha256` (or the in-memory
    dataset's own CSV hash when not given).  Instances are scored only when
    both the recorded prediction and the true label are positive; everything
    else counts as skipped.
    """
    expect = dataset_sha256 if dataset_sha256 is not None else dataset.sha256()
    if attr.dataset_sha256 != expect:
        raise ScoreMismatchError(
            f"attribution file was made for dataset {attr.dataset_sha256[:12]}..., "
            f"not {expect[:12]}...")
    scored: list[tuple[int, float]] = []
    skipped = 0
    for record in attr.instances:
        if not (0 <= record.index < len(dataset.instances)):
            raise ScoreMismatchError(f"instance index {record.index} out of range")
        inst = dataset.instances[record.index]
        if len(record.scores) != dataset.string_length:
            raise ScoreMismatchError(
                f"instance {record.index}: {len(record.scores)} scores for "
                f"length-{dataset.string_length} strings")
        if record.predicted_label != POS or inst.label != POS:
            skipped += 1
            continue
        mask = top_k_mask(record.scores, k, by_magnitude=by_magnitude)
        scored.append((record.index, k_accuracy(mask, inst.explanation, k)))
    if scored:
        vals = np.array([v for _, v in scored])
        mean, std = float(vals.mean()), float(vals.std())
    else:
        mean = std = None
    return KAccuracySummary(
        k=k,
        explainer=attr.explainer,
        per_instance=tuple(scored),
        num_scored=len(scored),
        num_skipped=skipped,
        mean=mean,
        std=std,
    )


class DegenerateStatisticError(ValueError):
    pass


def auc(scores, labels) -> float:
    """Rank AUC (Mann-Whitney with midrank ties): probability a positive
    outranks a negative."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(bool)
    if len(s) != len(y):
        raise ValueError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateStatisticError("AUC needs both classes")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s))
    sorted_s = s[order]
    # midranks over tie groups
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = float(ranks[y].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def pearson(xs, ys) -> float:
    x = np.asarray(xs, dtype=np.float64).ravel()
    y = np.asarray(ys, dtype=np.float64).ravel()
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need two same-length samples of size >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = float(np.sqrt((xc ** 2).sum() * (yc ** 2).sum()))
    if denom == 0.0:
        raise DegenerateStatisticError("zero variance; correlation undefined")
    return float((xc * yc).sum() / denom)
