"""Checks that explanation masks actually separate the classes.

A masked string is correct for a dataset when every dataset string agreeing
with it on all unmasked positions is positive.  `matches` keeps the naive
per-character definition; `verify_dataset` vectorizes the same scan over the
whole dataset (still a linear pass per mask, nothing indexed), and a test
holds the two routes equal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .derive import POS
from .grammar import MASK_GLYPH


def matches(pattern: str, s: str) -> bool:
    """Does `s` agree with `pattern` everywhere the pattern is not `.`?"""
    if len(pattern) != len(s):
        return False
    return all(p == MASK_GLYPH or p == c for p, c in zip(pattern, s))


def is_correct_explanation(pattern: str, dataset: Dataset) -> bool:
    """Correct means: no dataset string matches the pattern with a label
    other than positive.  A pattern matching nothing is vacuously correct."""
    for inst in dataset.instances:
        if matches(pattern, inst.string) and inst.label != POS:
            return False
    return True


@dataclass(frozen=True)
class VerificationReport:
    total_pos: int
    verified: int
    failures: tuple[tuple[int, int], ...]  # (positive index, witness index)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "total_pos": self.total_pos,
            "verified": self.verified,
            "failures": [list(f) for f in self.failures],
            "ok": self.ok,
        }

    def summary(self) -> str:
        if self.ok:
            return f"all {self.verified}/{self.total_pos} positive masks correct"
        return (f"{len(self.failures)} of {self.total_pos} positive masks fail; "
                f"first: instance {self.failures[0][0]} matched negative "
                f"instance {self.failures[0][1]}")


def verify_dataset(dataset: Dataset) -> VerificationReport:
    """Check every positive instance's mask against the whole dataset.

    A failure records the positive instance and the first negative instance
    matching its mask.
    """
    labels = np.array([inst.label == POS for inst in dataset.instances])
    neg_idx = np.flatnonzero(~labels)
    X, _ = dataset.encode()
    X_neg = X[neg_idx]

    total_pos = 0
    verified = 0
    failures: list[tuple[int, int]] = []
    for i, inst in enumerate(dataset.instances):
        if inst.label != POS:
            continue
        total_pos += 1
        cols = sorted(inst.explanation.covered)
        if len(neg_idx):
            hits = np.all(X_neg[:, cols] == X[i, cols], axis=1)
            if hits.any():
                failures.append((i, int(neg_idx[int(np.argmax(hits))])))
                continue
        verified += 1
    return VerificationReport(total_pos, verified, tuple(failures))


def verify_dataset_naive(dataset: Dataset) -> VerificationReport:
    """Reference implementation on plain `matches`; quadratic and only for
    cross-checking the vectorized path."""
    total_pos = 0
    verified = 0
    failures: list[tuple[int, int]] = []
    for i, inst in enumerate(dataset.instances):
        if inst.label != POS:
            continue
        total_pos += 1
        pattern = inst.masked_string()
        witness = next(
            (j for j, other in enumerate(dataset.instances)
             if other.label != POS and matches(pattern, other.string)), None)
        if witness is None:
            verified += 1
        else:
            failures.append((i, witness))
    return VerificationReport(total_pos, verified, tuple(failures))


def check_noise_free(dataset: Dataset) -> bool:
    """No string appears with both labels."""
    by_string: dict[str, str] = {}
    for inst in dataset.instances:
        prev = by_string.setdefault(inst.string, inst.label)
        if prev != inst.label:
            return False
    return True
