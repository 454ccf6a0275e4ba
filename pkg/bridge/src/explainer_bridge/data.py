"""Dataset file loading and ordinal encoding.

The bridge consumes only the published file formats: a CSV with
`label,string,explanation` rows and a JSON metadata sidecar named
`<dataset>.meta.json`.  Ground-truth explanation columns are never read;
scoring happens elsewhere and the bridge must stay blind to the answer.
"""

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

POS = "POS"
NEG = "NEG"


class DatasetFormatError(ValueError):
    pass


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def meta_path_for(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


@dataclass(frozen=True)
class DatasetTable:
    """Strings and labels from one dataset file, plus the declared alphabet."""

    path: Path
    sha256: str
    alphabet: tuple[str, ...]
    strings: tuple[str, ...]
    labels: np.ndarray  # 1 for POS, 0 for NEG

    @property
    def string_length(self) -> int:
        return len(self.strings[0])

    def encode(self) -> np.ndarray:
        """One ordinal feature per position, codes in declared alphabet order."""
        codes = {sym: i for i, sym in enumerate(self.alphabet)}
        out = np.empty((len(self.strings), self.string_length), dtype=np.int64)
        for r, s in enumerate(self.strings):
            for c, sym in enumerate(s):
                code = codes.get(sym)
                if code is None:
                    raise DatasetFormatError(
                        f"unknown symbol {sym!r} at row {r}, position {c} "
                        f"(alphabet {list(self.alphabet)})")
                out[r, c] = code
        return out


def load_dataset_table(path) -> DatasetTable:
    """Read strings and labels; requires the metadata sidecar for the alphabet."""
    path = Path(path)
    if not path.is_file():
        raise DatasetFormatError(f"{path}: no such dataset file")
    mp = meta_path_for(path)
    if not mp.is_file():
        raise DatasetFormatError(f"{mp}: metadata sidecar is missing")
    meta = json.loads(mp.read_text(encoding="utf-8"))
    alphabet = meta.get("alphabet")
    if not alphabet:
        raise DatasetFormatError(f"{mp}: sidecar declares no alphabet")

    text = path.read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:2] != ["label", "string"]:
        raise DatasetFormatError(f"{path}: expected a label,string,... header")
    strings: list[str] = []
    labels: list[int] = []
    length = None
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) < 2:
            raise DatasetFormatError(f"{path}:{lineno}: expected label and string")
        label, s = row[0], row[1]
        if label not in (POS, NEG):
            raise DatasetFormatError(f"{path}:{lineno}: label must be POS or NEG")
        if length is None:
            length = len(s)
        elif len(s) != length:
            raise DatasetFormatError(f"{path}:{lineno}: mixed string lengths")
        strings.append(s)
        labels.append(1 if label == POS else 0)
    if not strings:
        raise DatasetFormatError(f"{path}: no instances")

    return DatasetTable(
        path=path,
        sha256=file_sha256(path),
        alphabet=tuple(alphabet),
        strings=tuple(strings),
        labels=np.array(labels, dtype=np.int64),
    )
