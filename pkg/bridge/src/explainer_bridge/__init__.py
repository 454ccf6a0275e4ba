"""Adapter that runs reference explainers over generated string datasets.

Reads a dataset CSV plus its metadata sidecar, trains a scikit-learn
random forest, runs TreeSHAP and LIME (the installed libraries when
available, built-in equivalents otherwise), and writes attribution files
in the interchange format the core scorer consumes.
"""

from .data import DatasetTable, load_dataset_table, file_sha256
from .runner import BridgeConfig, BridgeResult, run_reference_explainers

__all__ = [
    "BridgeConfig",
    "BridgeResult",
    "DatasetTable",
    "file_sha256",
    "load_dataset_table",
    "run_reference_explainers",
]
