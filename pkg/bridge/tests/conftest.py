import subprocess
import sys

import pytest

# Reference grammar: paired two-character emissions behind three structural
# symbols; its length-8 language has 128 strings, 20 positive at threshold 2.
BLOCK_GRAMMAR_TEXT = """\
start: S
S -> B B | N N | eps
B -> T T | Y Y | eps
N -> T Y | Y T | eps
T -> 1 1 | 0 0
Y -> 0 1 | 1 0
"""


def run_core(*args: str) -> subprocess.CompletedProcess:
    """Invoke the core toolkit CLI in a subprocess (file formats are the contract)."""
    return subprocess.run([sys.executable, "-m", "gtx.cli", *args],
                          capture_output=True, text=True)


@pytest.fixture(scope="session")
def block_dataset(tmp_path_factory):
    """A labeled dataset file (plus sidecar) produced by the core generator."""
    root = tmp_path_factory.mktemp("data")
    grammar = root / "block.txt"
    grammar.write_text(BLOCK_GRAMMAR_TEXT)
    dataset = root / "block_l8.csv"
    proc = run_core("gen-dataset", "--grammar", str(grammar), "--length", "8",
                    "--threshold", "2", "--size", "120", "--ratio", "0.1:0.3",
                    "--seed", "11", "-o", str(dataset))
    assert proc.returncode == 0, proc.stderr
    return dataset
