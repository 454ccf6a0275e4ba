import pytest

from gtx.grammar import parse_grammar_text

# Binary block grammar used as the reference fixture throughout: structural
# symbols pair up two-character emissions, so yields are multiples of four.
BLOCK_GRAMMAR_TEXT = """\
start: S
S -> B B | N N | eps
B -> T T | Y Y | eps
N -> T Y | Y T | eps
T -> 1 1 | 0 0
Y -> 0 1 | 1 0
"""


@pytest.fixture(scope="session")
def block_grammar():
    return parse_grammar_text(BLOCK_GRAMMAR_TEXT)
