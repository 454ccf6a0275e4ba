import pytest

from gtx.grammar import (
    EGrammar,
    GrammarError,
    NONTERMINAL_RULE,
    Rule,
    TERMINAL_RULE,
    UnboundedParseTreesError,
    check_theorem1_preconditions,
    count_parse_trees,
    enumerate_parse_trees,
    g_complexity,
    parse_grammar_text,
    validate_egrammar,
)

from conftest import BLOCK_GRAMMAR_TEXT


class TestParsing:
    def test_block_grammar_shape(self, block_grammar):
        g = block_grammar
        assert g.start == "S"
        assert g.structural == frozenset("SBN")
        assert g.emitting == frozenset("TY")
        assert g.terminals == frozenset("01")
        assert g.nullable == frozenset("SBN")
        assert g.reachable == frozenset("SBNTY")

    def test_round_trip(self, block_grammar):
        again = parse_grammar_text(block_grammar.to_text())
        assert again == block_grammar
        assert again.sha256() == block_grammar.sha256()

    def test_comments_and_blank_lines(self):
        g = parse_grammar_text("""
# a tiny grammar
start: S
S -> A A | eps   # two blocks or nothing
A -> 0 1
""")
        assert g.start == "S"
        assert g_complexity(g) == 2

    def test_header_optional_first_lhs_is_start(self):
        g = parse_grammar_text("Q -> A A | eps\nA -> x y\n")
        assert g.start == "Q"

    def test_bracket_nonterminals(self):
        g = parse_grammar_text("[N0] -> [N1] [N1] | eps\n[N1] -> a b\n")
        assert g.start == "[N0]"
        assert g.structural == frozenset(["[N0]"])
        assert g.emitting == frozenset(["[N1]"])

    def test_duplicate_lhs_line_rejected(self):
        with pytest.raises(GrammarError, match="already has a rule line"):
            parse_grammar_text("S -> A A | eps\nA -> 0\nS -> eps\n")

    def test_undeclared_nonterminal_rejected(self):
        with pytest.raises(GrammarError, match="never declared"):
            parse_grammar_text("S -> A B | eps\nA -> 0\n")

    def test_reserved_mask_glyph_rejected(self):
        with pytest.raises(GrammarError, match="reserved"):
            parse_grammar_text("S -> A A | eps\nA -> . 0\n")

    def test_unreadable_symbol_rejected(self):
        with pytest.raises(GrammarError, match="cannot read symbol"):
            parse_grammar_text("S -> AB | eps\n")

    def test_error_carries_line_number(self):
        with pytest.raises(GrammarError) as err:
            parse_grammar_text("S -> A A | eps\nA -> 0\nS -> eps\n")
        assert err.value.line == 3


class TestValidation:
    def test_block_grammar_is_valid(self, block_grammar):
        assert validate_egrammar(block_grammar).ok

    def test_violations_are_collected_not_raised(self):
        # one-symbol and three-symbol nonterminal alternatives are both out
        g = EGrammar(
            structural=frozenset("S"),
            emitting=frozenset("A"),
            terminals=frozenset("0"),
            rules=(
                Rule("S", ("A",), NONTERMINAL_RULE),
                Rule("S", ("A", "A", "A"), NONTERMINAL_RULE),
                Rule("A", ("0",), TERMINAL_RULE),
            ),
            start="S",
        )
        report = validate_egrammar(g)
        assert not report.ok
        assert len(report.violations) == 2
        assert all("exactly two nonterminals" in v for v in report.violations)

    def test_empty_emission_is_a_violation(self):
        g = EGrammar(
            structural=frozenset("S"),
            emitting=frozenset("A"),
            terminals=frozenset("0"),
            rules=(
                Rule("S", ("A", "A"), NONTERMINAL_RULE),
                Rule("S", (), NONTERMINAL_RULE),
                Rule("A", (), TERMINAL_RULE),
            ),
            start="S",
        )
        report = validate_egrammar(g)
        assert any("empty string" in v for v in report.violations)

    def test_symbol_in_both_roles_is_a_violation(self):
        g = EGrammar(
            structural=frozenset("S"),
            emitting=frozenset("S"),
            terminals=frozenset("0"),
            rules=(
                Rule("S", (), NONTERMINAL_RULE),
                Rule("S", ("0",), TERMINAL_RULE),
            ),
            start="S",
        )
        report = validate_egrammar(g)
        assert any("both structural and emitting" in v for v in report.violations)


class TestComplexity:
    def test_block_grammar_complexity_is_ten(self, block_grammar):
        assert g_complexity(block_grammar) == 10

    def test_same_language_different_complexity(self):
        # two grammars for the strings {01, 10, 11}: one emits whole pairs
        # behind an epsilon partner, the other emits one character per symbol
        paired = parse_grammar_text("""start: S
S -> A B | C D | E F | eps
A -> eps
C -> eps
E -> eps
B -> 0 1
D -> 1 0
F -> 1 1
""")
        split = parse_grammar_text("""start: S
S -> A B | C D | E F | eps
A -> 0
B -> 1
C -> 1
D -> 0
E -> 1
F -> 1
""")
        assert g_complexity(paired) == 6
        assert g_complexity(split) == 9
        for s in ("01", "10", "11"):
            assert count_parse_trees(s, paired) == 1
            assert count_parse_trees(s, split) == 1
        assert count_parse_trees("00", paired) == 0
        assert count_parse_trees("00", split) == 0


class TestPreconditions:
    def test_block_grammar_passes(self, block_grammar):
        assert check_theorem1_preconditions(block_grammar).ok

    def test_duplicate_emission_fails(self):
        g = parse_grammar_text("S -> A B | eps\nA -> 1 1\nB -> 1 1\n")
        report = check_theorem1_preconditions(g)
        assert not report.ok
        assert any("duplicate emission" in p for p in report.problems)

    def test_mixed_emission_lengths_fail(self):
        g = parse_grammar_text("S -> A B | eps\nA -> 1\nB -> 1 1\n")
        report = check_theorem1_preconditions(g)
        assert not report.ok
        assert any("mixed emission lengths" in p for p in report.problems)


class TestParseCounting:
    FROZEN = [
        ("11000000", 1),
        ("11000110", 1),
        ("11000001", 0),
        ("11111111", 1),
        ("0110", 2),  # a full block plus an epsilon sibling, either side
        ("", 3),
    ]

    @pytest.mark.parametrize("s,count", FROZEN)
    def test_frozen_counts(self, block_grammar, s, count):
        assert count_parse_trees(s, block_grammar) == count

    @pytest.mark.parametrize("s,count", FROZEN)
    def test_enumeration_agrees(self, block_grammar, s, count):
        trees = enumerate_parse_trees(s, block_grammar)
        assert len(trees) == count
        for tree in trees:
            assert tree.yield_string() == s

    def test_enumeration_matches_counts_on_random_strings(self, block_grammar):
        import random

        rnd = random.Random(7)
        for _ in range(120):
            n = rnd.choice((0, 2, 4, 6, 8))
            s = "".join(rnd.choice("01") for _ in range(n))
            assert count_parse_trees(s, block_grammar) == \
                len(enumerate_parse_trees(s, block_grammar))

    def test_nullable_cycle_is_rejected(self):
        # S -> S A with nullable A admits unboundedly many trees for anything
        g = parse_grammar_text("S -> S A | eps\nA -> eps\nB -> 0 0\n")
        with pytest.raises(UnboundedParseTreesError):
            count_parse_trees("", g)

    def test_enumeration_rejects_nullable_cycle_too(self):
        g = parse_grammar_text("S -> S A | eps\nA -> eps\nB -> 0 0\n")
        with pytest.raises(UnboundedParseTreesError):
            enumerate_parse_trees("", g)

    def test_bounded_recursion_is_fine(self):
        # right recursion through an emitting partner consumes input, so
        # counts stay finite
        g = parse_grammar_text("S -> A S | eps\nA -> 0\n")
        assert count_parse_trees("000", g) == 1
        assert count_parse_trees("", g) == 1
        assert len(enumerate_parse_trees("0000", g)) == 1

    def test_length_guard(self, block_grammar):
        with pytest.raises(GrammarError, match="exceeds bound"):
            count_parse_trees("0" * 65, block_grammar)
