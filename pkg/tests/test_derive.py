import numpy as np
import pytest

from gtx.derive import (
    NEG,
    POS,
    Derivation,
    DerivationBudgetError,
    ExplanationMask,
    LabeledInstance,
    label_and_explain,
    leaf_spans,
    random_derive,
)
from gtx.grammar import enumerate_parse_trees


def only_tree(s, g):
    trees = enumerate_parse_trees(s, g)
    assert len(trees) == 1
    return trees[0]


class TestMask:
    def test_round_trip(self):
        mask = ExplanationMask.from_masked_string("..0001..")
        assert mask.covered == frozenset({2, 3, 4, 5})
        assert mask.to_masked_string("11000111") == "..0001.."

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            ExplanationMask(3, frozenset({3}))

    def test_length_mismatch_rejected(self):
        mask = ExplanationMask(4, frozenset({0}))
        with pytest.raises(ValueError, match="does not match"):
            mask.to_masked_string("00000")


class TestLabeledInstance:
    def test_positive_needs_mask(self):
        with pytest.raises(ValueError, match="non-empty"):
            LabeledInstance(POS, "0000", ExplanationMask(4, frozenset()))

    def test_negative_needs_no_mask(self):
        with pytest.raises(ValueError, match="empty mask"):
            LabeledInstance(NEG, "0000", ExplanationMask(4, frozenset({0})))

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError, match="label"):
            LabeledInstance("MAYBE", "0", ExplanationMask(1, frozenset()))


class TestLabeling:
    def test_repeated_rule_marks_its_positions(self, block_grammar):
        d = Derivation.from_tree(only_tree("11000000", block_grammar))
        inst = label_and_explain(d, threshold=2)
        assert inst.label == POS
        assert inst.masked_string() == "..000000"

    def test_higher_threshold_flips_to_negative(self, block_grammar):
        d = Derivation.from_tree(only_tree("11000000", block_grammar))
        inst = label_and_explain(d, threshold=3)
        assert inst.label == NEG
        assert inst.explanation.is_empty

    def test_all_rules_once_is_negative(self, block_grammar):
        d = Derivation.from_tree(only_tree("11000110", block_grammar))
        assert label_and_explain(d, threshold=2).label == NEG

    def test_threshold_zero_marks_everything_emitted(self, block_grammar):
        d = Derivation.from_tree(only_tree("11000000", block_grammar))
        inst = label_and_explain(d, threshold=0)
        assert inst.label == POS
        assert inst.masked_string() == "11000000"

    def test_negative_threshold_rejected(self, block_grammar):
        d = Derivation.from_tree(only_tree("11000000", block_grammar))
        with pytest.raises(ValueError):
            label_and_explain(d, -1)

    def test_leaf_spans_tile_the_string(self, block_grammar):
        tree = only_tree("11000110", block_grammar)
        spans = leaf_spans(tree)
        assert [(s, e) for _, s, e in spans] == [(0, 2), (2, 4), (4, 6), (6, 8)]


class TestRandomDerive:
    def test_yields_requested_length(self, block_grammar):
        rng = np.random.default_rng(5)
        for length in (0, 4, 8):
            d = random_derive(block_grammar, length, rng)
            assert len(d.text) == length

    def test_usage_matches_tree(self, block_grammar):
        rng = np.random.default_rng(17)
        for _ in range(200):
            d = random_derive(block_grammar, 8, rng)
            assert d.usage == d.tree.rule_usage()
            assert d.text == d.tree.yield_string()

    def test_impossible_length_raises(self, block_grammar):
        # this grammar only ever yields multiples of four
        rng = np.random.default_rng(0)
        with pytest.raises(DerivationBudgetError) as err:
            random_derive(block_grammar, 6, rng, max_attempts=200)
        assert err.value.length == 6
        assert err.value.attempts == 200

    def test_deterministic_under_seeded_rng(self, block_grammar):
        texts_a = [random_derive(block_grammar, 8, np.random.default_rng(42)).text
                   for _ in range(1)]
        texts_b = [random_derive(block_grammar, 8, np.random.default_rng(42)).text
                   for _ in range(1)]
        assert texts_a == texts_b
        rng1, rng2 = np.random.default_rng(9), np.random.default_rng(9)
        seq1 = [random_derive(block_grammar, 8, rng1).text for _ in range(25)]
        seq2 = [random_derive(block_grammar, 8, rng2).text for _ in range(25)]
        assert seq1 == seq2

    def test_both_labels_reachable(self, block_grammar):
        rng = np.random.default_rng(3)
        labels = {label_and_explain(random_derive(block_grammar, 8, rng), 2).label
                  for _ in range(300)}
        assert labels == {POS, NEG}

    def test_sampled_trees_parse_back(self, block_grammar):
        # every sampled derivation must be one of the string's actual parses
        rng = np.random.default_rng(11)
        for _ in range(40):
            d = random_derive(block_grammar, 4, rng)
            trees = enumerate_parse_trees(d.text, block_grammar)
            assert d.tree in trees
