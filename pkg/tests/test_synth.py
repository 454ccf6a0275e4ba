import numpy as np
import pytest

from gtx.derive import random_derive
from gtx.grammar import check_theorem1_preconditions, g_complexity, validate_egrammar
from gtx.synth import GrammarSpec, InfeasibleSpecError, synth_egrammar


class TestSpecValidation:
    def test_too_few_nonterminals(self):
        with pytest.raises(ValueError, match="at least 3"):
            GrammarSpec(2, 10)

    def test_bad_alphabet_size(self):
        with pytest.raises(ValueError, match="alphabet_size"):
            GrammarSpec(8, 40, alphabet_size=1)

    def test_bad_complexity(self):
        with pytest.raises(ValueError, match="positive"):
            GrammarSpec(8, 0)


class TestConstruction:
    @pytest.mark.parametrize("m", [20, 30, 40, 50, 60])
    def test_exact_complexity(self, m):
        g = synth_egrammar(GrammarSpec(8, m, 2, 2, seed=m))
        assert g_complexity(g) == m

    @pytest.mark.parametrize("seed", range(6))
    def test_valid_and_precondition_clean(self, seed):
        g = synth_egrammar(GrammarSpec(8, 40, 2, 2, seed=seed))
        assert validate_egrammar(g).ok
        assert check_theorem1_preconditions(g).ok

    @pytest.mark.parametrize("seed", range(6))
    def test_everything_reachable(self, seed):
        g = synth_egrammar(GrammarSpec(8, 35, 2, 2, seed=seed))
        assert g.reachable == g.nonterminals

    def test_every_structural_symbol_nullable(self):
        g = synth_egrammar(GrammarSpec(8, 40, 2, 2, seed=3))
        assert g.nullable == g.structural

    def test_deterministic(self):
        a = synth_egrammar(GrammarSpec(8, 40, 2, 2, seed=9))
        b = synth_egrammar(GrammarSpec(8, 40, 2, 2, seed=9))
        assert a == b
        assert a.to_text() == b.to_text()

    def test_seeds_vary_the_draw(self):
        texts = {synth_egrammar(GrammarSpec(8, 40, 2, 2, seed=s)).to_text()
                 for s in range(5)}
        assert len(texts) > 1

    def test_wider_alphabet(self):
        g = synth_egrammar(GrammarSpec(8, 40, 4, 2, seed=1))
        assert len(g.terminals) == 4
        assert g_complexity(g) == 40

    def test_bracket_names_after_alphabet(self):
        # enough nonterminals to exhaust single letters
        g = synth_egrammar(GrammarSpec(30, 120, 2, 2, seed=0))
        assert any(name.startswith("[") for name in g.nonterminals)
        assert validate_egrammar(g).ok


class TestFeasibility:
    def test_not_enough_emissions(self):
        # three nonterminals leave little pair space, and alphabet 2 with
        # two-character emissions caps the emitting side at four rules
        with pytest.raises(InfeasibleSpecError, match="emissions exist"):
            synth_egrammar(GrammarSpec(3, 20, 2, 2, seed=0))

    def test_single_character_emissions_are_fine(self):
        g = synth_egrammar(GrammarSpec(8, 40, 2, 1, seed=0))
        assert g_complexity(g) == 40
        assert check_theorem1_preconditions(g).ok

    def test_complexity_too_small_for_symbols(self):
        with pytest.raises(InfeasibleSpecError, match="too small"):
            synth_egrammar(GrammarSpec(12, 10, 2, 2, seed=0))


class TestDerivability:
    @pytest.mark.parametrize("seed", range(4))
    def test_sweep_grammars_hit_common_lengths(self, seed):
        g = synth_egrammar(GrammarSpec(8, 40, 2, 2, seed=seed))
        rng = np.random.default_rng(100 + seed)
        for length in (12, 20, 30):
            d = random_derive(g, length, rng)
            assert len(d.text) == length
            assert d.usage == d.tree.rule_usage()
