"""Random grammars with an exact complexity budget.

Pair rules draw (lhs, B, C) uniformly without replacement from the full
space, then a repair pass swaps tail draws for connector rules until every
symbol is reachable from the start; connectors chain off the start symbol
so they cannot orphan each other.  Every structural symbol keeps an epsilon
alternative, emissions are pairwise distinct with one common length, and
the non-epsilon rule count lands exactly on the requested complexity.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .grammar import EGrammar, NONTERMINAL_RULE, Rule, TERMINAL_RULE

_GLYPHS = "0123456789abcdefghijklmnopqrstuvwxyz"
_EMITTING_COUNT = 2


class InfeasibleSpecError(ValueError):
    pass


@dataclass(frozen=True)
class GrammarSpec:
    num_nonterminals: int
    target_g_complexity: int
    alphabet_size: int = 2
    terminal_rhs_length: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.num_nonterminals < 3:
            raise ValueError("need at least 3 nonterminals (1 structural + 2 emitting)")
        if self.target_g_complexity < 1:
            raise ValueError("target_g_complexity must be positive")
        if not (2 <= self.alphabet_size <= len(_GLYPHS)):
            raise ValueError(f"alphabet_size must be in [2, {len(_GLYPHS)}]")
        if self.terminal_rhs_length < 1:
            raise ValueError("terminal_rhs_length must be positive")


def _names(count: int) -> list[str]:
    pool = ["S"] + [c for c in "ABCDEFGHIJKLMNOPQRSTUVWXYZ" if c != "S"]
    pool += [f"[N{i}]" for i in range(count)]
    return pool[:count]


def _reachable(start: str, names: list[str], triples) -> set[str]:
    by_lhs: dict[str, list[tuple[str, str]]] = {n: [] for n in names}
    for lhs, b, c in triples:
        by_lhs[lhs].append((b, c))
    seen = {start}
    frontier = [start]
    while frontier:
        sym = frontier.pop()
        for b, c in by_lhs.get(sym, ()):
            for nxt in (b, c):
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
    return seen


def synth_egrammar(spec: GrammarSpec) -> EGrammar:
    """Build a random e-grammar with exactly `target_g_complexity` non-epsilon
    rules, deterministic in `spec.seed`."""
    nt = _EMITTING_COUNT
    nv = spec.num_nonterminals - nt
    m = spec.target_g_complexity
    emission_space = spec.alphabet_size ** spec.terminal_rhs_length
    names = _names(spec.num_nonterminals)
    structural = names[:nv]
    emitting = names[nv:]
    alphabet = list(_GLYPHS[:spec.alphabet_size])

    pair_space = [(lhs, b, c)
                  for lhs in structural for b in names for c in names]
    # worst-case repair: one connector per symbol beyond the start
    mandatory = spec.num_nonterminals - 1
    rt = min(emission_space, max(nt, round(m / 5)))
    rp = m - rt
    if rp > len(pair_space):
        rt = m - len(pair_space)
        rp = len(pair_space)
    if rt > emission_space:
        raise InfeasibleSpecError(
            f"complexity {m} needs {rt} emitting rules but only "
            f"{emission_space} distinct emissions exist "
            f"({spec.alphabet_size}^{spec.terminal_rhs_length})")
    if rp < mandatory or rt < nt:
        raise InfeasibleSpecError(
            f"complexity {m} too small for {spec.num_nonterminals} nonterminals "
            f"(needs at least {mandatory + nt} non-epsilon rules)")

    rng = np.random.default_rng(spec.seed)

    pool = list(itertools.product(alphabet, repeat=spec.terminal_rhs_length))
    picked = [pool[i] for i in rng.permutation(len(pool))[:rt]]
    emission_rules: dict[str, list[Rule]] = {sym: [] for sym in emitting}
    for j, rhs in enumerate(picked):
        sym = emitting[j % nt]
        emission_rules[sym].append(Rule(sym, rhs, TERMINAL_RULE))

    draws = [pair_space[i] for i in rng.permutation(len(pair_space))[:rp]]
    connectors: list[tuple[str, str, str]] = []
    # lhs of a connector comes from the start symbol or an earlier connector's
    # target, so dropping uniform draws can never orphan the repair chain
    chain_supported = {"S"}
    while True:
        reach = _reachable("S", names, draws + connectors)
        missing = [sym for sym in names if sym not in reach]
        if not missing:
            break
        target = missing[0]
        safe = [sym for sym in structural if sym in reach and sym in chain_supported]
        lhs = safe[int(rng.integers(len(safe)))]
        partner = names[int(rng.integers(len(names)))]
        rhs_pair = (target, partner) if rng.integers(2) == 0 else (partner, target)
        connectors.append((lhs, rhs_pair[0], rhs_pair[1]))
        chain_supported.add(target)
        if partner in structural:
            chain_supported.add(partner)
        if len(draws) + len(connectors) > rp:
            draws.pop()

    pair_rules: dict[str, list[Rule]] = {sym: [] for sym in structural}
    for lhs, b, c in draws + connectors:
        pair_rules[lhs].append(Rule(lhs, (b, c), NONTERMINAL_RULE))

    rules: list[Rule] = []
    for sym in structural:
        rules.extend(pair_rules[sym])
        rules.append(Rule(sym, (), NONTERMINAL_RULE))
    for sym in emitting:
        rules.extend(emission_rules[sym])

    return EGrammar(
        structural=frozenset(structural),
        emitting=frozenset(emitting),
        terminals=frozenset(alphabet),
        rules=tuple(rules),
        start="S",
    )
