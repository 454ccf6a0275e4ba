"""Random derivations and threshold labeling with exact explanation masks.

A string is positive when some emitting rule fires strictly more than the
threshold in its derivation; the explanation is the set of string positions
those over-threshold rules wrote.  Everything here works on one derivation;
dataset assembly lives in `dataset`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grammar import (
    EGrammar,
    GrammarError,
    MASK_GLYPH,
    NONTERMINAL_RULE,
    ParseTree,
    Rule,
    TERMINAL_RULE,
)

POS = "POS"
NEG = "NEG"


class DerivationBudgetError(RuntimeError):
    """No length-l string found within the per-string attempt budget."""

    def __init__(self, length: int, attempts: int):
        super().__init__(f"no length-{length} derivation in {attempts} attempts")
        self.length = length
        self.attempts = attempts


@dataclass(frozen=True)
class ExplanationMask:
    """Positions of a string that an explanation pins down."""

    length: int
    covered: frozenset[int]

    def __post_init__(self):
        if any(i < 0 or i >= self.length for i in self.covered):
            raise ValueError("mask position out of range")

    @property
    def is_empty(self) -> bool:
        return not self.covered

    def to_masked_string(self, source: str) -> str:
        """Render against the string it explains, don't-cares as `.`."""
        if len(source) != self.length:
            raise ValueError("mask length does not match string")
        return "".join(c if i in self.covered else MASK_GLYPH
                       for i, c in enumerate(source))

    @classmethod
    def from_masked_string(cls, masked: str) -> "ExplanationMask":
        return cls(len(masked), frozenset(
            i for i, c in enumerate(masked) if c != MASK_GLYPH))


@dataclass(frozen=True)
class LabeledInstance:
    label: str
    string: str
    explanation: ExplanationMask

    def __post_init__(self):
        if self.label not in (POS, NEG):
            raise ValueError(f"label must be {POS} or {NEG}")
        if self.explanation.length != len(self.string):
            raise ValueError("explanation length does not match string")
        if self.label == NEG and not self.explanation.is_empty:
            raise ValueError("negative instances carry an empty mask")
        if self.label == POS and self.explanation.is_empty:
            raise ValueError("positive instances need a non-empty mask")

    def masked_string(self) -> str:
        return self.explanation.to_masked_string(self.string)


class Derivation:
    """A parse tree together with its yield and per-rule usage counts.

    The tree is frozen lazily: labeling only reads `usage` and `text`, and
    most sampled derivations are discarded before anyone needs the tree.
    """

    __slots__ = ("text", "usage", "_tree", "_root")

    def __init__(self, text: str, usage: dict[Rule, int],
                 tree: ParseTree | None = None, root: "_Node | None" = None):
        if tree is None and root is None:
            raise ValueError("need a tree or a pending root")
        self.text = text
        self.usage = usage
        self._tree = tree
        self._root = root

    @property
    def tree(self) -> ParseTree:
        if self._tree is None:
            self._tree = self._root.freeze()
            self._root = None
        return self._tree

    @classmethod
    def from_tree(cls, tree: ParseTree) -> "Derivation":
        return cls(tree.yield_string(), tree.rule_usage(), tree=tree)


def leaf_spans(tree: ParseTree) -> list[tuple[Rule, int, int]]:
    """(rule, start, end) for each emitting leaf, left to right."""
    spans = []
    offset = 0
    for node in tree.walk():
        if node.rule.kind == TERMINAL_RULE:
            spans.append((node.rule, offset, offset + len(node.text)))
            offset += len(node.text)
    return spans


def label_and_explain(d: Derivation, threshold: int) -> LabeledInstance:
    """Label a derivation and, when positive, mask the positions written by
    every rule used strictly more than `threshold` times."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    over = {rule for rule, count in d.usage.items()
            if rule.kind == TERMINAL_RULE and count > threshold}
    covered: set[int] = set()
    if over:
        for rule, start, end in leaf_spans(d.tree):
            if rule in over:
                covered.update(range(start, end))
    label = POS if over else NEG
    return LabeledInstance(label, d.text, ExplanationMask(len(d.text), frozenset(covered)))


class _Node:
    """Mutable tree node used while a derivation is being grown; children may
    already be frozen ParseTrees (canonical epsilon completions)."""

    __slots__ = ("symbol", "rule", "children", "text")

    def __init__(self, symbol: str):
        self.symbol = symbol
        self.rule: Rule | None = None
        self.children: list = []
        self.text = ""

    def freeze(self) -> ParseTree:
        stack = [(self, False)]
        done: dict[int, ParseTree] = {}
        while stack:
            node, expanded = stack.pop()
            if expanded:
                kids = tuple(
                    c if isinstance(c, ParseTree) else done[id(c)]
                    for c in node.children)
                done[id(node)] = ParseTree(node.symbol, node.rule, kids, node.text)
            else:
                stack.append((node, True))
                stack.extend((c, False) for c in node.children
                             if not isinstance(c, ParseTree))
        return done[id(self)]


def _node_yield(root: _Node) -> str:
    parts: list[str] = []
    stack: list = [root]
    while stack:
        node = stack.pop()
        if isinstance(node, ParseTree):
            continue  # epsilon completion, yields nothing
        if node.text:
            parts.append(node.text)
        else:
            stack.extend(reversed(node.children))
    return "".join(parts)


class _UniformPool:
    """Uniform variates drawn from a Generator in blocks; sampling a rule per
    expansion step is the hot path and per-call Generator overhead dominates
    it otherwise."""

    __slots__ = ("rng", "buf", "pos")
    BLOCK = 256

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf = rng.random(self.BLOCK)
        self.pos = 0

    def next_index(self, n: int) -> int:
        if self.pos == len(self.buf):
            self.buf = self.rng.random(self.BLOCK)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return int(u * n)  # u < 1, so this never reaches n


def _minimal_epsilon_trees(g: EGrammar) -> dict[str, ParseTree]:
    """One canonical epsilon subtree per nullable symbol (smallest, built
    greedily in rule order) so epsilon completion never consults the RNG."""
    trees: dict[str, ParseTree] = {}
    declaration_order = list(dict.fromkeys(r.lhs for r in g.rules))
    changed = True
    while changed:
        changed = False
        for sym in declaration_order:
            if sym in trees:
                continue
            for rule in g.rules_by_lhs.get(sym, ()):
                if rule.kind != NONTERMINAL_RULE:
                    continue
                if rule.is_epsilon:
                    trees[sym] = ParseTree(sym, rule)
                elif all(s in trees for s in rule.rhs):
                    trees[sym] = ParseTree(sym, rule, tuple(trees[s] for s in rule.rhs))
                else:
                    continue
                changed = True
                break
    return trees


_TABLE_CACHE: dict[int, tuple] = {}


def _derivation_tables(g: EGrammar) -> tuple:
    """Per-grammar constants for the sampler, cached on the grammar object."""
    key = id(g)
    hit = _TABLE_CACHE.get(key)
    if hit is not None and hit[0] is g:
        return hit[1]
    eps_trees = _minimal_epsilon_trees(g)
    eps_usage = {sym: tree.rule_usage() for sym, tree in eps_trees.items()}
    tables = (eps_trees, eps_usage)
    if len(_TABLE_CACHE) > 64:
        _TABLE_CACHE.clear()
    _TABLE_CACHE[key] = (g, tables)
    return tables


def random_derive(
    g: EGrammar,
    length: int,
    rng: np.random.Generator,
    max_attempts: int = 1000,
) -> Derivation:
    """Draw a uniform-rule random derivation whose yield has exactly `length`
    terminals.

    Emitting nonterminals in the sentential form expand first (leftmost),
    then structural ones; each expansion picks uniformly among the symbol's
    alternatives.  Attempts that overshoot the length, stall, or run out of
    steps are restarted; after `max_attempts` restarts the budget error is
    raised.  When the emitted count reaches `length` early and every pending
    nonterminal is nullable, the form is closed with canonical epsilon trees.
    """
    if length < 0:
        raise ValueError("length must be non-negative")
    eps_trees, eps_usage = _derivation_tables(g)
    rules_by_lhs = g.rules_by_lhs
    emitting = g.emitting
    pool = _UniformPool(rng)
    step_budget = 16 * (length + 4)

    for _ in range(max_attempts):
        root = _Node(g.start)
        pending: list[_Node] = [root]
        emitted = 0
        usage: dict[Rule, int] = {}
        ok = True
        for _ in range(step_budget):
            if emitted == length:
                if all(n.symbol in eps_trees for n in pending):
                    break
                ok = False
                break
            if not pending:  # emitted < length and nothing left to expand
                ok = False
                break
            idx = 0
            for i, n in enumerate(pending):
                if n.symbol in emitting:
                    idx = i
                    break
            node = pending[idx]
            alts = rules_by_lhs.get(node.symbol)
            if not alts:
                raise GrammarError(f"{node.symbol!r} has no rules")
            rule = alts[pool.next_index(len(alts))] if len(alts) > 1 else alts[0]
            node.rule = rule
            usage[rule] = usage.get(rule, 0) + 1
            if rule.kind == TERMINAL_RULE:
                node.text = "".join(rule.rhs)
                emitted += len(rule.rhs)
                if emitted > length:
                    ok = False
                    break
                pending.pop(idx)
            elif rule.is_epsilon:
                pending.pop(idx)
            else:
                node.children = [_Node(s) for s in rule.rhs]
                pending[idx:idx + 1] = node.children
        else:
            ok = False  # step budget exhausted
        if not ok or emitted != length:
            continue
        for node in pending:
            done = eps_trees[node.symbol]
            node.rule = done.rule
            node.children = list(done.children)
            for r, c in eps_usage[node.symbol].items():
                usage[r] = usage.get(r, 0) + c
        return Derivation(_node_yield(root), usage, root=root)
    raise DerivationBudgetError(length, max_attempts)
