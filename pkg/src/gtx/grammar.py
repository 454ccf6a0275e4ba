"""Explanation grammars: parsing, validation, complexity, parse-tree counting.

An explanation grammar is a CFG whose nonterminals split into two disjoint
groups: structural symbols whose rules emit exactly two nonterminals or
epsilon, and emitting symbols whose rules produce non-empty terminal strings.
That shape is what makes per-instance explanation ground truth extractable
from a derivation, so everything downstream leans on `validate_egrammar`.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

EPSILON_TOKEN = "eps"
MASK_GLYPH = "."  # reserved for don't-care positions in masked strings

NONTERMINAL_RULE = "nonterminal"
TERMINAL_RULE = "terminal"

_BRACKET_NT = re.compile(r"^\[\w+\]$")
_HEADER = re.compile(r"^start\s*:\s*(\S+)\s*$")


class GrammarError(ValueError):
    """Malformed grammar text or an operation a grammar cannot support."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{message} ({where})"
        super().__init__(message)
        self.line = line
        self.column = column


class UnboundedParseTreesError(GrammarError):
    """The grammar admits infinitely many parse trees for some string."""


@dataclass(frozen=True)
class Rule:
    """One alternative `lhs -> rhs`; empty rhs means epsilon."""

    lhs: str
    rhs: tuple[str, ...]
    kind: str  # NONTERMINAL_RULE or TERMINAL_RULE

    @property
    def is_epsilon(self) -> bool:
        return not self.rhs

    def rhs_text(self) -> str:
        return EPSILON_TOKEN if self.is_epsilon else " ".join(self.rhs)

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.rhs_text()}"


@dataclass(frozen=True)
class ParseTree:
    """A derivation tree node; `text` is non-empty only at emitting leaves."""

    symbol: str
    rule: Rule
    children: tuple["ParseTree", ...] = ()
    text: str = ""

    def yield_string(self) -> str:
        return "".join(node.text for node in self.walk())

    def walk(self) -> Iterator["ParseTree"]:
        """Left-to-right depth-first traversal, iterative to spare the stack."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def rule_usage(self) -> dict[Rule, int]:
        usage: dict[Rule, int] = {}
        for node in self.walk():
            usage[node.rule] = usage.get(node.rule, 0) + 1
        return usage


@dataclass(frozen=True)
class EGrammar:
    structural: frozenset[str]  # nonterminals with pair-or-epsilon rules
    emitting: frozenset[str]  # nonterminals with terminal-string rules
    terminals: frozenset[str]
    rules: tuple[Rule, ...]
    start: str

    @property
    def nonterminals(self) -> frozenset[str]:
        return self.structural | self.emitting

    @cached_property
    def rules_by_lhs(self) -> dict[str, tuple[Rule, ...]]:
        grouped: dict[str, list[Rule]] = {}
        for rule in self.rules:
            grouped.setdefault(rule.lhs, []).append(rule)
        return {lhs: tuple(alts) for lhs, alts in grouped.items()}

    @cached_property
    def nullable(self) -> frozenset[str]:
        """Nonterminals that can derive the empty string."""
        nullable: set[str] = set()
        changed = True
        while changed:
            changed = False
            for rule in self.rules:
                if rule.lhs in nullable or rule.kind != NONTERMINAL_RULE:
                    continue
                if rule.is_epsilon or all(s in nullable for s in rule.rhs):
                    nullable.add(rule.lhs)
                    changed = True
        return frozenset(nullable)

    @cached_property
    def reachable(self) -> frozenset[str]:
        seen = {self.start}
        frontier = [self.start]
        while frontier:
            sym = frontier.pop()
            for rule in self.rules_by_lhs.get(sym, ()):
                if rule.kind != NONTERMINAL_RULE:
                    continue
                for nxt in rule.rhs:
                    if nxt not in seen:
                        seen.add(nxt)
                        frontier.append(nxt)
        return frozenset(seen)

    def to_text(self) -> str:
        """Canonical text form; parses back to an equal grammar."""
        lines = [f"start: {self.start}"]
        order: list[str] = []
        for rule in self.rules:
            if rule.lhs not in order:
                order.append(rule.lhs)
        for lhs in order:
            alts = " | ".join(r.rhs_text() for r in self.rules_by_lhs[lhs])
            lines.append(f"{lhs} -> {alts}")
        return "\n".join(lines) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()


def _classify_token(token: str, line: int, col: int) -> tuple[str, bool]:
    """Return (symbol, is_nonterminal); raises on reserved or unreadable tokens."""
    if _BRACKET_NT.match(token):
        return token, True
    if len(token) == 1 and token.isupper():
        return token, True
    if len(token) == 1:
        if token == MASK_GLYPH:
            raise GrammarError(f"{MASK_GLYPH!r} is reserved for masks", line, col)
        if not token.isprintable():
            raise GrammarError(f"unprintable terminal {token!r}", line, col)
        return token, False
    raise GrammarError(f"cannot read symbol {token!r}", line, col)


def parse_grammar_text(text: str) -> EGrammar:
    """Parse the plain-text rule format.

    One nonterminal per line, alternatives joined by `|`, tokens separated by
    whitespace, `eps` for the empty alternative, `#` starts a comment.  The
    first lhs is the start symbol unless a `start: X` header says otherwise.
    """
    rules: list[Rule] = []
    declared: list[str] = []
    header_start: str | None = None
    rhs_nonterminals: list[tuple[str, int, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        header = _HEADER.match(line.strip())
        if header:
            if header_start is not None:
                raise GrammarError("duplicate start header", lineno)
            header_start = header.group(1)
            continue
        if "->" not in line:
            raise GrammarError("expected `lhs -> alternatives`", lineno)
        lhs_text, rhs_text = line.split("->", 1)
        lhs_tokens = lhs_text.split()
        if len(lhs_tokens) != 1:
            raise GrammarError("left side must be a single nonterminal", lineno, 1)
        lhs, lhs_is_nt = _classify_token(lhs_tokens[0], lineno, 1)
        if not lhs_is_nt:
            raise GrammarError(f"terminal {lhs!r} cannot head a rule", lineno, 1)
        if lhs in declared:
            raise GrammarError(f"{lhs!r} already has a rule line", lineno, 1)
        declared.append(lhs)
        for alt in rhs_text.split("|"):
            tokens = alt.split()
            if not tokens:
                raise GrammarError("empty alternative", lineno)
            if tokens == [EPSILON_TOKEN]:
                rules.append(Rule(lhs, (), NONTERMINAL_RULE))
                continue
            symbols = []
            any_nt = False
            for tok in tokens:
                col = raw.find(tok) + 1
                sym, is_nt = _classify_token(tok, lineno, col)
                if is_nt:
                    any_nt = True
                    rhs_nonterminals.append((sym, lineno, col))
                symbols.append(sym)
            kind = NONTERMINAL_RULE if any_nt else TERMINAL_RULE
            rules.append(Rule(lhs, tuple(symbols), kind))

    if not rules:
        raise GrammarError("no rules found")
    for sym, lineno, col in rhs_nonterminals:
        if sym not in declared:
            raise GrammarError(f"nonterminal {sym!r} never declared", lineno, col)
    start = header_start if header_start is not None else declared[0]
    if start not in declared:
        raise GrammarError(f"start symbol {start!r} has no rules")

    structural = {lhs for lhs in declared
                  for r in rules if r.lhs == lhs and r.kind == NONTERMINAL_RULE}
    emitting = {lhs for lhs in declared
                for r in rules if r.lhs == lhs and r.kind == TERMINAL_RULE}
    terminals = {s for r in rules if r.kind == TERMINAL_RULE for s in r.rhs}
    terminals |= {s for r in rules if r.kind == NONTERMINAL_RULE
                  for s in r.rhs if s not in declared and not _is_nonterminal_shape(s)}
    return EGrammar(
        structural=frozenset(structural),
        emitting=frozenset(emitting),
        terminals=frozenset(terminals),
        rules=tuple(rules),
        start=start,
    )


def _is_nonterminal_shape(sym: str) -> bool:
    return bool(_BRACKET_NT.match(sym)) or (len(sym) == 1 and sym.isupper())


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_egrammar(g: EGrammar) -> ValidationReport:
    """Collect every shape violation; an empty report means a true e-grammar."""
    bad: list[str] = []
    overlap = g.structural & g.emitting
    for sym in sorted(overlap):
        bad.append(f"{sym!r} has both structural and emitting rules")
    for sym in sorted(g.nonterminals & g.terminals):
        bad.append(f"{sym!r} is both a nonterminal and a terminal")
    if g.start not in g.nonterminals:
        bad.append(f"start symbol {g.start!r} is not a declared nonterminal")
    if MASK_GLYPH in g.terminals:
        bad.append(f"terminal alphabet uses reserved {MASK_GLYPH!r}")
    for t in sorted(g.terminals):
        if len(t) != 1:
            bad.append(f"terminal {t!r} is not a single character")
    for rule in g.rules:
        if rule.lhs not in g.nonterminals:
            bad.append(f"rule {rule} has undeclared lhs")
            continue
        if rule.kind == NONTERMINAL_RULE:
            if rule.lhs not in g.structural:
                bad.append(f"rule {rule} heads an emitting symbol")
            if rule.rhs and (len(rule.rhs) != 2 or any(s not in g.nonterminals for s in rule.rhs)):
                bad.append(f"rule {rule} must produce exactly two nonterminals or eps")
        elif rule.kind == TERMINAL_RULE:
            if rule.lhs not in g.emitting:
                bad.append(f"rule {rule} heads a structural symbol")
            if not rule.rhs:
                bad.append(f"rule {rule} emits the empty string")
            elif any(s not in g.terminals for s in rule.rhs):
                bad.append(f"rule {rule} emits a non-terminal symbol")
        else:
            bad.append(f"rule {rule} has unknown kind {rule.kind!r}")
    for sym in sorted(g.nonterminals):
        if sym not in g.rules_by_lhs:
            bad.append(f"{sym!r} declared but has no rules")
    return ValidationReport(tuple(bad))


def g_complexity(g: EGrammar) -> int:
    """Number of non-epsilon rule alternatives."""
    return sum(1 for r in g.rules if not r.is_epsilon)


@dataclass(frozen=True)
class PreconditionReport:
    ok: bool
    problems: tuple[str, ...]


def check_theorem1_preconditions(g: EGrammar) -> PreconditionReport:
    """Unique-decomposition preconditions: emitting rules pairwise distinct
    on the right side and all of one common length."""
    problems: list[str] = []
    seen: dict[tuple[str, ...], Rule] = {}
    lengths: set[int] = set()
    for rule in g.rules:
        if rule.kind != TERMINAL_RULE:
            continue
        if rule.rhs in seen:
            problems.append(f"duplicate emission {rule.rhs_text()!r} ({seen[rule.rhs].lhs}, {rule.lhs})")
        else:
            seen[rule.rhs] = rule
        lengths.add(len(rule.rhs))
    if len(lengths) > 1:
        problems.append(f"mixed emission lengths {sorted(lengths)}")
    if not seen:
        problems.append("no emitting rules")
    return PreconditionReport(not problems, tuple(problems))


def _productive(g: EGrammar) -> frozenset[str]:
    prod: set[str] = {r.lhs for r in g.rules if r.kind == TERMINAL_RULE and r.rhs}
    changed = True
    while changed:
        changed = False
        for rule in g.rules:
            if rule.lhs in prod or rule.kind != NONTERMINAL_RULE:
                continue
            if rule.is_epsilon or all(s in prod for s in rule.rhs):
                prod.add(rule.lhs)
                changed = True
    return frozenset(prod)


def _epsilon_tree_counts(g: EGrammar, useful: frozenset[str]) -> dict[str, int]:
    """Count distinct parse trees deriving epsilon, per nonterminal.

    Monotone fixpoint; any count still growing after the settling window is
    unbounded (a nullable cycle), which callers must reject.
    """
    counts = {sym: 0 for sym in g.nonterminals}

    def step(cur: dict[str, int]) -> dict[str, int]:
        nxt = dict(cur)
        for sym in g.nonterminals:
            total = 0
            for rule in g.rules_by_lhs.get(sym, ()):
                if rule.kind != NONTERMINAL_RULE:
                    continue
                if rule.is_epsilon:
                    total += 1
                elif len(rule.rhs) == 2:
                    total += cur[rule.rhs[0]] * cur[rule.rhs[1]]
            nxt[sym] = total
        return nxt

    # finite counts settle within |N|+2 monotone rounds; anything still
    # growing after that sits on a nullable cycle and is unbounded
    rounds = len(g.nonterminals) + 2
    for _ in range(rounds):
        nxt = step(counts)
        if nxt == counts:
            return counts
        counts = nxt
    # the useful symbols form a closed subsystem: one step that leaves all
    # of them unchanged means they are settled, whatever junk does elsewhere
    for _ in range(rounds):
        nxt = step(counts)
        if all(nxt[s] == counts[s] for s in useful):
            return nxt
        counts = nxt
    raise UnboundedParseTreesError(
        "epsilon tree counts diverge (nullable cycle)")


def _wrap_order(g: EGrammar, useful: frozenset[str]) -> list[str]:
    """Topological order of the same-span dependency graph.

    A -> B C lets a span flow to B whole when C is nullable (and vice
    versa); a cycle there means unbounded tree counts for some string.
    """
    edges: dict[str, set[str]] = {s: set() for s in useful}
    for rule in g.rules:
        if rule.kind != NONTERMINAL_RULE or len(rule.rhs) != 2:
            continue
        if rule.lhs not in useful:
            continue
        b, c = rule.rhs
        if c in g.nullable and b in useful:
            edges[rule.lhs].add(b)
        if b in g.nullable and c in useful:
            edges[rule.lhs].add(c)
    order: list[str] = []
    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    def visit(sym: str) -> None:
        stack = [(sym, iter(sorted(edges[sym])))]
        state[sym] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if state.get(nxt) == 1:
                    raise UnboundedParseTreesError(
                        f"nullable wrap cycle through {nxt!r}")
                if nxt not in state:
                    state[nxt] = 1
                    stack.append((nxt, iter(sorted(edges[nxt]))))
                    advanced = True
                    break
            if not advanced:
                state[node] = 2
                order.append(node)
                stack.pop()

    for sym in sorted(useful):
        if sym not in state:
            visit(sym)
    return order  # dependencies first


def count_parse_trees(s: str, g: EGrammar, max_length: int = 64) -> int:
    """Exact number of distinct parse trees of `s` from the start symbol.

    Span dynamic program over substrings, zero-width spans included.  Raises
    UnboundedParseTreesError when the count is infinite and GrammarError when
    len(s) exceeds `max_length` (the DP is cubic; this is a desk-scale tool).
    """
    n = len(s)
    if n > max_length:
        raise GrammarError(f"string length {n} exceeds bound {max_length}")
    useful = frozenset(g.reachable & _productive(g))
    eps_counts = _epsilon_tree_counts(g, useful)
    if g.start not in useful:
        return eps_counts.get(g.start, 0) if n == 0 else 0
    if n == 0:
        return eps_counts[g.start]
    order = _wrap_order(g, useful)

    # table[(sym, i, j)] = trees for s[i:j]; zero-width handled by eps_counts
    table: dict[tuple[str, int, int], int] = {}

    def get(sym: str, i: int, j: int) -> int:
        if i == j:
            return eps_counts.get(sym, 0)
        return table.get((sym, i, j), 0)

    for width in range(1, n + 1):
        for i in range(n - width + 1):
            j = i + width
            for sym in order:  # same-span dependencies resolved first
                total = 0
                for rule in g.rules_by_lhs.get(sym, ()):
                    if rule.kind == TERMINAL_RULE:
                        if len(rule.rhs) == width and "".join(rule.rhs) == s[i:j]:
                            total += 1
                    elif len(rule.rhs) == 2:
                        b, c = rule.rhs
                        for k in range(i, j + 1):
                            left = get(b, i, k)
                            if left:
                                right = get(c, k, j)
                                if right:
                                    total += left * right
                if total:
                    table[(sym, i, j)] = total
    return get(g.start, 0, n)


def _has_nullable_wrap_cycle(g: EGrammar) -> bool:
    """True when some useful symbol derives itself beside epsilon-deriving
    siblings; such a grammar gives some string unboundedly many trees."""
    useful = g.reachable & _productive(g)
    edges: dict[str, set[str]] = {sym: set() for sym in useful}
    for rule in g.rules:
        if rule.kind != NONTERMINAL_RULE or len(rule.rhs) != 2:
            continue
        if rule.lhs not in useful:
            continue
        b, c = rule.rhs
        if c in g.nullable and b in useful:
            edges[rule.lhs].add(b)
        if b in g.nullable and c in useful:
            edges[rule.lhs].add(c)
    # iterative DFS with colors; a back edge is a cycle
    color = {sym: 0 for sym in useful}  # 0 new, 1 open, 2 done
    for root in useful:
        if color[root]:
            continue
        stack: list[tuple[str, Iterator[str]]] = [(root, iter(edges[root]))]
        color[root] = 1
        while stack:
            sym, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 1:
                    return True
                if color[nxt] == 0:
                    color[nxt] = 1
                    stack.append((nxt, iter(edges[nxt])))
                    advanced = True
                    break
            if not advanced:
                color[sym] = 2
                stack.pop()
    return False


def enumerate_parse_trees(s: str, g: EGrammar, limit: int | None = None) -> list[ParseTree]:
    """All parse trees of `s`, by direct recursive search.

    Independent of the counting DP on purpose: it exists so the two can be
    checked against each other.  Worst-case exponential; desk scale only.

    A revisited (symbol, span) returns no trees: in a grammar without
    nullable wrap cycles no tree nests the same symbol over the same span,
    so the truncation is exact; wrap cycles are rejected up front.
    """
    if _has_nullable_wrap_cycle(g):
        raise UnboundedParseTreesError("nullable wrap cycle admits unbounded parse trees")
    rules_by_lhs = g.rules_by_lhs
    memo: dict[tuple[str, int, int], list[ParseTree]] = {}
    on_stack: set[tuple[str, int, int]] = set()

    def trees(sym: str, i: int, j: int) -> list[ParseTree]:
        key = (sym, i, j)
        if key in on_stack:
            return []
        done = memo.get(key)
        if done is not None:
            return done
        on_stack.add(key)
        found: list[ParseTree] = []
        try:
            for rule in rules_by_lhs.get(sym, ()):
                if rule.kind == TERMINAL_RULE:
                    if "".join(rule.rhs) == s[i:j] and i != j:
                        found.append(ParseTree(sym, rule, (), s[i:j]))
                elif rule.is_epsilon:
                    if i == j:
                        found.append(ParseTree(sym, rule))
                else:
                    b, c = rule.rhs
                    for k in range(i, j + 1):
                        for left in trees(b, i, k):
                            for right in trees(c, k, j):
                                found.append(ParseTree(sym, rule, (left, right)))
        finally:
            on_stack.discard(key)
        if limit is not None and len(found) > limit:
            raise GrammarError(f"more than {limit} parse trees")
        memo[key] = found
        return found

    return trees(g.start, 0, len(s))
