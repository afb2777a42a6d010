"""Floyd operator-precedence parsing, full and partial.

Both entry points share one shift-reduce engine.  The stack is a list of
frames, one per terminal, each remembering the relation with which the
terminal was entered and the (at most one) nonterminal sitting just below
it; a pending nonterminal above the topmost terminal is kept aside.
Nonterminals are therefore transparent to relation lookup by construction.

A frame entered with no known relation is a *barrier*: the left context of
that terminal is unknown to this worker, so no handle may extend through
it.  Barriers arise at the left border of a chunk and whenever a terminal
takes precedence over a lookahead whose handle would need the unknown
context; everything at or below a barrier is left in the residue.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (EmptyCellError, GrammarError, NoHandleError, ParseError,
                     TrailingFormError)
from .grammar import DELIMITER, Grammar, check_fnf
from .opm import EQ, GT, LT, PrecedenceMatrix, compute_opm
from .trees import Leaf, Tree

Item = tuple  # (symbol, node): node is a Leaf for terminals, a Tree for nonterminals


@dataclass
class PartialParseState:
    """Residue of a partial parse, factored as ``zeta theta``.

    ``zeta`` contains no ``<`` between consecutive terminals and ``theta``
    no ``>``; each nonterminal item carries its subtree.
    """

    left_stack: list
    right_stack: list

    @property
    def residue(self) -> list:
        return self.left_stack + self.right_stack

    @property
    def zeta(self) -> list[str]:
        return [s for s, _ in self.left_stack]

    @property
    def theta(self) -> list[str]:
        return [s for s, _ in self.right_stack]

    @property
    def symbols(self) -> list[str]:
        return self.zeta + self.theta

    def __len__(self):
        return len(self.left_stack) + len(self.right_stack)


class OpParser:
    """Precomputed tables for parsing with one grammar/matrix pair."""

    def __init__(self, g: Grammar, m: PrecedenceMatrix | None = None, *, check: bool = True):
        self.grammar = g
        self.matrix = m if m is not None else compute_opm(g)
        self.table = self.matrix.table  # raises on conflicts
        if check:
            report = check_fnf(g)
            if not report.is_operator_form:
                raise GrammarError("the grammar is not in operator form")
            if not report.is_invertible:
                raise GrammarError("the grammar is not invertible; normalize it first")
        handles: dict[tuple, str] = {}
        for p in g.productions:
            if not p.rhs or g.is_renaming(p):
                continue  # only ever applied at the root
            handles.setdefault(p.rhs, p.lhs)
        self.handles = handles
        self.terminals = frozenset(g.terminals)
        self.nonterminals = frozenset(g.nonterminals)
        self.root_renamings = {p.rhs[0] for p in g.rules_for(g.axiom) if g.is_renaming(p)}
        self.accepts_empty = any(not p.rhs for p in g.rules_for(g.axiom))

    # ------------------------------------------------------------------
    def parse(self, tokens: Sequence[str]) -> Tree:
        n = len(tokens)
        self._check_tokens(tokens)
        items = [(t, Leaf(t, i)) for i, t in enumerate(tokens)]
        state = self.partial(items, (DELIMITER, Leaf(DELIMITER, -1)), (DELIMITER, Leaf(DELIMITER, n)))
        return self.finish(state, n)

    def _check_tokens(self, tokens):
        for i, t in enumerate(tokens):
            if t not in self.terminals:
                raise ParseError(f"unknown token {t!r} at position {i}", i)

    def finish(self, state: PartialParseState, n: int) -> Tree:
        """Turn a fully delimited residue ``# [N] #`` into the final tree."""
        core = state.residue[1:-1]
        if not core:
            if self.accepts_empty:
                return Tree(self.grammar.axiom, ())
            raise TrailingFormError((), n)
        if len(core) == 1 and core[0][0] in self.nonterminals:
            sym, node = core[0]
            if sym == self.grammar.axiom:
                return node
            if sym in self.root_renamings:
                return Tree(self.grammar.axiom, (node,))
        raise TrailingFormError(tuple(s for s, _ in core), n)

    # ------------------------------------------------------------------
    def partial(self, segment: Iterable[Item], left: Item | None, right: Item | None) -> PartialParseState:
        """Reduce every handle that is fully determined inside the segment."""
        table = self.table
        handles = self.handles
        nts = self.nonterminals
        # frame: [terminal, entering relation or None, lnt symbol, lnt node, leaf]
        frames: list = []
        if left is not None:
            frames.append([left[0], None, None, None, left[1]])
        nt_sym = nt_node = None

        def reduce_or_freeze(c, cnode) -> bool:
            """One reduction step for lookahead ``c``; False when blocked."""
            nonlocal nt_sym, nt_node
            j = len(frames) - 1
            while j >= 0 and frames[j][1] is EQ:
                j -= 1
            if j < 0 or frames[j][1] is not LT:
                return False
            rhs: list = []
            kids: list = []
            for f in frames[j:]:
                if f[2] is not None:
                    rhs.append(f[2])
                    kids.append(f[3])
                rhs.append(f[0])
                kids.append(f[4])
            if nt_sym is not None:
                rhs.append(nt_sym)
                kids.append(nt_node)
            key = tuple(rhs)
            lhs = handles.get(key)
            if lhs is None:
                pos = cnode.pos if cnode is not None else -1
                if c == DELIMITER:
                    raise TrailingFormError(key, pos)
                raise NoHandleError(key, pos)
            del frames[j:]
            nt_sym, nt_node = lhs, Tree(lhs, kids)
            return True

        for sym, node in segment:
            if sym in nts:
                if nt_sym is not None:
                    raise ParseError(f"adjacent nonterminals {nt_sym} {sym} in segment")
                nt_sym, nt_node = sym, node
                continue
            while True:
                if not frames:
                    frames.append([sym, None, nt_sym, nt_node, node])
                    nt_sym = nt_node = None
                    break
                top = frames[-1][0]
                rel = table.get((top, sym))
                if rel is None:
                    raise EmptyCellError(top, sym, node.pos)
                if rel is GT:
                    if reduce_or_freeze(sym, node):
                        continue
                    rel = None  # blocked: the new terminal becomes a barrier
                frames.append([sym, rel, nt_sym, nt_node, node])
                nt_sym = nt_node = None
                break

        if right is not None and frames:
            c, cnode = right
            while frames:
                rel = table.get((frames[-1][0], c))
                if rel is None:
                    raise EmptyCellError(frames[-1][0], c, cnode.pos)
                if rel is not GT or not reduce_or_freeze(c, cnode):
                    break

        residue: list = []
        for f in frames:
            if f[2] is not None:
                residue.append((f[2], f[3]))
            residue.append((f[0], f[4]))
        if nt_sym is not None:
            residue.append((nt_sym, nt_node))
        if right is not None:
            residue.append(right)
        return self.factor(residue)

    def factor(self, residue: list) -> PartialParseState:
        """Split after the last terminal preceding the first ``<``."""
        table = self.table
        prev = None
        cut = len(residue)
        last_term_end = 0
        for i, (sym, _) in enumerate(residue):
            if sym in self.nonterminals:
                continue
            if prev is not None and table.get((prev, sym)) is LT:
                cut = last_term_end
                break
            prev = sym
            last_term_end = i + 1
        return PartialParseState(residue[:cut], residue[cut:])

    def relation_profile(self, residue: Sequence[Item]) -> list:
        terms = [s for s, _ in residue if s not in self.nonterminals]
        return [self.table.get((a, b)) for a, b in zip(terms, terms[1:])]


def is_irreducible_profile(profile: Sequence) -> bool:
    """No ``< (=)* >`` pattern among consecutive relations."""
    opened = False
    for r in profile:
        if r is LT:
            opened = True
        elif r is GT and opened:
            return False
    return True


# ---------------------------------------------------------------------------
# functional front end

_CACHE: dict = {}


def _parser_for(g: Grammar, m: PrecedenceMatrix | None) -> OpParser:
    key = (id(g), id(m))
    hit = _CACHE.get(key)
    if hit is not None and hit[0] is g and hit[1] is m:
        return hit[2]
    p = OpParser(g, m)
    if len(_CACHE) > 32:
        _CACHE.clear()
    _CACHE[key] = (g, m, p)
    return p


def parse(g: Grammar, m: PrecedenceMatrix | None, tokens: Sequence[str]) -> Tree:
    """Parse ``tokens`` into a syntax tree or raise a :class:`ParseError`."""
    return _parser_for(g, m).parse(list(tokens))


def accepts(g: Grammar, m: PrecedenceMatrix | None, tokens: Sequence[str]) -> bool:
    try:
        parse(g, m, tokens)
    except ParseError:
        return False
    return True


def _as_item(x, pos):
    if isinstance(x, tuple):
        return x
    return (x, Leaf(x, pos))


def partial_parse(g: Grammar, m: PrecedenceMatrix | None, segment: Sequence,
                  left_delim=None, right_delim=None, offset: int = 0) -> PartialParseState:
    """Partial parse of a segment over terminals and nonterminals.

    ``segment`` items are symbols or ``(symbol, node)`` pairs; plain
    nonterminal symbols get a childless placeholder tree.  A delimiter is a
    terminal, ``'#'``, or None when the context is unknown.  The returned
    residue includes the delimiters that were given.
    """
    p = _parser_for(g, m)
    items = []
    for i, x in enumerate(segment):
        if not isinstance(x, tuple) and x in p.nonterminals:
            items.append((x, Tree(x, ())))
        else:
            items.append(_as_item(x, offset + i))
    left = None if left_delim is None else _as_item(left_delim, offset - 1)
    right = None if right_delim is None else _as_item(right_delim, offset + len(items))
    return p.partial(items, left, right)


def check_tree(g: Grammar, tree: Tree, tokens: Sequence[str] | None = None) -> bool:
    """Every internal node matches a production (or the root axiom renaming)
    and, if given, the frontier equals ``tokens``."""
    from .trees import frontier, internal_nodes
    for node in internal_nodes(tree):
        rhs = tuple(c.label for c in node.children)
        if not g.has_production(node.label, rhs):
            return False
        if len(rhs) == 1 and g.is_nonterminal(rhs[0]) and node is not tree:
            return False
    if tokens is not None and frontier(tree) != list(tokens):
        return False
    return True
