"""Operator precedence matrices.

A matrix assigns to each ordered pair of terminals a set of relations among
``<`` (yields precedence), ``=`` (equal in precedence) and ``>`` (takes
precedence).  Cells are sets so that conflicted matrices can be built and
reported; consumers that need a function use :meth:`PrecedenceMatrix.table`.

The delimiter ``#`` is never stored.  It yields precedence to every terminal,
every terminal takes precedence over it, and ``# = #``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import ConflictError, OplError, ResourceLimitError
from .grammar import DELIMITER, Grammar

PARTITION_GUARD = 64


class Rel(enum.Enum):
    LT = "<"
    EQ = "="
    GT = ">"

    @property
    def json_name(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "Rel":
        for r in cls:
            if text in (r.value, r.name.lower(), r.name):
                return r
        raise ValueError(f"unknown relation {text!r}")


LT, EQ, GT = Rel.LT, Rel.EQ, Rel.GT
_REL_ORDER = {LT: 0, EQ: 1, GT: 2}
_EMPTY: frozenset = frozenset()


def _sorted_rels(rels) -> list[Rel]:
    return sorted(rels, key=_REL_ORDER.__getitem__)


@dataclass(frozen=True)
class TerminalSets:
    left: Mapping[str, frozenset]
    right: Mapping[str, frozenset]


@dataclass(frozen=True)
class VpPartition:
    calls: frozenset
    returns: frozenset
    internals: frozenset

    def __post_init__(self):
        for name in ("calls", "returns", "internals"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if (self.calls & self.returns) or (self.calls & self.internals) or (self.returns & self.internals):
            raise OplError("call, return and internal alphabets must be disjoint")
        if DELIMITER in self.alphabet:
            raise OplError("'#' is reserved")

    @property
    def alphabet(self) -> frozenset:
        return self.calls | self.returns | self.internals

    def kind(self, a: str) -> str:
        if a in self.calls:
            return "call"
        if a in self.returns:
            return "return"
        return "internal"


class PrecedenceMatrix:
    """Immutable map from ordered terminal pairs to relation sets."""

    def __init__(self, terminals: Iterable[str], cells: Mapping[tuple[str, str], Iterable] = ()):
        self.terminals = tuple(dict.fromkeys(terminals))
        known = set(self.terminals)
        if DELIMITER in known:
            raise OplError("'#' is reserved and cannot be a matrix terminal")
        store: dict[tuple[str, str], frozenset] = {}
        for (a, b), rels in dict(cells).items():
            if a == DELIMITER or b == DELIMITER:
                raise OplError("cells involving '#' are fixed by convention and cannot be set")
            if a not in known or b not in known:
                raise OplError(f"cell ({a}, {b}) uses a terminal outside the alphabet")
            rels = frozenset(r if isinstance(r, Rel) else Rel.parse(r) for r in rels)
            if rels:
                store[(a, b)] = rels
        self._cells = store

    # -- access -----------------------------------------------------------
    def get(self, a: str, b: str) -> frozenset:
        """Relation set between ``a`` and ``b``, border conventions applied."""
        if a == DELIMITER:
            return frozenset({EQ}) if b == DELIMITER else frozenset({LT})
        if b == DELIMITER:
            return frozenset({GT})
        return self._cells.get((a, b), _EMPTY)

    def __getitem__(self, key):
        return self.get(*key)

    def relation(self, a: str, b: str) -> Rel | None:
        """The single relation between ``a`` and ``b``, or None if the cell is empty."""
        rels = self.get(a, b)
        if len(rels) > 1:
            raise ConflictError(f"conflicted cell ({a}, {b})", [(a, b, rels)])
        return next(iter(rels)) if rels else None

    @cached_property
    def table(self) -> dict[tuple[str, str], Rel]:
        """Total lookup dictionary including the border row and column.

        Only defined for conflict-free matrices; empty cells are absent.
        """
        conflicts = self.conflicts()
        if conflicts:
            raise ConflictError("the matrix has conflicts", conflicts)
        out = {k: next(iter(v)) for k, v in self._cells.items()}
        for a in self.terminals:
            out[(DELIMITER, a)] = LT
            out[(a, DELIMITER)] = GT
        out[(DELIMITER, DELIMITER)] = EQ
        return out

    def cells(self) -> dict[tuple[str, str], frozenset]:
        return dict(self._cells)

    def conflicts(self) -> list[tuple[str, str, frozenset]]:
        return [(a, b, self._cells[(a, b)]) for a in self.terminals for b in self.terminals
                if len(self._cells.get((a, b), ())) > 1]

    def restrict(self, terminals: Iterable[str]) -> "PrecedenceMatrix":
        keep = [t for t in self.terminals if t in set(terminals)]
        ks = set(keep)
        return PrecedenceMatrix(keep, {k: v for k, v in self._cells.items() if k[0] in ks and k[1] in ks})

    def extend(self, terminals: Iterable[str]) -> "PrecedenceMatrix":
        return PrecedenceMatrix(self.terminals + tuple(terminals), self._cells)

    # -- comparison -------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, PrecedenceMatrix):
            return NotImplemented
        return set(self.terminals) == set(other.terminals) and self._cells == other._cells

    def __hash__(self):
        return hash((frozenset(self.terminals), frozenset(self._cells.items())))

    def __repr__(self):
        return f"PrecedenceMatrix({list(self.terminals)!r}, {len(self._cells)} cells)"

    def __reduce__(self):
        return (PrecedenceMatrix, (self.terminals, self._cells))

    # -- rendering ------------------------------------------------------
    def to_text(self) -> str:
        ts = self.terminals
        cell = {}
        for a in ts:
            for b in ts:
                cell[(a, b)] = ",".join(r.value for r in _sorted_rels(self.get(a, b)))
        width = max([1] + [len(t) for t in ts] + [len(v) for v in cell.values()])
        lines = [" ".join([" " * width] + [t.ljust(width) for t in ts]).rstrip()]
        for a in ts:
            lines.append(" ".join([a.ljust(width)] + [cell[(a, b)].ljust(width) for b in ts]).rstrip())
        return "\n".join(lines) + "\n"

    def to_json_obj(self) -> dict:
        cells = {}
        for a in self.terminals:
            for b in self.terminals:
                rels = self._cells.get((a, b))
                if rels:
                    cells[f"{a},{b}"] = [r.json_name for r in _sorted_rels(rels)]
        return {"terminals": list(self.terminals), "cells": cells}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2)

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "PrecedenceMatrix":
        known = set(obj["terminals"])
        cells = {}
        for key, rels in obj.get("cells", {}).items():
            # a terminal may itself contain ",": pick the split naming two terminals
            splits = [(key[:i], key[i + 1:]) for i, ch in enumerate(key)
                      if ch == "," and key[:i] in known and key[i + 1:] in known]
            if len(splits) != 1:
                raise OplError(f"bad cell key {key!r}")
            cells[splits[0]] = [Rel.parse(r) for r in rels]
        return cls(obj["terminals"], cells)

    @classmethod
    def from_rows(cls, terminals: Sequence[str], rows: Sequence[str]) -> "PrecedenceMatrix":
        """Build from a compact row notation, one character per column,
        ``.`` for an empty cell: ``from_rows("+*e", [">><", ...])``."""
        ts = list(terminals)
        cells = {}
        for a, row in zip(ts, rows):
            if len(row) != len(ts):
                raise OplError(f"row for {a!r} has {len(row)} cells, expected {len(ts)}")
            for b, ch in zip(ts, row):
                if ch != ".":
                    cells[(a, b)] = [Rel(ch)]
        return cls(ts, cells)


# ---------------------------------------------------------------------------
# construction from grammars

def terminal_sets(g: Grammar) -> TerminalSets:
    """Least fixpoint of the left/right terminal sets.

    Renaming chains A => B => a... are included: for A -> B alone both sets
    of B flow into A.
    """
    left = {a: set() for a in g.nonterminals}
    right = {a: set() for a in g.nonterminals}
    changed = True
    while changed:
        changed = False
        for p in g.productions:
            rhs = p.rhs
            if not rhs:
                continue
            for sets, seq in ((left, rhs), (right, rhs[::-1])):
                target = sets[p.lhs]
                before = len(target)
                first = seq[0]
                if g.is_terminal(first):
                    target.add(first)
                else:
                    target |= sets[first]
                    if len(seq) > 1 and g.is_terminal(seq[1]):
                        target.add(seq[1])
                if len(target) != before:
                    changed = True
    return TerminalSets({k: frozenset(v) for k, v in left.items()},
                        {k: frozenset(v) for k, v in right.items()})


def compute_opm(g: Grammar) -> PrecedenceMatrix:
    ts = terminal_sets(g)
    cells: dict[tuple[str, str], set] = {}

    def add(a, b, r):
        cells.setdefault((a, b), set()).add(r)

    for p in g.productions:
        rhs = p.rhs
        for i in range(len(rhs) - 1):
            x, y = rhs[i], rhs[i + 1]
            xt, yt = g.is_terminal(x), g.is_terminal(y)
            if xt and yt:
                add(x, y, EQ)
            elif xt and not yt:
                for b in ts.left[y]:
                    add(x, b, LT)
                if i + 2 < len(rhs) and g.is_terminal(rhs[i + 2]):
                    add(x, rhs[i + 2], EQ)
            elif yt and not xt:
                for a in ts.right[x]:
                    add(a, y, GT)
    return PrecedenceMatrix(g.terminals, cells)


# ---------------------------------------------------------------------------
# matrix algebra

def is_conflict_free(m: PrecedenceMatrix) -> bool:
    return not m.conflicts()


def conflicts(m: PrecedenceMatrix) -> list[tuple[str, str, frozenset]]:
    return m.conflicts()


def matrix_union(m1: PrecedenceMatrix, m2: PrecedenceMatrix) -> PrecedenceMatrix:
    terms = m1.terminals + tuple(t for t in m2.terminals if t not in set(m1.terminals))
    cells: dict = {k: set(v) for k, v in m1.cells().items()}
    for k, v in m2.cells().items():
        cells.setdefault(k, set()).update(v)
    return PrecedenceMatrix(terms, cells)


def matrix_includes(m1: PrecedenceMatrix, m2: PrecedenceMatrix) -> bool:
    """True iff every relation of ``m2`` is also in ``m1`` (m2 ⊆ m1)."""
    return all(v <= m1.get(a, b) if a in m1.terminals and b in m1.terminals else False
               for (a, b), v in m2.cells().items())


def is_compatible(m1: PrecedenceMatrix, m2: PrecedenceMatrix) -> bool:
    return is_conflict_free(matrix_union(m1, m2))


def is_total(m: PrecedenceMatrix) -> bool:
    return all(m.get(a, b) for a in m.terminals for b in m.terminals)


# ---------------------------------------------------------------------------
# visibly pushdown alphabets

_BLOCK = {
    ("call", "call"): LT, ("call", "return"): EQ, ("call", "internal"): LT,
    ("return", "call"): GT, ("return", "return"): GT, ("return", "internal"): GT,
    ("internal", "call"): GT, ("internal", "return"): GT, ("internal", "internal"): GT,
}
_KINDS = ("call", "return", "internal")


def vp_alphabet_to_opm(p: VpPartition, order: Sequence[str] | None = None) -> PrecedenceMatrix:
    terms = list(order) if order is not None else (
        sorted(p.calls) + sorted(p.returns) + sorted(p.internals))
    if set(terms) != p.alphabet:
        raise OplError("order must list exactly the partition alphabet")
    cells = {(a, b): [_BLOCK[(p.kind(a), p.kind(b))]] for a in terms for b in terms}
    return PrecedenceMatrix(terms, cells)


def detect_partition(m: PrecedenceMatrix, allow_subset: bool = False) -> VpPartition | None:
    """Find a call/return/internal colouring whose block matrix has exactly
    the cells of ``m`` (or, with ``allow_subset``, contains them)."""
    ts = m.terminals
    if len(ts) > PARTITION_GUARD:
        raise ResourceLimitError(f"alphabet larger than {PARTITION_GUARD} terminals")
    if m.conflicts():
        return None
    colour: dict[str, str] = {}

    def fits(a, ka, b, kb):
        cell = m.get(a, b)
        expected = _BLOCK[(ka, kb)]
        if allow_subset:
            return not cell or cell == {expected}
        return cell == {expected}

    def consistent(a, k):
        if not fits(a, k, a, k):
            return False
        return all(fits(a, k, b, kb) and fits(b, kb, a, k) for b, kb in colour.items())

    def search(i):
        if i == len(ts):
            return True
        a = ts[i]
        for k in _KINDS:
            if consistent(a, k):
                colour[a] = k
                if search(i + 1):
                    return True
                del colour[a]
        return False

    if not search(0):
        return None
    return VpPartition(frozenset(a for a, k in colour.items() if k == "call"),
                       frozenset(a for a, k in colour.items() if k == "return"),
                       frozenset(a for a, k in colour.items() if k == "internal"))


# ---------------------------------------------------------------------------
# chains and compatible words

_N = object()  # placeholder for a reduced (anonymous) nonterminal


def _structural_reduce(m: PrecedenceMatrix, a: str, body: Sequence[str], b: str):
    """Grammar-less Floyd scan of ``a body b``.

    Returns the residue above ``a`` after the lookahead ``b`` has been
    processed, or None if an empty cell is met or a handle would have to
    extend below ``a``.
    """
    if m.conflicts():
        raise ConflictError("chains are only defined over conflict-free matrices", m.conflicts())
    # stack entries: (symbol, entering relation); index 0 is the bottom ``a``
    stack: list = [(a, None)]
    tops = [0]  # indices of terminal entries
    seq = list(body) + [b]
    i = 0
    while i < len(seq):
        c = seq[i]
        top = stack[tops[-1]][0]
        rels = m.get(top, c)
        if not rels:
            return None
        r = next(iter(rels))
        if r is GT:
            if len(tops) == 1:
                return None
            # pop back to the terminal that entered with LT
            while True:
                idx = tops.pop()
                entered = stack[idx][1]
                if entered is LT:
                    break
                if len(tops) == 1:
                    return None  # handle reaches the bottom
            cut = idx
            if cut - 1 > tops[-1] and stack[cut - 1][0] is _N:
                cut -= 1
            del stack[cut:]
            stack.append((_N, None))
            continue
        if i == len(seq) - 1:
            break  # lookahead b is never pushed
        stack.append((c, r))
        tops.append(len(stack) - 1)
        i += 1
    return stack[1:]


def is_chain(m: PrecedenceMatrix, a: str, body: Sequence[str], b: str) -> bool:
    body = list(body)
    if not body or not m.get(a, b):
        return False
    rest = _structural_reduce(m, a, body, b)
    return rest is not None and len(rest) == 1 and rest[0][0] is _N


def is_compatible_word(m: PrecedenceMatrix, w: Sequence[str]) -> bool:
    w = list(w)
    if not w:
        return True
    return is_chain(m, DELIMITER, w, DELIMITER)


def load_matrix(text: str) -> PrecedenceMatrix:
    return PrecedenceMatrix.from_json_obj(json.loads(text))
