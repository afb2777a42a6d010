"""Context-free grammars: representation, text format, normal-form checks and
the brute-force language enumerator used as oracle throughout the test suite.

Grammar files look like::

    %axiom S            # optional, defaults to the lhs of the first rule
    S -> E | T | F
    E -> E '+' T | T '*' F | 'e' ;
    A -> ;               # empty alternative = epsilon

Nonterminals are bare identifiers starting with an uppercase letter,
terminals are single-quoted tokens.  ``#`` starts a comment and is reserved
as the end-of-string delimiter, so it can never be a terminal.
"""

from __future__ import annotations

import itertools
import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import GrammarError, GrammarSyntaxError, ResourceLimitError

DELIMITER = "#"
DEFAULT_MAX_LEN = 16

_IDENT = re.compile(r"[A-Z][A-Za-z0-9_']*")


@dataclass(frozen=True)
class Production:
    lhs: str
    rhs: tuple[str, ...]

    def __str__(self):
        return f"{self.lhs} -> {' '.join(self.rhs) if self.rhs else 'ε'}"


@dataclass(frozen=True)
class Grammar:
    """An immutable context-free grammar (V_N, Σ, P, S).

    Alphabets are tuples in declaration order; that order is what matrix
    renderings use.
    """

    nonterminals: tuple[str, ...]
    terminals: tuple[str, ...]
    axiom: str
    productions: tuple[Production, ...]

    def __post_init__(self):
        nts, ts = set(self.nonterminals), set(self.terminals)
        if nts & ts:
            raise GrammarError(f"symbols used as both terminal and nonterminal: {sorted(nts & ts)}")
        if DELIMITER in nts or DELIMITER in ts:
            raise GrammarError("the delimiter '#' is reserved")
        if self.axiom not in nts:
            raise GrammarError(f"axiom {self.axiom!r} is not a nonterminal")
        for p in self.productions:
            if p.lhs not in nts:
                raise GrammarError(f"lhs {p.lhs!r} is not a nonterminal")
            for s in p.rhs:
                if s not in nts and s not in ts:
                    raise GrammarError(f"unknown symbol {s!r} in {p}")

    @classmethod
    def build(cls, rules: Iterable[tuple[str, Sequence[str]]], axiom: str | None = None,
              terminals: Iterable[str] | None = None) -> "Grammar":
        """Build from ``(lhs, rhs)`` pairs.  Without explicit ``terminals``,
        every symbol that is never a lhs is taken to be a terminal."""
        prods = tuple(Production(lhs, tuple(rhs)) for lhs, rhs in rules)
        nts = _ordered(p.lhs for p in prods)
        if terminals is None:
            lhs_set = set(nts)
            ts = _ordered(s for p in prods for s in p.rhs if s not in lhs_set)
        else:
            ts = tuple(terminals)
            tset = set(ts)
            nts = _ordered(list(nts) + [s for p in prods for s in p.rhs if s not in tset])
        if axiom is None:
            if not prods:
                raise GrammarError("cannot infer the axiom of an empty grammar")
            axiom = prods[0].lhs
        if axiom not in nts:
            nts = nts + (axiom,)
        return cls(nts, ts, axiom, _dedup(prods))

    def is_terminal(self, symbol: str) -> bool:
        return symbol in self._terminal_set

    def is_nonterminal(self, symbol: str) -> bool:
        return symbol in self._nonterminal_set

    @cached_property
    def _terminal_set(self) -> frozenset:
        return frozenset(self.terminals)

    @cached_property
    def _nonterminal_set(self) -> frozenset:
        return frozenset(self.nonterminals)

    def rules_for(self, lhs: str) -> list[Production]:
        return self._by_lhs.get(lhs, [])

    @cached_property
    def _by_lhs(self) -> dict[str, list[Production]]:
        out: dict[str, list[Production]] = defaultdict(list)
        for p in self.productions:
            out[p.lhs].append(p)
        return dict(out)

    @cached_property
    def rhs_index(self) -> dict[tuple[str, ...], tuple[str, ...]]:
        """Map each rhs to the lhs nonterminals that rewrite to it."""
        out: dict[tuple[str, ...], list[str]] = defaultdict(list)
        for p in self.productions:
            if p.lhs not in out[p.rhs]:
                out[p.rhs].append(p.lhs)
        return {k: tuple(v) for k, v in out.items()}

    def is_renaming(self, p: Production) -> bool:
        return len(p.rhs) == 1 and self.is_nonterminal(p.rhs[0])

    def has_production(self, lhs: str, rhs: Sequence[str]) -> bool:
        return Production(lhs, tuple(rhs)) in self._production_set

    @cached_property
    def _production_set(self) -> frozenset:
        return frozenset(self.productions)

    def to_text(self) -> str:
        """Render in the grammar file format.  Names that are not valid
        identifiers (e.g. generated tuple nonterminals) are replaced."""
        names = {}
        used = set(self.nonterminals)
        counter = itertools.count()
        for nt in self.nonterminals:
            if _IDENT.fullmatch(nt):
                names[nt] = nt
            else:
                while True:
                    cand = f"N{next(counter)}"
                    if cand not in used:
                        break
                used.add(cand)
                names[nt] = cand
        lines = [f"%axiom {names[self.axiom]}"]
        for lhs in self.nonterminals:
            alts = []
            for p in self.rules_for(lhs):
                alts.append(" ".join(names[s] if s in names else _quote(s) for s in p.rhs))
            if alts:
                lines.append(f"{names[lhs]} -> " + " | ".join(alts) + " ;")
        return "\n".join(lines) + "\n"

    def __str__(self):
        return self.to_text()


def _quote(t: str) -> str:
    return f"'{t}'"


def _ordered(items: Iterable[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(items))


def _dedup(prods: Iterable[Production]) -> tuple[Production, ...]:
    return tuple(dict.fromkeys(prods))


# ---------------------------------------------------------------------------
# text format

def _tokenize_line(line: str, lineno: int):
    """Yield (kind, text, column) for one line; columns are 1-based."""
    i, n = 0, len(line)
    while i < n:
        c = line[i]
        if c.isspace():
            i += 1
        elif c == "#":
            return
        elif c == "'":
            j = line.find("'", i + 1)
            if j < 0:
                raise GrammarSyntaxError("unterminated quoted terminal", lineno, i + 1)
            text = line[i + 1:j]
            if not text or any(ch.isspace() for ch in text):
                raise GrammarSyntaxError("terminal names must be non-empty and contain no spaces",
                                         lineno, i + 1)
            if text == DELIMITER:
                raise GrammarSyntaxError("'#' is reserved as the delimiter", lineno, i + 1)
            yield "T", text, i + 1
            i = j + 1
        elif line.startswith("->", i):
            yield "ARROW", "->", i + 1
            i += 2
        elif c in "|;":
            yield c, c, i + 1
            i += 1
        elif c == "%":
            m = re.compile(r"%[a-z]+").match(line, i)
            yield "DIRECTIVE", m.group(0) if m else "%", i + 1
            i += len(m.group(0)) if m else 1
        else:
            m = re.compile(r"[A-Za-z_][A-Za-z0-9_']*").match(line, i)
            if not m:
                raise GrammarSyntaxError(f"unexpected character {c!r}", lineno, i + 1)
            word = m.group(0)
            if not _IDENT.fullmatch(word):
                raise GrammarSyntaxError(
                    f"nonterminal {word!r} must start with an uppercase letter (quote terminals)",
                    lineno, i + 1)
            yield "NT", word, i + 1
            i = m.end()


def load_grammar(text: str) -> Grammar:
    """Parse grammar-file text into a :class:`Grammar`; rule order is kept."""
    axiom = None
    rules: list[tuple[str, tuple[str, ...]]] = []
    terminals: list[str] = []
    nonterminals: list[str] = []
    tpos: dict[str, tuple[int, int]] = {}
    npos: dict[str, tuple[int, int]] = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = list(_tokenize_line(line, lineno))
        if not toks:
            continue
        kind, word, col = toks[0]
        if kind == "DIRECTIVE":
            if word != "%axiom" or len(toks) != 2 or toks[1][0] != "NT":
                raise GrammarSyntaxError("expected '%axiom Name'", lineno, col)
            axiom = toks[1][1]
            npos.setdefault(axiom, (lineno, toks[1][2]))
            continue
        if kind == "NT":
            if len(toks) < 2 or toks[1][0] != "ARROW":
                raise GrammarSyntaxError("expected '->' after the lhs", lineno, col)
            current = word
            npos.setdefault(word, (lineno, col))
            nonterminals.append(word)
            body = toks[2:]
        elif kind == "|":
            if current is None:
                raise GrammarSyntaxError("continuation line without a preceding rule", lineno, col)
            body = toks[1:]
        else:
            raise GrammarSyntaxError(f"unexpected {word!r} at start of rule", lineno, col)
        if body and body[-1][0] == ";":
            body = body[:-1]
        alt: list[str] = []
        for k, w, c in body:
            if k == "|":
                rules.append((current, tuple(alt)))
                alt = []
            elif k == "T":
                alt.append(w)
                terminals.append(w)
                tpos.setdefault(w, (lineno, c))
            elif k == "NT":
                alt.append(w)
                nonterminals.append(w)
                npos.setdefault(w, (lineno, c))
            else:
                raise GrammarSyntaxError(f"unexpected {w!r} in rhs", lineno, c)
        rules.append((current, tuple(alt)))
    if not rules:
        raise GrammarSyntaxError("no productions", 1, 1)
    clash = set(terminals) & set(nonterminals)
    if clash:
        name = sorted(clash)[0]
        line, col = tpos[name]
        raise GrammarSyntaxError(f"{name!r} is used both as terminal and nonterminal", line, col)
    defined = {lhs for lhs, _ in rules}
    for nt in nonterminals:
        if nt not in defined and nt != axiom:
            line, col = npos[nt]
            raise GrammarSyntaxError(f"nonterminal {nt!r} has no productions", line, col)
    if axiom is None:
        axiom = rules[0][0]
    elif axiom not in defined:
        line, col = npos[axiom]
        raise GrammarSyntaxError(f"axiom {axiom!r} has no productions", line, col)
    return Grammar(_ordered(nonterminals), _ordered(terminals), axiom,
                   _dedup(Production(l, r) for l, r in rules))


def read_grammar(path) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return load_grammar(fh.read())


# ---------------------------------------------------------------------------
# normal-form checks

@dataclass
class FnfReport:
    is_operator_form: bool = True
    is_invertible: bool = True
    has_forbidden_empty_rules: bool = False
    has_forbidden_renaming_rules: bool = False
    violations: list[tuple[Production, str]] = field(default_factory=list)

    @property
    def is_fnf(self) -> bool:
        return (self.is_operator_form and self.is_invertible
                and not self.has_forbidden_empty_rules
                and not self.has_forbidden_renaming_rules)


def check_operator_form(g: Grammar) -> FnfReport:
    report = FnfReport()
    for p in g.productions:
        if any(g.is_nonterminal(x) and g.is_nonterminal(y) for x, y in zip(p.rhs, p.rhs[1:])):
            report.is_operator_form = False
            report.violations.append((p, "adjacent nonterminals in rhs"))
    return report


def check_fnf(g: Grammar) -> FnfReport:
    """Full Fischer-normal-form report.  Conflict-freedom of the matrix is
    not part of it; see :func:`oplkit.opm.is_conflict_free`."""
    report = check_operator_form(g)
    for rhs, lhss in g.rhs_index.items():
        if len(lhss) > 1:
            report.is_invertible = False
            for lhs in lhss:
                report.violations.append((Production(lhs, rhs), f"rhs shared by {', '.join(lhss)}"))
    for p in g.productions:
        if not p.rhs and p.lhs != g.axiom:
            report.has_forbidden_empty_rules = True
            report.violations.append((p, "empty rule below the axiom"))
        if g.is_renaming(p) and p.lhs != g.axiom:
            report.has_forbidden_renaming_rules = True
            report.violations.append((p, "renaming rule below the axiom"))
    return report


# ---------------------------------------------------------------------------
# transformations

def eliminate_renaming(g: Grammar, keep_axiom_renaming: bool = True) -> Grammar:
    """Remove renaming rules A -> B by unit-pair closure.

    Axiom renamings are allowed in FNF and kept by default; with
    ``keep_axiom_renaming=False`` the axiom is closed like any other
    nonterminal and useless symbols are trimmed afterwards.
    """
    units: dict[str, set[str]] = {a: {a} for a in g.nonterminals}
    changed = True
    while changed:
        changed = False
        for p in g.productions:
            if g.is_renaming(p):
                b = p.rhs[0]
                for a in g.nonterminals:
                    if p.lhs in units[a] and b not in units[a]:
                        units[a].add(b)
                        changed = True
    out: list[Production] = []
    for a in g.nonterminals:
        if a == g.axiom and keep_axiom_renaming:
            out.extend(g.rules_for(a))
            continue
        for b in g.nonterminals:
            if b in units[a]:
                out.extend(Production(a, p.rhs) for p in g.rules_for(b) if not g.is_renaming(p))
    result = Grammar(g.nonterminals, g.terminals, g.axiom, _dedup(sorted_like(out, g)))
    return result if keep_axiom_renaming else trim(result)


def sorted_like(prods: list[Production], g: Grammar) -> list[Production]:
    """Order productions by lhs declaration order, keeping relative order."""
    rank = {nt: i for i, nt in enumerate(g.nonterminals)}
    return sorted(prods, key=lambda p: rank[p.lhs])


def generating_nonterminals(g: Grammar) -> set[str]:
    gen: set[str] = set()
    changed = True
    while changed:
        changed = False
        for p in g.productions:
            if p.lhs not in gen and all(g.is_terminal(s) or s in gen for s in p.rhs):
                gen.add(p.lhs)
                changed = True
    return gen


def reachable_nonterminals(g: Grammar) -> set[str]:
    seen = {g.axiom}
    todo = [g.axiom]
    while todo:
        a = todo.pop()
        for p in g.rules_for(a):
            for s in p.rhs:
                if g.is_nonterminal(s) and s not in seen:
                    seen.add(s)
                    todo.append(s)
    return seen


def trim(g: Grammar) -> Grammar:
    """Drop non-generating, then unreachable, nonterminals and their rules."""
    gen = generating_nonterminals(g) | {g.axiom}
    step = [p for p in g.productions
            if p.lhs in gen and all(g.is_terminal(s) or s in gen for s in p.rhs)]
    g1 = Grammar(tuple(n for n in g.nonterminals if n in gen), g.terminals, g.axiom, tuple(step))
    reach = reachable_nonterminals(g1)
    prods = tuple(p for p in g1.productions if p.lhs in reach)
    used = {s for p in prods for s in p.rhs}
    return Grammar(tuple(n for n in g1.nonterminals if n in reach),
                   tuple(t for t in g.terminals if t in used), g.axiom, prods)


def make_invertible(g: Grammar, check_conflicts: bool = True) -> Grammar:
    """Return an invertible grammar for the same language.

    Nonterminals of the result stand for *sets* of original nonterminals:
    for every rhs skeleton and every choice of sets at its nonterminal
    positions, the new lhs is the set of all original lhs that have a rule
    with that skeleton whose nonterminals belong to the chosen sets.  The set
    construction is iterated until no new set appears, so identical rhs are
    merged and the merge is propagated into every rule that mentions them.
    Requires no renaming rules below the axiom.
    """
    from . import opm as _opm  # late import: opm depends on this module

    report = check_fnf(g)
    if report.has_forbidden_renaming_rules:
        raise GrammarError("make_invertible needs renaming rules eliminated below the axiom")
    if report.is_invertible:
        return g

    axiom_targets = {g.axiom} | {p.rhs[0] for p in g.rules_for(g.axiom) if g.is_renaming(p)}
    proper = [p for p in g.productions if not g.is_renaming(p) and p.rhs]
    # skeleton: rhs with nonterminals replaced by None
    skeletons: dict[tuple, list[Production]] = defaultdict(list)
    for p in proper:
        skel = tuple(None if g.is_nonterminal(s) else s for s in p.rhs)
        skeletons[skel].append(p)

    sets: list[frozenset] = []
    known: set[frozenset] = set()
    rules: dict[tuple, frozenset] = {}
    changed = True
    while changed:
        changed = False
        for skel, prods in skeletons.items():
            slots = [i for i, s in enumerate(skel) if s is None]
            for choice in itertools.product(list(sets), repeat=len(slots)):
                key = (skel, choice)
                if key in rules:
                    continue
                lhs = frozenset(p.lhs for p in prods
                                if all(p.rhs[i] in z for i, z in zip(slots, choice)))
                if not lhs:
                    continue
                rules[key] = lhs
                if lhs not in known:
                    known.add(lhs)
                    sets.append(lhs)
                    changed = True

    order = {nt: i for i, nt in enumerate(g.nonterminals)}
    names = _set_names(sets, order, reserved=set(g.terminals))
    accepting = [z for z in sets if z & axiom_targets]
    epsilon = any(not p.rhs for p in g.rules_for(g.axiom))
    if len(accepting) == 1 and not epsilon:
        axiom = names[accepting[0]]
        extra = []
    else:
        axiom = g.axiom
        while axiom in names.values():
            axiom += "'"
        extra = [Production(axiom, (names[z],)) for z in accepting]
        if epsilon:
            extra.append(Production(axiom, ()))

    prods = list(extra)
    for (skel, choice), lhs in rules.items():
        it = iter(choice)
        rhs = tuple(names[next(it)] if s is None else s for s in skel)
        prods.append(Production(names[lhs], rhs))
    nts = _ordered([axiom] + [names[z] for z in sets])
    rank = {n: i for i, n in enumerate(nts)}
    prods.sort(key=lambda p: rank[p.lhs])
    result = Grammar(nts, g.terminals, axiom, _dedup(prods))
    if check_conflicts:
        before = _opm.compute_opm(g)
        after = _opm.compute_opm(result)
        if not _opm.matrix_includes(before, after) or not _opm.is_conflict_free(after):
            raise GrammarError("merging nonterminals introduced a precedence conflict")
    return result


def _set_names(sets, order, reserved) -> dict[frozenset, str]:
    names: dict[frozenset, str] = {}
    taken = set(reserved)
    for z in sets:
        parts = sorted(z, key=order.__getitem__)
        base = "".join(parts)
        if base in taken or not _IDENT.fullmatch(base):
            base = "_".join(parts)
        name = base
        k = 1
        while name in taken:
            k += 1
            name = f"{base}{k}"
        taken.add(name)
        names[z] = name
    return names


# ---------------------------------------------------------------------------
# language enumeration and emptiness

def generate_strings(g: Grammar, max_len: int, *, guard: int = DEFAULT_MAX_LEN) -> frozenset:
    """All terminal strings of length <= ``max_len`` derivable from the axiom.

    Strings are tuples of terminal tokens.  Computed as the least fixpoint of
    the per-nonterminal languages truncated at ``max_len``, which handles
    empty and renaming rules without special cases.
    """
    if max_len < 0:
        raise ValueError("max_len must be nonnegative")
    if max_len > guard:
        raise ResourceLimitError(f"max_len {max_len} exceeds the enumeration guard {guard}")
    lang: dict[str, set[tuple]] = {a: set() for a in g.nonterminals}
    changed = True
    while changed:
        changed = False
        for p in g.productions:
            for w in _expand(p.rhs, lang, g, max_len):
                if w not in lang[p.lhs]:
                    lang[p.lhs].add(w)
                    changed = True
    return frozenset(lang[g.axiom])


def _expand(rhs, lang, g, max_len):
    partial = {()}
    for s in rhs:
        if g.is_terminal(s):
            partial = {w + (s,) for w in partial if len(w) < max_len}
        else:
            sub = lang[s]
            if not sub:
                return set()
            partial = {w + v for w in partial for v in sub if len(w) + len(v) <= max_len}
        if not partial:
            return set()
    return partial


def is_empty_language(g: Grammar) -> bool:
    return g.axiom not in generating_nonterminals(g)
