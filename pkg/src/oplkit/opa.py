"""Operator-precedence automata.

An OPA reads ``x#`` over an OP alphabet ``(Σ, M)``.  The move kind is fixed
by the relation between the terminal on top of the stack (``#`` for the
bottom ``Z0``) and the lookahead: ``<`` pushes ``[a, q]``, ``=`` replaces the
top terminal keeping its stored state, ``>`` pops without consuming input
using the state stored in the popped symbol.  A word is accepted when the
automaton reaches ``#`` in a final state with only ``Z0`` on the stack.

Because move kinds depend only on ``M`` and the input, sets of runs can be
tracked with *summaries*: sets of pairs (current state, state stored in the
top stack symbol).  That is both the membership test used by enumeration
and the determinization construction.
"""

from __future__ import annotations

import itertools
import json
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Sequence

from .errors import (AutomatonFormatError, ConflictError, EqualityCycleError, GrammarError,
                     IncompatibleMatricesError, ResourceLimitError)
from .grammar import (DELIMITER, Grammar, Production, check_fnf, eliminate_renaming,
                      is_empty_language)
from .opm import EQ, GT, LT, PrecedenceMatrix, compute_opm, is_compatible, matrix_union

DEFAULT_STATE_CAP = 20000


class Budget:
    """Cooperative step/time budget for long decision procedures."""

    def __init__(self, max_steps: int | None = None, seconds: float | None = None):
        self.max_steps = max_steps
        self.deadline = None if seconds is None else time.monotonic() + seconds
        self.steps = 0
        self.cancelled = False

    def cancel(self):
        self.cancelled = True

    def tick(self, n: int = 1):
        self.steps += n
        if self.cancelled:
            raise ResourceLimitError("cancelled")
        if self.max_steps is not None and self.steps > self.max_steps:
            raise ResourceLimitError(f"step budget of {self.max_steps} exhausted")
        if self.deadline is not None and (self.steps & 255) == 0 and time.monotonic() > self.deadline:
            raise ResourceLimitError("time budget exhausted")


_NO_BUDGET = Budget()


class _Bottom:
    """Marker for ``Z0`` as the stored component of a summary pair."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "⊥"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()


@dataclass(frozen=True)
class Opa:
    matrix: PrecedenceMatrix
    states: tuple
    initial: frozenset
    final: frozenset
    push: frozenset  # (q, a, q')
    shift: frozenset  # (q, a, q')
    pop: frozenset  # (q, p, q')

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(dict.fromkeys(self.states)))
        for name in ("initial", "final", "push", "shift", "pop"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        qs = set(self.states)
        if not self.initial <= qs or not self.final <= qs:
            raise AutomatonFormatError("initial and final states must be states")
        terms = set(self.matrix.terminals)
        for kind in ("push", "shift"):
            for q, a, r in getattr(self, kind):
                if q not in qs or r not in qs:
                    raise AutomatonFormatError(f"{kind} edge {(q, a, r)} uses an unknown state")
                if a not in terms:
                    raise AutomatonFormatError(f"{kind} edge {(q, a, r)} uses an unknown terminal")
        for q, p, r in self.pop:
            if q not in qs or p not in qs or r not in qs:
                raise AutomatonFormatError(f"pop edge {(q, p, r)} uses an unknown state")
        if self.matrix.conflicts():
            raise ConflictError("an OPA needs a conflict-free alphabet", self.matrix.conflicts())

    @cached_property
    def push_map(self) -> dict:
        out = defaultdict(list)
        for q, a, r in sorted(self.push, key=_edge_key):
            out[(q, a)].append(r)
        return dict(out)

    @cached_property
    def shift_map(self) -> dict:
        out = defaultdict(list)
        for q, a, r in sorted(self.shift, key=_edge_key):
            out[(q, a)].append(r)
        return dict(out)

    @cached_property
    def pop_map(self) -> dict:
        out = defaultdict(list)
        for q, p, r in sorted(self.pop, key=_edge_key):
            out[(q, p)].append(r)
        return dict(out)

    @property
    def terminals(self) -> tuple:
        return self.matrix.terminals

    def __repr__(self):
        return (f"Opa({len(self.states)} states, {len(self.push)} push, "
                f"{len(self.shift)} shift, {len(self.pop)} pop)")


def _skey(x):
    return (type(x).__name__, repr(x))


def _edge_key(e):
    return tuple(_skey(x) for x in e)


def _sorted_states(states):
    return sorted(states, key=_skey)


# ---------------------------------------------------------------------------
# configurations and runs

@dataclass(frozen=True)
class Configuration:
    position: int
    state: Hashable
    stack: tuple  # bottom first: ((terminal, stored state), ...)

    def top_symbol(self) -> str:
        return self.stack[-1][0] if self.stack else DELIMITER


@dataclass
class RunTrace:
    steps: list  # [(move, Configuration)], first move is "start"
    accepted: bool
    tokens: tuple = ()

    def rows(self) -> list[tuple[str, object, list]]:
        """(remaining input, state, stack top first) per configuration."""
        out = []
        for _, c in self.steps:
            rest = " ".join(list(self.tokens[c.position:]) + [DELIMITER])
            out.append((rest, c.state, list(reversed(c.stack))))
        return out

    def format(self) -> str:
        lines = []
        for rest, state, stack in self.rows():
            st = "".join(f"[{a} {q}]" for a, q in stack) or "Z0"
            lines.append(f"{rest}\t{state}\t{st}")
        return "\n".join(lines) + "\n"

    @property
    def final_state(self):
        return self.steps[-1][1].state

    @property
    def max_height(self) -> int:
        return max(len(c.stack) for _, c in self.steps)


@dataclass
class RunResult:
    accepted: bool
    traces: list = field(default_factory=list)

    def __bool__(self):
        return self.accepted


def successors(a: Opa, tokens: Sequence[str], c: Configuration) -> list[tuple[str, Configuration]]:
    """All configurations reachable from ``c`` in one move."""
    la = tokens[c.position] if c.position < len(tokens) else DELIMITER
    top = c.top_symbol()
    rels = a.matrix.get(top, la)
    if not rels:
        return []
    rel = next(iter(rels))
    out = []
    if rel is LT:
        for r in a.push_map.get((c.state, la), ()):
            out.append(("push", Configuration(c.position + 1, r, c.stack + ((la, c.state),))))
    elif rel is EQ:
        if not c.stack:
            return []  # # = #: end of input at Z0
        stored = c.stack[-1][1]
        for r in a.shift_map.get((c.state, la), ()):
            out.append(("shift", Configuration(c.position + 1, r, c.stack[:-1] + ((la, stored),))))
    else:
        stored = c.stack[-1][1]
        for r in a.pop_map.get((c.state, stored), ()):
            out.append(("pop", Configuration(c.position, r, c.stack[:-1])))
    return out


def run(a: Opa, tokens: Sequence[str], budget: Budget | None = None) -> RunResult:
    """Breadth-first exploration of all runs, one trace per reached final state."""
    tokens = tuple(tokens)
    budget = budget or _NO_BUDGET
    n = len(tokens)
    parent: dict = {}
    queue: deque = deque()
    for q in _sorted_states(a.initial):
        c0 = Configuration(0, q, ())
        if c0 not in parent:
            parent[c0] = None
            queue.append(c0)
    accepting: dict = {}
    while queue:
        c = queue.popleft()
        budget.tick()
        if c.position == n and not c.stack and c.state in a.final and c.state not in accepting:
            accepting[c.state] = c
        for move, d in successors(a, tokens, c):
            if d not in parent:
                parent[d] = (move, c)
                queue.append(d)
    traces = []
    for q in _sorted_states(accepting):
        steps = []
        c = accepting[q]
        while c is not None:
            link = parent[c]
            steps.append((link[0] if link else "start", c))
            c = link[1] if link else None
        steps.reverse()
        traces.append(RunTrace(steps, True, tokens))
    return RunResult(bool(traces), traces)


# ---------------------------------------------------------------------------
# summary simulation

class Simulator:
    """Incremental run of all paths at once over summary sets.

    The simulation stack holds ``(terminal, summary below)``; the current
    summary is a frozenset of (state, stored state) pairs.
    """

    __slots__ = ("a", "table", "stack", "summary", "dead")

    def __init__(self, a: Opa):
        self.a = a
        self.table = a.matrix.table
        self.stack: tuple = ()
        self.summary = frozenset((q, BOTTOM) for q in a.initial)
        self.dead = not self.summary

    def copy(self) -> "Simulator":
        s = Simulator.__new__(Simulator)
        s.a, s.table, s.stack, s.summary, s.dead = self.a, self.table, self.stack, self.summary, self.dead
        return s

    def _pops(self, la) -> bool:
        a = self.a
        while True:
            top = self.stack[-1][0] if self.stack else DELIMITER
            rel = self.table.get((top, la))
            if rel is None:
                return False
            if rel is not GT:
                return True
            below = self.stack[-1][1]
            self.summary = pop_summary(a, self.summary, below)
            self.stack = self.stack[:-1]
            if not self.summary:
                return False

    def feed(self, c: str) -> bool:
        if self.dead:
            return False
        if not self._pops(c):
            self.dead = True
            return False
        top = self.stack[-1][0] if self.stack else DELIMITER
        rel = self.table[(top, c)]
        if rel is LT:
            new = push_summary(self.a, self.summary, c)
            self.stack = self.stack + ((c, self.summary),)
        else:
            new = shift_summary(self.a, self.summary, c)
            self.stack = self.stack[:-1] + ((c, self.stack[-1][1]),)
        self.summary = new
        if not new:
            self.dead = True
        return not self.dead

    def accepts_here(self) -> bool:
        if self.dead:
            return False
        s = self.copy()
        if not s._pops(DELIMITER):
            return False
        return any(p is BOTTOM and q in s.a.final for q, p in s.summary)


def push_summary(a: Opa, K: frozenset, c: str) -> frozenset:
    pm = a.push_map
    return frozenset((r, q) for q in {q for q, _ in K} for r in pm.get((q, c), ()))


def shift_summary(a: Opa, K: frozenset, c: str) -> frozenset:
    sm = a.shift_map
    return frozenset((r, p) for q, p in K for r in sm.get((q, c), ()))


def pop_summary(a: Opa, K: frozenset, below: frozenset) -> frozenset:
    pm = a.pop_map
    by_current = defaultdict(list)
    for p, t in below:
        by_current[p].append(t)
    out = set()
    for q, p in K:
        rs = pm.get((q, p))
        if rs and p in by_current:
            for r in rs:
                for t in by_current[p]:
                    out.add((r, t))
    return frozenset(out)


def accepts(a: Opa, tokens: Sequence[str]) -> bool:
    sim = Simulator(a)
    for t in tokens:
        if t not in a.matrix.terminals or not sim.feed(t):
            return False
    return sim.accepts_here()


def language(a: Opa, max_len: int, alphabet: Sequence[str] | None = None) -> set[tuple]:
    """All accepted words of length <= ``max_len`` (DFS with dead-prefix pruning)."""
    alphabet = tuple(alphabet or a.matrix.terminals)
    out: set[tuple] = set()
    stack = [((), Simulator(a))]
    while stack:
        w, sim = stack.pop()
        if sim.accepts_here():
            out.add(w)
        if len(w) == max_len:
            continue
        for c in alphabet:
            if c not in a.matrix.terminals:
                continue
            s2 = sim.copy()
            if s2.feed(c):
                stack.append((w + (c,), s2))
    return out


def universal(m: PrecedenceMatrix) -> Opa:
    """One-state OPA accepting exactly the words compatible with ``m``."""
    q = "u"
    ts = m.terminals
    return Opa(m, (q,), {q}, {q}, {(q, t, q) for t in ts}, {(q, t, q) for t in ts}, {(q, q, q)})


def compatible_words(m: PrecedenceMatrix, max_len: int) -> set[tuple]:
    return language(universal(m), max_len)


# ---------------------------------------------------------------------------
# reachable-context exploration

@dataclass
class _Explored:
    states: list
    push: set
    shift: set
    pop: set


def _explore(table: dict, terminals: Sequence[str], initial: Iterable, push_fn, shift_fn, pop_fn,
             *, budget: Budget | None = None, state_cap: int | None = None) -> _Explored:
    """Build the part of an automaton reachable from ``initial``.

    Contexts are (state, state stored in the top stack symbol, top
    terminal).  A frame evolves independently of what lies below it, so
    ``below[s]`` - the contexts from which a push stored ``s`` - is enough to
    resume after a pop, and pops are only computed for contexts that occur.
    """
    budget = budget or _NO_BUDGET
    states: dict = {}
    push, shift, pop = set(), set(), set()
    ctxs: set = set()
    by_stored: dict = defaultdict(set)
    below: dict = defaultdict(set)
    popped: dict = {}
    todo: deque = deque()

    def see_state(q):
        if q not in states:
            if state_cap is not None and len(states) >= state_cap:
                raise ResourceLimitError(f"construction exceeded {state_cap} states")
            states[q] = None

    def see(ctx):
        if ctx not in ctxs:
            ctxs.add(ctx)
            see_state(ctx[0])
            todo.append(ctx)

    def pops(q, s):
        key = (q, s)
        if key not in popped:
            rs = tuple(pop_fn(q, s))
            popped[key] = rs
            for r in rs:
                see_state(r)
                pop.add((q, s, r))
        return popped[key]

    for q in initial:
        see((q, BOTTOM, DELIMITER))
    while todo:
        q, s, t = ctx = todo.popleft()
        budget.tick()
        for c in terminals:
            rel = table.get((t, c))
            if rel is LT:
                for r in push_fn(q, c):
                    push.add((q, c, r))
                    see((r, q, c))
                    if (s, t) not in below[q]:
                        below[q].add((s, t))
                        for q2 in list(by_stored[q]):
                            for r2 in pops(q2, q):
                                see((r2, s, t))
            elif rel is EQ:
                for r in shift_fn(q, c):
                    shift.add((q, c, r))
                    see((r, s, c))
        if s is not BOTTOM:
            by_stored[s].add(q)
            for r in pops(q, s):
                for s2, t2 in list(below[s]):
                    see((r, s2, t2))
    return _Explored(list(states), push, shift, pop)


def reachable(a: Opa) -> Opa:
    """The part of ``a`` reachable on some compatible input."""
    e = _explore(a.matrix.table, a.matrix.terminals, _sorted_states(a.initial),
                 lambda q, c: a.push_map.get((q, c), ()),
                 lambda q, c: a.shift_map.get((q, c), ()),
                 lambda q, p: a.pop_map.get((q, p), ()))
    keep = set(e.states)
    return Opa(a.matrix, [q for q in a.states if q in keep], a.initial, a.final & keep,
               e.push, e.shift, e.pop)


trim = reachable


# ---------------------------------------------------------------------------
# determinism and determinization

def is_deterministic(a: Opa) -> bool:
    if len(a.initial) != 1:
        return False
    return all(len(v) <= 1 for v in a.push_map.values()) and \
        all(len(v) <= 1 for v in a.shift_map.values()) and \
        all(len(v) <= 1 for v in a.pop_map.values())


def determinize(a: Opa, *, complete: bool = False, state_cap: int = DEFAULT_STATE_CAP,
                budget: Budget | None = None) -> Opa:
    """Summary-set construction, states named ``d0, d1, ...``.

    With ``complete`` the empty summary is kept as a sink, so every
    compatible word has exactly one run and complementation is a flip of
    final states.
    """
    def keep(K):
        return (K,) if (K or complete) else ()

    init = frozenset((q, BOTTOM) for q in a.initial)
    e = _explore(a.matrix.table, a.matrix.terminals, [init],
                 lambda K, c: keep(push_summary(a, K, c)),
                 lambda K, c: keep(shift_summary(a, K, c)),
                 lambda K, P: keep(pop_summary(a, K, P)),
                 budget=budget, state_cap=state_cap)
    names = {K: f"d{i}" for i, K in enumerate(e.states)}
    final = {names[K] for K in e.states if any(p is BOTTOM and q in a.final for q, p in K)}
    return Opa(a.matrix, list(names.values()), {names[init]}, final,
               {(names[q], c, names[r]) for q, c, r in e.push},
               {(names[q], c, names[r]) for q, c, r in e.shift},
               {(names[q], names[p], names[r]) for q, p, r in e.pop})


def complement(a: Opa, **kw) -> Opa:
    """Accepts the ``M``-compatible words that ``a`` rejects."""
    d = determinize(a, complete=True, **kw)
    return Opa(d.matrix, d.states, d.initial, set(d.states) - d.final, d.push, d.shift, d.pop)


# ---------------------------------------------------------------------------
# alphabet lifting and Boolean operations

def lift(a: Opa, m: PrecedenceMatrix) -> Opa:
    """Re-express ``a`` over a larger compatible matrix without changing
    its language.

    If ``m`` adds no relation between terminals of ``a`` the transitions are
    reused as they are.  Otherwise states are extended with the terminal on
    top of the stack and the set of terminals popped since the last read, so
    that moves the original matrix forbids are dropped.
    """
    if not is_compatible(a.matrix, m):
        raise IncompatibleMatricesError("matrices are not compatible",
                                        matrix_union(a.matrix, m).conflicts())
    union = matrix_union(m, a.matrix)
    own = set(a.matrix.terminals)
    widened = any(union.get(x, y) and not a.matrix.get(x, y) for x in own for y in own)
    if not widened:
        return Opa(union, a.states, a.initial, a.final, a.push, a.shift, a.pop)
    orig = a.matrix.table
    empty = frozenset()

    def guarded(state, c, kind):
        q, t, P = state
        if orig.get((t, c)) is None or any(orig.get((x, c)) is None for x in P):
            return ()
        moves = a.push_map if kind == "push" else a.shift_map
        return [(r, c, empty) for r in moves.get((q, c), ())]

    def pop_fn(state, stored):
        q, t, P = state
        p, tp, _ = stored
        return [(r, tp, P | {t}) for r in a.pop_map.get((q, p), ())]

    start = [(q, DELIMITER, empty) for q in _sorted_states(a.initial)]
    e = _explore(union.table, union.terminals, start,
                 lambda s, c: guarded(s, c, "push"), lambda s, c: guarded(s, c, "shift"), pop_fn)
    final = {s for s in e.states if s[0] in a.final and s[1] == DELIMITER}
    return Opa(union, e.states, set(start), final, e.push, e.shift, e.pop)


def _common(a: Opa, b: Opa) -> tuple[Opa, Opa]:
    if not is_compatible(a.matrix, b.matrix):
        raise IncompatibleMatricesError("the two alphabets have incompatible matrices",
                                        matrix_union(a.matrix, b.matrix).conflicts())
    m = matrix_union(a.matrix, b.matrix)
    return lift(a, m), lift(b, m)


def intersect(a: Opa, b: Opa, budget: Budget | None = None) -> Opa:
    """Synchronized product over the union matrix (reachable part)."""
    a, b = _common(a, b)

    def pair(ma, mb):
        return lambda s, c: [(x, y) for x in ma.get((s[0], c), ()) for y in mb.get((s[1], c), ())]

    def pop_fn(s, p):
        return [(x, y) for x in a.pop_map.get((s[0], p[0]), ()) for y in b.pop_map.get((s[1], p[1]), ())]

    start = [(p, q) for p in _sorted_states(a.initial) for q in _sorted_states(b.initial)]
    e = _explore(a.matrix.table, a.matrix.terminals, start,
                 pair(a.push_map, b.push_map), pair(a.shift_map, b.shift_map), pop_fn, budget=budget)
    final = {s for s in e.states if s[0] in a.final and s[1] in b.final}
    return Opa(a.matrix, e.states, set(start), final, e.push, e.shift, e.pop)


def union(a: Opa, b: Opa) -> Opa:
    """Disjoint union of the two (lifted) automata."""
    a, b = _common(a, b)

    def tag(x, q):
        return (x, q)

    st = [tag(0, q) for q in a.states] + [tag(1, q) for q in b.states]
    return Opa(a.matrix, st,
               {tag(0, q) for q in a.initial} | {tag(1, q) for q in b.initial},
               {tag(0, q) for q in a.final} | {tag(1, q) for q in b.final},
               {(tag(0, q), c, tag(0, r)) for q, c, r in a.push} | {(tag(1, q), c, tag(1, r)) for q, c, r in b.push},
               {(tag(0, q), c, tag(0, r)) for q, c, r in a.shift} | {(tag(1, q), c, tag(1, r)) for q, c, r in b.shift},
               {(tag(0, q), tag(0, p), tag(0, r)) for q, p, r in a.pop}
               | {(tag(1, q), tag(1, p), tag(1, r)) for q, p, r in b.pop})


def is_empty(a: Opa, budget: Budget | None = None) -> bool:
    return is_empty_language(opa_to_grammar(a, budget=budget))


def contains(a: Opa, b: Opa, budget: Budget | None = None) -> bool:
    """L(a) ⊆ L(b)."""
    a2, b2 = _common(a, b)
    return is_empty(intersect(a2, complement(b2, budget=budget), budget=budget), budget=budget)


def relabel(a: Opa, prefix: str = "q") -> Opa:
    """Rename states to ``prefix0, prefix1, ...`` in a stable order;
    string-named automata keep their names."""
    if all(isinstance(q, str) for q in a.states):
        return a
    names = {q: f"{prefix}{i}" for i, q in enumerate(a.states)}
    return Opa(a.matrix, [names[q] for q in a.states], {names[q] for q in a.initial},
               {names[q] for q in a.final},
               {(names[q], c, names[r]) for q, c, r in a.push},
               {(names[q], c, names[r]) for q, c, r in a.shift},
               {(names[q], names[p], names[r]) for q, p, r in a.pop})


# ---------------------------------------------------------------------------
# grammar <-> automaton

def _fmt(seq) -> str:
    return " ".join(seq) if seq else "ε"


def state_label(s) -> str:
    alpha, beta = s
    return f"⟨{_fmt(alpha)}, {_fmt(beta)}⟩"


def grammar_to_opa(g: Grammar, *, labels: bool = True) -> Opa:
    """OPA whose states pair the rhs prefix under construction with the
    prefix of the rhs suspended below it."""
    report = check_fnf(g)
    if not report.is_operator_form:
        raise GrammarError("grammar_to_opa needs an operator grammar")
    if report.has_forbidden_empty_rules:
        raise GrammarError("grammar_to_opa needs empty rules confined to the axiom")
    if report.has_forbidden_renaming_rules:
        g = eliminate_renaming(g)  # repeated rhs afterwards: nondeterministic guesses
    m = compute_opm(g)
    if m.conflicts():
        raise ConflictError("the grammar's matrix has conflicts", m.conflicts())
    rules = [p for p in g.productions if p.rhs and not g.is_renaming(p)]
    prefixes = {p.rhs[:i] for p in rules for i in range(1, len(p.rhs) + 1)}
    lhs_of: dict = defaultdict(list)
    for p in rules:
        if p.lhs not in lhs_of[p.rhs]:
            lhs_of[p.rhs].append(p.lhs)
    isnt = g.is_nonterminal

    def ends_terminal(alpha):
        return bool(alpha) and not isnt(alpha[-1])

    def push_fn(s, c):
        alpha, beta = s
        nxt = (alpha + (c,), beta) if len(alpha) == 1 and isnt(alpha[0]) else ((c,), alpha)
        return (nxt,) if nxt[0] in prefixes else ()

    def shift_fn(s, c):
        alpha, beta = s
        if ends_terminal(alpha):
            nxt = (alpha + (c,), beta)
        elif len(alpha) == 1:
            nxt = (beta + alpha + (c,), ())
        else:
            return ()
        return (nxt,) if nxt[0] in prefixes else ()

    def pop_fn(s, sp):
        alpha, beta = s
        if ends_terminal(alpha):
            done = alpha
        elif len(alpha) == 1 and ends_terminal(beta):
            done = beta + alpha
        else:
            return ()
        ap, bp = sp
        susp = ap if (not ap or ends_terminal(ap)) else bp
        return [((lhs,), susp) for lhs in lhs_of.get(done, ())]

    init = ((), ())
    e = _explore(m.table, m.terminals, [init], push_fn, shift_fn, pop_fn)
    states, push, shift, pop = e.states, e.push, e.shift, e.pop
    targets = {g.axiom} | {p.rhs[0] for p in g.rules_for(g.axiom) if g.is_renaming(p)}
    final = {s for s in states if s[1] == () and len(s[0]) == 1 and s[0][0] in targets}
    if any(not p.rhs for p in g.rules_for(g.axiom)):
        final.add(init)
    a = Opa(m, states, {init}, final, push, shift, pop)
    if not labels:
        return a
    names = {s: state_label(s) for s in states}
    return Opa(m, [names[s] for s in states], {names[init]}, {names[s] for s in final},
               {(names[q], c, names[r]) for q, c, r in push},
               {(names[q], c, names[r]) for q, c, r in shift},
               {(names[q], names[p], names[r]) for q, p, r in pop})


def _check_eq_acyclic(m: PrecedenceMatrix):
    graph = defaultdict(list)
    for a in m.terminals:
        for b in m.terminals:
            if EQ in m.get(a, b):
                graph[a].append(b)
    colour: dict = {}
    for root in m.terminals:
        if root in colour:
            continue
        stack = [(root, iter(graph[root]))]
        colour[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = 2
                stack.pop()
            elif colour.get(nxt) == 1:
                raise EqualityCycleError(f"the = relation has a cycle through {nxt!r}")
            elif nxt not in colour:
                colour[nxt] = 1
                stack.append((nxt, iter(graph[nxt])))


def opa_to_grammar(a: Opa, budget: Budget | None = None) -> Grammar:
    """Grammar over nonterminals ``<a,q,p,b>``: from state q with ``a``
    below, some run reads a chain body and ends in p with ``b`` ahead."""
    budget = budget or _NO_BUDGET
    m = a.matrix
    _check_eq_acyclic(m)
    a = relabel(a)
    border = (DELIMITER,) + m.terminals
    ts = m.terminals
    table = m.table
    states = _sorted_states(a.states)
    known: dict[tuple, str] = {}  # (a, q, p, b) -> name
    by_head: dict = defaultdict(list)  # (a, q, b) -> [p]
    rules: set = set()

    def name(key):
        x, q, p, y = key
        return f"<{x},{q},{p},{y}>"

    def gap(ai, q, ai1):
        # (state after gap, symbol or None)
        yield q, None
        for p in by_head.get((ai, q, ai1), ()):
            yield p, name((ai, q, p, ai1))

    while True:
        new_rules = set()
        for a0 in border:
            for q0 in states:
                for a1 in ts:
                    if table.get((a0, a1)) is not LT:
                        continue
                    for q0p, lam0 in list(gap(a0, q0, a1)):
                        for q1 in a.push_map.get((q0p, a1), ()):
                            # DFS over a1 = a2 = ... = an with gaps
                            stack = [(a1, q1, (lam0, a1) if lam0 else (a1,))]
                            while stack:
                                ai, qi, body = stack.pop()
                                budget.tick()
                                for b in border:
                                    rel = table.get((ai, b))
                                    if rel is GT and table.get((a0, b)) is not None:
                                        for qip, lam in gap(ai, qi, b):
                                            for r in a.pop_map.get((qip, q0p), ()):
                                                rhs = body + ((lam,) if lam else ())
                                                new_rules.add(((a0, q0, r, b), rhs))
                                    elif rel is EQ and b != DELIMITER:
                                        for qip, lam in gap(ai, qi, b):
                                            for r in a.shift_map.get((qip, b), ()):
                                                stack.append((b, r, body + ((lam,) if lam else ()) + (b,)))
        fresh = new_rules - rules
        if not fresh:
            break
        rules |= fresh
        for key, _ in fresh:
            if key not in known:
                known[key] = name(key)
                by_head[(key[0], key[1], key[3])].append(key[2])

    axiom = "S"
    while axiom in known.values() or axiom in ts:
        axiom += "'"
    prods = []
    for q in _sorted_states(a.initial):
        for f in _sorted_states(a.final):
            key = (DELIMITER, q, f, DELIMITER)
            if key in known:
                prods.append(Production(axiom, (known[key],)))
    if a.initial & a.final:
        prods.append(Production(axiom, ()))
    for key, rhs in sorted(rules, key=lambda kr: (name(kr[0]), kr[1])):
        prods.append(Production(name(key), rhs))
    nts = [axiom] + sorted({p.lhs for p in prods if p.lhs != axiom})
    return Grammar(tuple(nts), ts, axiom, tuple(dict.fromkeys(prods)))


# ---------------------------------------------------------------------------
# serialization

def _state_name(q) -> str:
    return q if isinstance(q, str) else repr(q)


def to_json_obj(a: Opa) -> dict:
    a = relabel(a)
    order = {q: i for i, q in enumerate(a.states)}

    def k3(e):
        return tuple((order.get(x, -1), x if isinstance(x, str) else "") for x in e)

    return {
        "terminals": list(a.matrix.terminals),
        "matrix": a.matrix.to_json_obj()["cells"],
        "states": list(a.states),
        "initial": sorted(a.initial, key=order.__getitem__),
        "final": sorted(a.final, key=order.__getitem__),
        "push": [list(e) for e in sorted(a.push, key=k3)],
        "shift": [list(e) for e in sorted(a.shift, key=k3)],
        "pop": [list(e) for e in sorted(a.pop, key=k3)],
    }


def to_json(a: Opa) -> str:
    return json.dumps(to_json_obj(a), indent=2, ensure_ascii=False)


def from_json_obj(obj: dict) -> Opa:
    try:
        m = PrecedenceMatrix.from_json_obj({"terminals": obj["terminals"], "cells": obj["matrix"]})
        return Opa(m, obj["states"], obj["initial"], obj["final"],
                   {tuple(e) for e in obj.get("push", [])},
                   {tuple(e) for e in obj.get("shift", [])},
                   {tuple(e) for e in obj.get("pop", [])})
    except (KeyError, TypeError, ValueError) as exc:
        raise AutomatonFormatError(f"malformed automaton: {exc}") from exc


def load_opa(text: str) -> Opa:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AutomatonFormatError(f"not JSON: {exc}") from exc
    return from_json_obj(obj)


def read_opa(path) -> Opa:
    with open(path, encoding="utf-8") as fh:
        return load_opa(fh.read())


def to_dot(a: Opa) -> str:
    """Graphviz rendering: push solid, shift dashed, pop double."""
    a = relabel(a)
    ids = {q: f"n{i}" for i, q in enumerate(a.states)}

    def lab(x):
        return json.dumps(str(x), ensure_ascii=False)

    lines = ["digraph opa {", "  rankdir=LR;", '  node [shape=circle];', '  start [shape=point];']
    for q in a.states:
        shape = "doublecircle" if q in a.final else "circle"
        lines.append(f"  {ids[q]} [label={lab(q)}, shape={shape}];")
    for q in a.states:
        if q in a.initial:
            lines.append(f"  start -> {ids[q]};")
    groups = defaultdict(list)
    for q, c, r in a.push:
        groups[(q, r, "push")].append(c)
    for q, c, r in a.shift:
        groups[(q, r, "shift")].append(c)
    for q, p, r in a.pop:
        groups[(q, r, "pop")].append(_state_name(p))
    style = {"push": "solid", "shift": "dashed", "pop": "solid"}
    for (q, r, kind) in sorted(groups, key=lambda k: (a.states.index(k[0]), a.states.index(k[1]), k[2])):
        text = ", ".join(sorted(groups[(q, r, kind)]))
        extra = ', color="black:invis:black"' if kind == "pop" else ""
        lines.append(f"  {ids[q]} -> {ids[r]} [label={lab(text)}, style={style[kind]}{extra}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
