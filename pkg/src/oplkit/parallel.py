"""Chunked parallel parsing.

The input is framed as ``# t0 ... tn-1 #`` and cut at terminal positions.
Chunk ``i`` spans from cut ``c_i`` to cut ``c_{i+1}`` inclusive, so adjacent
chunks share exactly the cut token: it is the lookahead of the chunk on its
left and the (barrier) bottom of the chunk on its right.  Each worker
returns a residue that starts and ends with its two cut items; recombining
drops the duplicated cut and yields the mixed string for the next pass.

For the next pass, cuts are placed only at *valleys*, i.e. at the last
terminal of each ``zeta`` factor, so that every new chunk faces the ``theta``
of one residue with the ``zeta`` of the next.
"""

from __future__ import annotations

import concurrent.futures as cf
import os
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import OplError, ParseError, PassLimitError
from .grammar import DELIMITER, Grammar
from .opm import GT, PrecedenceMatrix
from .parser import OpParser, PartialParseState, _parser_for
from .trees import Leaf, Tree

DEFAULT_MAX_PASSES = 16
DEFAULT_SINGLE_THRESHOLD = 1024
DEFAULT_WINDOW = 4


@dataclass(frozen=True)
class ChunkPlan:
    """Cuts over the framed string and the matching token ranges.

    ``cuts`` are indices into ``# tokens #`` (0 and n+1 are the borders);
    ``segments`` are half-open token ranges that include the shared tokens
    at both ends; ``overlaps`` lists the shared token index of each seam.
    """

    cuts: tuple[int, ...]
    n_tokens: int

    @property
    def k(self) -> int:
        return len(self.cuts) - 1

    @property
    def segments(self) -> list[tuple[int, int]]:
        n = self.n_tokens
        return [(max(a - 1, 0), min(b, n)) for a, b in zip(self.cuts, self.cuts[1:])]

    @property
    def overlaps(self) -> list[int]:
        return [c - 1 for c in self.cuts[1:-1]]


@dataclass
class PassResult:
    index: int
    states: list[PartialParseState]
    mixed: list
    cuts: tuple[int, ...]
    wall_time: float


@dataclass
class ParallelResult:
    tree: Tree
    passes: list[PassResult] = field(default_factory=list)

    @property
    def pass_count(self) -> int:
        return len(self.passes)


# ---------------------------------------------------------------------------
# splitting

def _equal_targets(length: int, k: int) -> list[int]:
    # interior cut targets over framed indices 1..length
    return [round(i * length / k) for i in range(1, k)]


def _pick_cuts(targets, candidates, upper) -> list[int]:
    """Map each target to the nearest unused candidate, keeping order."""
    import bisect
    chosen: list[int] = []
    cand = sorted(c for c in candidates if 0 < c < upper)
    for t in targets:
        i = bisect.bisect_left(cand, t)
        best = None
        for j in (i - 1, i, i + 1):
            if 0 <= j < len(cand) and (not chosen or cand[j] > chosen[-1]):
                if best is None or abs(cand[j] - t) < abs(best - t):
                    best = cand[j]
        if best is None:
            # nothing left of or at the target; take the first one after the last cut
            k = bisect.bisect_right(cand, chosen[-1]) if chosen else 0
            if k < len(cand):
                best = cand[k]
        if best is not None and (not chosen or best > chosen[-1]):
            chosen.append(best)
    return chosen


def split_chunks(tokens: Sequence[str], k: int, policy: str = "equal",
                 matrix: PrecedenceMatrix | None = None, window: int = DEFAULT_WINDOW) -> ChunkPlan:
    """Plan ``k`` overlapping chunks over a terminal token list.

    ``policy="equal"`` balances chunk lengths; ``policy="after-gt"`` moves
    each cut right by up to ``window`` tokens so that it lands just after a
    ``>`` relation (needs ``matrix``).
    """
    n = len(tokens)
    if k < 1:
        raise ValueError("k must be at least 1")
    if n == 0:
        return ChunkPlan((0, 1), 0)
    k = min(k, n)
    cuts = _equal_targets(n, k)
    if policy == "after-gt":
        if matrix is None:
            raise ValueError("the after-gt policy needs the precedence matrix")
        cuts = [_shift_after_gt(tokens, c, window, matrix) for c in cuts]
    elif policy != "equal":
        raise ValueError(f"unknown split policy {policy!r}")
    cuts = _pick_cuts(cuts, range(1, n + 1), n + 1)
    return ChunkPlan(tuple([0] + cuts + [n + 1]), n)


def _shift_after_gt(tokens, cut, window, m) -> int:
    # framed index ``cut`` is token ``cut - 1``
    for c in range(cut, min(cut + window, len(tokens)) + 1):
        t = c - 1
        if t >= 1 and m.get(tokens[t - 1], tokens[t]) == {GT}:
            return c
    return cut


# ---------------------------------------------------------------------------
# recombination

def recombine(results: Sequence) -> list:
    """Concatenate residues, merging the cut item shared by neighbours.

    Accepts :class:`PartialParseState` objects or plain residue lists.
    """
    out: list = []
    for i, r in enumerate(results):
        residue = r.residue if isinstance(r, PartialParseState) else list(r)
        if i and out and residue:
            a, b = out[-1], residue[0]
            if a[0] != b[0] or not _same_node(a[1], b[1]):
                raise OplError(f"overlap mismatch between chunks {i - 1} and {i}: {a[0]!r} vs {b[0]!r}")
            residue = residue[1:]
        out.extend(residue)
    return out


def _same_node(x, y) -> bool:
    if x is y:
        return True
    if isinstance(x, Leaf) and isinstance(y, Leaf):
        return x == y
    return False


def valley_positions(states: Sequence[PartialParseState]) -> list[int]:
    """Indices, in the recombined string, of the last terminal of each zeta."""
    out = []
    base = 0
    for i, st in enumerate(states):
        res = st.residue
        if i:
            base -= 1  # shared cut item
        zeta = st.left_stack
        for j in range(len(zeta) - 1, -1, -1):
            if isinstance(zeta[j][1], Leaf):
                out.append(base + j)
                break
        base += len(res)
    return out


# ---------------------------------------------------------------------------
# executors

class SerialExecutor(cf.Executor):
    """Runs tasks inline; the reference schedule."""

    def submit(self, fn, /, *args, **kwargs):
        fut: cf.Future = cf.Future()
        try:
            fut.set_result(fn(*args, **kwargs))
        except BaseException as exc:  # noqa: BLE001 - delivered through the future
            fut.set_exception(exc)
        return fut


class ShuffledExecutor(cf.Executor):
    """Defers every task and completes a batch in random order on demand.

    Used to check that the join does not depend on completion order.
    """

    def __init__(self, seed: int | None = None):
        self.rng = random.Random(seed)
        self.pending: list = []
        self.completion_order: list[int] = []

    def submit(self, fn, /, *args, **kwargs):
        fut = _LazyFuture(self)
        self.pending.append((len(self.pending), fut, fn, args, kwargs))
        return fut

    def drain(self):
        batch, self.pending = self.pending, []
        self.rng.shuffle(batch)
        for idx, fut, fn, args, kwargs in batch:
            self.completion_order.append(idx)
            try:
                fut.set_result(fn(*args, **kwargs))
            except BaseException as exc:  # noqa: BLE001
                fut.set_exception(exc)


class _LazyFuture(cf.Future):
    def __init__(self, owner):
        super().__init__()
        self._owner = owner

    def result(self, timeout=None):
        if not self.done():
            self._owner.drain()
        return super().result(timeout)


def _make_executor(kind, workers: int):
    if kind is None:
        kind = "process" if workers > 1 and (os.cpu_count() or 1) > 1 else "serial"
    if isinstance(kind, cf.Executor):
        return kind, False
    if kind == "serial":
        return SerialExecutor(), True
    if kind == "thread":
        return cf.ThreadPoolExecutor(max_workers=workers), True
    if kind == "process":
        return cf.ProcessPoolExecutor(max_workers=workers), True
    raise ValueError(f"unknown executor {kind!r}")


def _work(g: Grammar, m: PrecedenceMatrix, inner, left, right):
    return _parser_for(g, m).partial(inner, left, right)


# ---------------------------------------------------------------------------
# driver

class ParallelParser:
    def __init__(self, g: Grammar, m: PrecedenceMatrix | None = None, *,
                 workers: int | None = None, max_passes: int = DEFAULT_MAX_PASSES,
                 policy: str = "equal", window: int = DEFAULT_WINDOW,
                 single_threshold: int = DEFAULT_SINGLE_THRESHOLD, executor=None,
                 canonical_errors: bool = True):
        self.parser: OpParser = _parser_for(g, m)
        self.grammar = g
        self.matrix = self.parser.matrix
        self.workers = workers or os.cpu_count() or 1
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        self.max_passes = max_passes
        self.policy = policy
        self.window = window
        self.single_threshold = single_threshold
        self.executor_spec = executor
        self.canonical_errors = canonical_errors

    def run(self, tokens: Sequence[str]) -> ParallelResult:
        tokens = list(tokens)
        n = len(tokens)
        self.parser._check_tokens(tokens)
        mixed = ([(DELIMITER, Leaf(DELIMITER, -1))]
                 + [(t, Leaf(t, i)) for i, t in enumerate(tokens)]
                 + [(DELIMITER, Leaf(DELIMITER, n))])
        ex, owned = _make_executor(self.executor_spec, self.workers)
        passes: list[PassResult] = []
        try:
            k = min(self.workers, max(n, 1))
            cuts = self._first_cuts(tokens, k)
            while True:
                if len(passes) >= self.max_passes:
                    raise PassLimitError(f"no complete parse after {self.max_passes} passes",
                                         [s for s, _ in mixed])
                t0 = time.perf_counter()
                futures = []
                for a, b in zip(cuts, cuts[1:]):
                    futures.append(ex.submit(_work, self.grammar, self.matrix,
                                             mixed[a + 1:b], mixed[a], mixed[b]))
                states, errors = [], []
                for f in futures:  # deterministic join in chunk order
                    try:
                        states.append(f.result())
                    except Exception as exc:  # noqa: BLE001
                        errors.append(exc)
                        states.append(None)
                if errors:
                    raise self._diagnose(tokens, errors[0])
                new_mixed = recombine(states)
                passes.append(PassResult(len(passes), states, new_mixed, tuple(cuts),
                                         time.perf_counter() - t0))
                if len(cuts) == 2:
                    return ParallelResult(self.parser.finish(states[0], n), passes)
                valleys = valley_positions(states)
                mixed = new_mixed
                k = max(1, min(k - 1, k // 2 if k > 2 else 1))
                if len(mixed) - 2 <= self.single_threshold:
                    k = 1
                cuts = self._next_cuts(mixed, valleys, k)
        finally:
            if owned:
                ex.shutdown()

    def _diagnose(self, tokens, first_error):
        """Rejection is already decided; report the defect the left-to-right
        schedule meets first so diagnostics do not depend on ``k``."""
        if not self.canonical_errors or not isinstance(first_error, ParseError):
            return first_error
        try:
            self.parser.parse(tokens)
        except ParseError as exc:
            exc.__cause__ = first_error
            return exc
        return OplError(f"worker rejected an input the sequential parser accepts: {first_error}")

    def _first_cuts(self, tokens, k) -> list[int]:
        if len(tokens) == 0 or k == 1:
            return [0, len(tokens) + 1]
        plan = split_chunks(tokens, k, self.policy, self.matrix, self.window)
        return list(plan.cuts)

    def _next_cuts(self, mixed, valleys, k) -> list[int]:
        last = len(mixed) - 1
        if k <= 1:
            return [0, last]
        targets = _equal_targets(last, k)
        picked = _pick_cuts(targets, valleys, last)
        return [0] + picked + [last]


def parallel_parse(g: Grammar, m: PrecedenceMatrix | None, tokens: Sequence[str], k: int | None = None,
                   max_passes: int = DEFAULT_MAX_PASSES, **options) -> Tree:
    """Parse with ``k`` workers; the tree equals the sequential parser's."""
    return ParallelParser(g, m, workers=k, max_passes=max_passes, **options).run(tokens).tree


# ---------------------------------------------------------------------------
# benchmark support

def arithmetic_corpus(n_tokens: int, seed: int = 0, operators: Sequence[str] = ("+", "*")) -> list[str]:
    """A random ``e op e op ... e`` expression with about ``n_tokens`` tokens."""
    rng = random.Random(seed)
    n = max(1, n_tokens | 1)  # odd length
    out = ["e"] * n
    for i in range(1, n, 2):
        out[i] = rng.choice(operators)
    return out


def benchmark(g: Grammar, m: PrecedenceMatrix | None, tokens: Sequence[str], k: int,
              executor=None, sequential_time: float | None = None,
              clock: Callable[[], float] = time.perf_counter, **options) -> dict:
    """Benchmark report: tokens, k, passes, per-pass wall time, residue sizes
    and speedup against a one-worker run."""
    if sequential_time is None:
        t0 = clock()
        ParallelParser(g, m, workers=1, executor="serial", **options).run(tokens)
        sequential_time = clock() - t0
    t0 = clock()
    result = ParallelParser(g, m, workers=k, executor=executor, **options).run(tokens)
    elapsed = clock() - t0
    return {
        "tokens": len(tokens),
        "k": k,
        "passes": result.pass_count,
        "wall_time_per_pass": [p.wall_time for p in result.passes],
        "residue_lengths": [len(p.mixed) - 2 for p in result.passes],
        "speedup_vs_sequential": sequential_time / elapsed if elapsed > 0 else float("inf"),
        "cpu_count": os.cpu_count(),
    }
