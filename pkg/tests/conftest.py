import itertools
import os
import random

import pytest

import oplkit
from oplkit.grammar import generate_strings, make_invertible, read_grammar
from oplkit.opa import Opa, read_opa, run
from oplkit.opm import PrecedenceMatrix

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")

# Hand-transcribed reference matrices.
GAE1_OPM = PrecedenceMatrix.from_rows("+*e", ["><<", ">><", ">>."])
GAE_P_TERMINALS = ["+", "*", "(", ")", "e"]
GAE_P_OPM = PrecedenceMatrix.from_rows(GAE_P_TERMINALS, ["><<><", ">><><", "<<<=<", ">>.>.", ">>.>."])
INTERRUPT_OPM = PrecedenceMatrix.from_rows(["call", "ret", "int", "serve"],
                                    ["<=>>", ">>>>", "..<=", ">>>>"])


def grammar(name):
    return read_grammar(oplkit.data_path(name))


@pytest.fixture(scope="session")
def gae1():
    return grammar("gae1.g")


@pytest.fixture(scope="session")
def gae_fnf():
    return grammar("gae_fnf.g")


@pytest.fixture(scope="session")
def gae_p():
    return grammar("gae_p.g")


@pytest.fixture(scope="session")
def gae_p_fnf():
    return make_invertible(grammar("gae_p.g"))


@pytest.fixture(scope="session")
def interrupt():
    return grammar("interrupt.g")


@pytest.fixture(scope="session")
def anbn():
    return grammar("anbn.g")


@pytest.fixture(scope="session")
def expr_opa():
    return read_opa(oplkit.data_path("expr_opa.json"))


@pytest.fixture(scope="session")
def interrupt_opa():
    return read_opa(oplkit.data_path("interrupt_opa.json"))


def all_words(alphabet, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def run_language(a: Opa, max_len: int) -> set:
    """Reference enumeration through the configuration-level ``run``.

    Words with an adjacent empty cell can never be accepted, so they are
    skipped before the (slow) breadth-first run.
    """
    m = a.matrix
    out = set()
    for w in all_words(a.terminals, max_len):
        if any(not m.get(x, y) for x, y in zip(w, w[1:])):
            continue
        if run(a, w).accepted:
            out.add(w)
    return out


def parity_opa(m: PrecedenceMatrix, letter: str) -> Opa:
    """Compatible words with an even number of ``letter``."""
    qs = ("even", "odd")
    flip = {"even": "odd", "odd": "even"}
    push = {(q, c, flip[q] if c == letter else q) for q in qs for c in m.terminals}
    shift = {(q, c, flip[q] if c == letter else q) for q in qs for c in m.terminals}
    pop = {(q, p, q) for q in qs for p in qs}
    return Opa(m, qs, {"even"}, {"even"}, push, shift, pop)


def sample_sentence(g, rng: random.Random, max_depth: int = 12):
    """Random derivation; past ``max_depth`` only rules with the fewest
    nonterminals are chosen, so every sample terminates."""
    def weight(p):
        return sum(g.is_nonterminal(x) for x in p.rhs)

    out = []
    stack = [(g.axiom, 0)]
    while stack:
        sym, d = stack.pop()
        if not g.is_nonterminal(sym):
            out.append(sym)
            continue
        rules = [p for p in g.rules_for(sym)]
        if d > max_depth:
            least = min(weight(p) for p in rules)
            rules = [p for p in rules if weight(p) == least]
        p = rng.choice(rules)
        for x in reversed(p.rhs):
            stack.append((x, d + 1))
    return tuple(out)


def mutate(w, alphabet, rng: random.Random):
    w = list(w)
    op = rng.randrange(3)
    if op == 0 and w:
        del w[rng.randrange(len(w))]
    elif op == 1:
        w.insert(rng.randrange(len(w) + 1), rng.choice(alphabet))
    elif w:
        w[rng.randrange(len(w))] = rng.choice(alphabet)
    return tuple(w)


def members(g, max_len):
    return generate_strings(g, max_len)
