import json
import os

import pytest

from oplkit.errors import (AutomatonFormatError, ConflictError, EqualityCycleError,
                           IncompatibleMatricesError, ResourceLimitError)
from oplkit.grammar import Grammar, generate_strings
from oplkit.opm import PrecedenceMatrix, is_compatible_word
from oplkit.opa import (Budget, Opa, complement, contains, determinize, grammar_to_opa, intersect,
                        is_deterministic, is_empty, language, lift, load_opa, opa_to_grammar,
                        reachable, run, to_dot, to_json, union, universal)
from oplkit.parser import accepts

from conftest import GAE_P_OPM, GOLDEN, all_words, parity_opa, run_language


def small_nfa():
    """{a} u {aa} with two overlapping push edges on ``a``."""
    m = PrecedenceMatrix.from_rows("a", [">"])
    return Opa(m, ["p", "q", "r", "f"], {"p"}, {"q", "f"},
               {("p", "a", "q"), ("p", "a", "r"), ("r", "a", "f"), ("q", "a", "f")},
               set(), {("q", "p", "q"), ("r", "p", "r"), ("f", "r", "f")})


class TestRun:
    def test_golden_trace(self, expr_opa):
        res = run(expr_opa, "e + e * ( e + e )".split())
        assert res.accepted and len(res.traces) == 1
        trace = res.traces[0]
        with open(os.path.join(GOLDEN, "expr_trace.txt")) as fh:
            assert trace.format() == fh.read()
        assert len(trace.steps) == 18
        assert trace.final_state == "q3" and trace.max_height == 5

    def test_height_discipline(self, expr_opa):
        trace = run(expr_opa, "( e ) * e + e".split()).traces[0]
        for (_, a), (move, b) in zip(trace.steps, trace.steps[1:]):
            delta = {"push": 1, "shift": 0, "pop": -1}[move]
            assert len(b.stack) - len(a.stack) == delta
            assert b.position - a.position == (0 if move == "pop" else 1)

    def test_empty_input(self, expr_opa):
        assert not run(expr_opa, []).accepted

    def test_interrupt_pair(self, interrupt_opa):
        res = run(interrupt_opa, "call call ret int serve call ret".split())
        assert res.accepted
        states = [c.state for _, c in res.traces[0].steps]
        assert states[0] == "q0" and states[1] == "q1" and states[-1] == "q0"
        assert not run(interrupt_opa, "call serve".split()).accepted

    def test_summary_simulation_matches_run(self, expr_opa, interrupt_opa):
        for a in (expr_opa, interrupt_opa, small_nfa()):
            assert language(a, 6) == run_language(a, 6)

    def test_budget(self, expr_opa):
        with pytest.raises(ResourceLimitError):
            run(expr_opa, "e + e * ( e + e )".split(), budget=Budget(max_steps=5))
        b = Budget()
        b.cancel()
        with pytest.raises(ResourceLimitError):
            determinize(expr_opa, budget=b)


class TestDeterminism:
    def test_flags(self, expr_opa, interrupt_opa):
        assert is_deterministic(expr_opa) and is_deterministic(interrupt_opa)
        assert not is_deterministic(small_nfa())
        two_initial = Opa(expr_opa.matrix, expr_opa.states, {"q0", "q1"}, expr_opa.final,
                          expr_opa.push, expr_opa.shift, expr_opa.pop)
        assert not is_deterministic(two_initial)

    def test_small_nfa(self):
        a = small_nfa()
        d = determinize(a)
        assert is_deterministic(d)
        assert run_language(d, 4) == run_language(a, 4) == {("a",), ("a", "a")}

    def test_deterministic_input(self, expr_opa):
        d = determinize(expr_opa)
        assert is_deterministic(d) and language(d, 6) == language(expr_opa, 6)

    def test_gae1_automaton(self, gae1):
        a = grammar_to_opa(gae1)
        assert not is_deterministic(a)
        d = determinize(a)
        assert is_deterministic(d)
        assert run_language(d, 6) == run_language(a, 6) == generate_strings(gae1, 6)

    def test_state_cap(self, gae1):
        with pytest.raises(ResourceLimitError):
            determinize(grammar_to_opa(gae1), state_cap=3)


class TestComplement:
    def test_against_compatible_words(self, expr_opa):
        c = complement(expr_opa)
        m = expr_opa.matrix
        acc = language(expr_opa, 6)
        assert language(c, 6) == {w for w in all_words(m.terminals, 6)
                                  if is_compatible_word(m, w) and w not in acc}
        assert not run(c, "e + e * ( e + e )".split()).accepted

    def test_double_complement(self, expr_opa):
        assert language(complement(complement(expr_opa)), 6) == language(expr_opa, 6)

    def test_empty_automaton_over_total_matrix(self):
        m = PrecedenceMatrix.from_rows("ab", ["<=", ">>"])
        empty = Opa(m, ["q"], {"q"}, set(), set(), set(), set())
        c = complement(empty)
        assert language(c, 6) == {w for w in all_words("ab", 6) if is_compatible_word(m, w)}


class TestBoolean:
    def test_union_intersection(self, expr_opa, gae_p_fnf):
        a = grammar_to_opa(gae_p_fnf)
        b = parity_opa(GAE_P_OPM, "e")
        la, lb = language(a, 6), language(b, 6)
        assert language(intersect(a, b), 6) == la & lb
        assert language(union(a, b), 6) == la | lb
        assert language(intersect(a, a), 6) == la
        assert not language(intersect(a, complement(a)), 6)

    def test_incompatible(self):
        a = universal(PrecedenceMatrix.from_rows("ab", ["<=", ">>"]))
        b = universal(PrecedenceMatrix.from_rows("ab", [">=", ">>"]))
        with pytest.raises(IncompatibleMatricesError):
            intersect(a, b)

    def test_lifting_keeps_language(self):
        small = universal(PrecedenceMatrix.from_rows("ab", [".=", ">>"]))
        big = PrecedenceMatrix.from_rows("abc", ["<=<", ">>>", "<>>"])
        lifted = lift(small, big)
        assert language(lifted, 6) == language(small, 6)
        assert lifted.matrix == big

    def test_different_alphabets(self, gae_fnf, gae_p_fnf):
        f, p = grammar_to_opa(gae_fnf), grammar_to_opa(gae_p_fnf)
        assert language(intersect(f, p), 6) == language(f, 6)
        assert language(union(f, p), 6) == language(p, 6)


class TestDecisions:
    def test_emptiness(self, expr_opa):
        assert not is_empty(expr_opa)
        no_final = Opa(expr_opa.matrix, expr_opa.states, expr_opa.initial, set(),
                       expr_opa.push, expr_opa.shift, expr_opa.pop)
        assert is_empty(no_final)

    def test_unreachable_final(self):
        # q2 is final but nothing pushes into it
        m = PrecedenceMatrix.from_rows("a", [">"])
        a = Opa(m, ["q0", "q1", "q2"], {"q0"}, {"q2"}, {("q0", "a", "q1")}, set(),
                {("q1", "q0", "q1")})
        assert is_empty(a)
        assert not reachable(a).final

    def test_containment(self, gae_fnf, gae_p_fnf, expr_opa):
        f, p = grammar_to_opa(gae_fnf), grammar_to_opa(gae_p_fnf)
        assert contains(f, p)
        assert not contains(p, f)
        witness = min(language(p, 5) - language(f, 5), key=len)
        assert "(" in witness
        assert contains(p, expr_opa) and not contains(expr_opa, p)
        assert contains(p, p)

    def test_equality_cycle(self):
        m = PrecedenceMatrix.from_rows("ab", [".=", "=."])
        with pytest.raises(EqualityCycleError):
            opa_to_grammar(universal(m))


class TestConversions:
    def test_construction_states(self, gae_p):
        a = grammar_to_opa(gae_p)
        trace = run(a, "e + e * e".split()).traces[0]
        rows = trace.rows()
        assert rows[3][1:] == ("⟨E +, ε⟩", [("+", "⟨E, ε⟩")])
        assert rows[6][1:] == ("⟨T *, E +⟩", [("*", "⟨T, E +⟩"), ("+", "⟨E, ε⟩")])

    @pytest.mark.parametrize("name", ["gae_fnf", "interrupt", "anbn", "gae_p_fnf"])
    def test_fnf_gives_deterministic(self, name, request):
        g = request.getfixturevalue(name)
        a = grammar_to_opa(g)
        assert is_deterministic(a)
        assert language(a, 6) == {w for w in all_words(g.terminals, 6) if accepts(g, None, w)}

    def test_single_rule(self):
        a = grammar_to_opa(Grammar.build([("S", ("a",))]))
        assert language(a, 3) == {("a",)}
        assert len(reachable(a).states) == 3

    def test_round_trip(self, gae_fnf):
        g = opa_to_grammar(grammar_to_opa(gae_fnf))
        assert generate_strings(g, 7) == generate_strings(gae_fnf, 7)

    def test_automaton_to_grammar(self, expr_opa, interrupt_opa):
        g = opa_to_grammar(expr_opa)
        assert generate_strings(g, 7) == language(expr_opa, 7)
        h = opa_to_grammar(interrupt_opa)
        lang = generate_strings(h, 7)
        assert tuple("call call ret int serve call ret".split()) in lang
        assert ("call", "serve") not in lang

    def test_interrupt_grammar_matches_automaton(self, interrupt, interrupt_opa):
        assert generate_strings(interrupt, 8) == language(interrupt_opa, 8)


class TestSerialization:
    def test_json_round_trip(self, expr_opa):
        again = load_opa(to_json(expr_opa))
        assert again == expr_opa
        assert to_json(again) == to_json(expr_opa)

    def test_product_states_are_relabelled(self, expr_opa):
        obj = json.loads(to_json(intersect(expr_opa, expr_opa)))
        assert all(isinstance(q, str) for q in obj["states"])

    def test_bad_files(self):
        with pytest.raises(AutomatonFormatError):
            load_opa("{]")
        with pytest.raises(AutomatonFormatError):
            load_opa('{"terminals": ["a"]}')
        with pytest.raises(AutomatonFormatError):
            load_opa(json.dumps({"terminals": ["a"], "matrix": {}, "states": ["q"], "initial": ["x"],
                                 "final": [], "push": [], "shift": [], "pop": []}))

    def test_conflicted_alphabet(self):
        m = PrecedenceMatrix(["a"], {("a", "a"): ["<", ">"]})
        with pytest.raises(ConflictError):
            Opa(m, ["q"], {"q"}, set(), set(), set(), set())

    def test_dot(self, expr_opa):
        dot = to_dot(expr_opa)
        assert dot.startswith("digraph")
        assert "style=dashed" in dot and "black:invis:black" in dot
