"""Automata over the parenthesised expression alphabet: a traced run,
determinization of a grammar-built automaton, and a few closure checks."""
from oplkit import (complement, contains, data_path, determinize, grammar_to_opa, intersect,
                    is_deterministic, is_empty, make_invertible, read_grammar, read_opa, run)
from oplkit.opa import language

expr = read_opa(data_path("expr_opa.json"))
res = run(expr, "e + e * ( e + e )".split())
print("accepted:", res.accepted)
print(res.traces[0].format(), end="")

gae1 = read_grammar(data_path("gae1.g"))
a = grammar_to_opa(gae1)
d = determinize(a)
print(f"\ngrammar automaton: {len(a.states)} states, deterministic={is_deterministic(a)}")
print(f"determinized:      {len(d.states)} states, deterministic={is_deterministic(d)}")

p = grammar_to_opa(make_invertible(read_grammar(data_path("gae_p.g"))))
print("\nL(grammar) within L(expr automaton):", contains(p, expr))
print("L(expr automaton) within L(grammar):", contains(expr, p))
extra = intersect(expr, complement(p))
print("difference empty:", is_empty(extra))
print("shortest extra words:", sorted(language(extra, 3), key=len)[:4])
