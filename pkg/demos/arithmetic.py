"""Arithmetic expressions end to end: precedence matrix, a sequential
parse, an inner-segment partial parse, and a parallel parse that must
give the same tree."""
from oplkit import (compute_opm, data_path, parallel_parse, parse, partial_parse, read_grammar,
                    terminal_sets, to_sexpr)
from oplkit.parallel import arithmetic_corpus

g = read_grammar(data_path("gae_fnf.g"))
m = compute_opm(g)
print("precedence matrix:")
print(m.to_text())

ts = terminal_sets(g)
for a in g.nonterminals:
    print(f"{a}: left {sorted(ts.left[a])} right {sorted(ts.right[a])}")

print()
print("tree of 'e + e * e':", to_sexpr(parse(g, m, "e + e * e".split())))

st = partial_parse(g, m, "+ e * e * e + e".split())
print("inner segment leaves", " ".join(st.zeta), "|", " ".join(st.theta))

toks = arithmetic_corpus(20001, seed=1)
seq = parse(g, m, toks)
for k in (2, 4, 8):
    same = parallel_parse(g, m, toks, k, single_threshold=0) == seq
    print(f"k={k}: parallel tree identical to sequential: {same}")
