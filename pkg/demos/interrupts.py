"""Calls, returns and interrupts: the automaton and the grammar agree on a
handled interrupt and both reject an orphan service routine."""
from oplkit import accepts, data_path, detect_partition, parse, read_grammar, read_opa, run, to_sexpr
from oplkit.opa import opa_to_grammar

auto = read_opa(data_path("interrupt_opa.json"))
g = read_grammar(data_path("interrupt.g"))

for text in ("call call ret int serve call ret", "call serve"):
    w = text.split()
    print(f"{text!r}: automaton {run(auto, w).accepted}, grammar {accepts(g, None, w)}")

print(to_sexpr(parse(g, None, "call call ret int serve call ret".split())))
print("visibly pushdown partition:", detect_partition(auto.matrix))

back = opa_to_grammar(auto)
print(f"grammar read back from the automaton has {len(back.productions)} rules")
