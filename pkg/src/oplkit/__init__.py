"""oplkit: operator-precedence grammars, parsers and automata."""

from .errors import (AutomatonFormatError, ConflictError, EmptyCellError, EqualityCycleError,
                     GrammarError, GrammarSyntaxError, IncompatibleMatricesError, NoHandleError,
                     OplError, ParseError, PassLimitError, ResourceLimitError, TrailingFormError)
from .grammar import (Grammar, Production, check_fnf, check_operator_form, eliminate_renaming,
                      generate_strings, is_empty_language, load_grammar, make_invertible,
                      read_grammar)
from .opm import (EQ, GT, LT, PrecedenceMatrix, Rel, VpPartition, compute_opm, detect_partition,
                  is_chain, is_compatible, is_compatible_word, is_conflict_free, is_total,
                  matrix_includes, matrix_union, terminal_sets, vp_alphabet_to_opm)
from .parser import OpParser, PartialParseState, accepts, parse, partial_parse
from .parallel import ParallelParser, parallel_parse, split_chunks
from .opa import (Budget, Opa, complement, contains, determinize, grammar_to_opa, intersect,
                  is_deterministic, is_empty, load_opa, opa_to_grammar, read_opa, run, union)
from .trees import Leaf, Tree, to_sexpr

__version__ = "0.1.0"


def data_path(name: str) -> str:
    """Path of a bundled example grammar or automaton."""
    import os
    return os.path.join(os.path.dirname(__file__), "data", name)
