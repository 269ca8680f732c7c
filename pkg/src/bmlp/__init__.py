"""Linear recursive datalog evaluated with boolean matrix operations."""

from .bitmat import BitMatrix, BitVector, ShapeError, identity, mat_add, mat_mul, vec_mat_mul
from .compiler import IEInput, RMSInput, SymbolLookupError, SymbolTable, build_table, compile_ie, compile_rms, decode, decompile
from .datalog import (
    ClassificationError,
    DatalogSyntaxError,
    FactSet,
    LIRProfile,
    Program,
    classify_lir,
    parse_program,
    render_program,
    seminaive_fixpoint,
)
from .petri import (
    ElementaryNet,
    Transition,
    UnknownPlace,
    cross_check,
    fire,
    parse_net,
    reach_query,
    reachable_places,
    tf_step,
    transform,
)
from .solve import ClosureResult, bmlp_ie, bmlp_rms, ie_paths, naive_closure, strip_reflexive
from .timing import Deadline, SolveTimeout

__all__ = [name for name in dir() if not name.startswith("_")]
