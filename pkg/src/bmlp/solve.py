"""Transitive closure by iterative extension, repeated squaring, and naive iteration.

``iterations`` counts executed loop bodies, including the last pass that finds
nothing new. For a chain with ``L`` edges, repeated squaring therefore reports
``ceil(log2 L) + 1`` and naive iteration reports ``L``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bitmat import BitMatrix, BitVector, ShapeError, identity, mat_add, mat_mul, rows_subset, vec_mat_mul
from .compiler import IEInput, RMSInput
from .timing import NO_DEADLINE, Deadline


@dataclass(frozen=True)
class ClosureResult:
    algorithm: str  # "ie", "rms" or "naive"
    iterations: int
    matrix: BitMatrix | None = None
    vector: BitVector | None = None


def iterative_extension(
    v: BitVector, r1: BitMatrix, r2: BitMatrix, deadline: Deadline = NO_DEADLINE
) -> tuple[BitVector, int]:
    """Grow ``v`` by every fact whose first-argument row is covered by ``v``.

    ``r1`` and ``r2`` are k-by-n; row ``i`` holds the first and second argument
    bits of fact ``i``. The returned vector always contains the input ``v``.
    """
    if r1.shape != r2.shape or r1.n_cols != v.n_bits:
        raise ShapeError(f"vector {v.n_bits}, fact matrices {r1.shape} and {r2.shape}")
    iterations = 0
    while True:
        iterations += 1
        deadline.enforce()
        enabled = rows_subset(r1, v)
        v_star = vec_mat_mul(enabled, r2) | v
        if v_star == v:
            return v, iterations
        v = v_star


def bmlp_ie(inp: IEInput, deadline: Deadline = NO_DEADLINE) -> ClosureResult:
    for m in (inp.r1_first, inp.r2_second):
        if m.n_rows and not m.words.any(axis=1).all():
            raise ValueError("every fact row needs at least one set bit")
    v, it = iterative_extension(inp.v, inp.r1_first, inp.r2_second, deadline)
    return ClosureResult("ie", it, vector=v)


def ie_paths(result: ClosureResult, inp: IEInput) -> BitVector:
    """Constants reachable from the source by paths of length >= 1.

    These are the successors of the closure vector, which drops the source bit
    unless the source lies on a cycle.
    """
    return vec_mat_mul(rows_subset(inp.r1_first, result.vector), inp.r2_second)


def _square_input(r1: BitMatrix | RMSInput) -> BitMatrix:
    m = r1.r1 if isinstance(r1, RMSInput) else r1
    if m.n_rows != m.n_cols:
        raise ShapeError(f"closure needs a square matrix, got {m.shape}")
    return m


def bmlp_rms(inp: RMSInput | BitMatrix, threads: int = 1, deadline: Deadline = NO_DEADLINE) -> ClosureResult:
    """Square ``I + R1`` until it stops changing; the result includes the diagonal."""
    r1 = _square_input(inp)
    r = mat_add(identity(r1.n_rows), r1)
    iterations = 0
    while True:
        iterations += 1
        deadline.enforce()
        sq = mat_mul(r, r, threads)
        if sq == r:
            return ClosureResult("rms", iterations, matrix=r)
        r = sq


def naive_closure(inp: RMSInput | BitMatrix, threads: int = 1, deadline: Deadline = NO_DEADLINE) -> ClosureResult:
    """Multiply by ``I + R1`` one step at a time until it stops changing."""
    r1 = _square_input(inp)
    step = mat_add(identity(r1.n_rows), r1)
    r = step
    iterations = 0
    while True:
        iterations += 1
        deadline.enforce()
        nxt = mat_mul(r, step, threads)
        if nxt == r:
            return ClosureResult("naive", iterations, matrix=r)
        r = nxt


def strip_reflexive(closure: BitMatrix | ClosureResult, r1: BitMatrix | RMSInput, threads: int = 1) -> BitMatrix:
    """Paths of length >= 1: ``R1 x (I + R1)*``."""
    c = closure.matrix if isinstance(closure, ClosureResult) else closure
    return mat_mul(_square_input(r1), c, threads)
