"""Compile classified programs into boolean matrices.

Constants are numbered from 0 in order of first appearance. Row ``i`` of a
relation matrix has bit ``j`` set when the relation holds between constants
``i`` and ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

from .bitmat import BitMatrix, BitVector
from .datalog import FactSet, LIRProfile, Program, classify_lir


class SymbolLookupError(KeyError):
    pass


@dataclass(frozen=True)
class SymbolTable:
    """Bijection between constant names and contiguous 0-based indices."""

    names: tuple[str, ...] = ()
    to_index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index = {name: i for i, name in enumerate(self.names)}
        if len(index) != len(self.names):
            raise ValueError("duplicate constant in symbol table")
        object.__setattr__(self, "to_index", index)

    @property
    def n(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.to_index[name]
        except KeyError:
            raise SymbolLookupError(f"unknown constant {name!r}") from None

    def name(self, i: int) -> str:
        return self.names[i]

    def extend(self, names: Iterable[str]) -> SymbolTable:
        """Append names not already present."""
        extra = [n for n in dict.fromkeys(names) if n not in self.to_index]
        return SymbolTable(self.names + tuple(extra)) if extra else self

    def __contains__(self, name: object) -> bool:
        return name in self.to_index

    def __len__(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class RMSInput:
    r1: BitMatrix
    table: SymbolTable


@dataclass(frozen=True)
class IEInput:
    """Query vector plus one row per ground fact: first-argument bits and second-argument bits."""

    v: BitVector
    r1_first: BitMatrix
    r2_second: BitMatrix
    table: SymbolTable

    def __post_init__(self) -> None:
        if self.r1_first.n_rows != self.r2_second.n_rows:
            raise ValueError("fact matrices differ in row count")

    @property
    def k(self) -> int:
        return self.r1_first.n_rows

    def with_source(self, source: str) -> IEInput:
        return replace(self, v=BitVector.from_indices(self.table.n, [self.table.index(source)]))


def build_table(p: Program, base: SymbolTable | None = None) -> SymbolTable:
    """Number ``p``'s constants by first appearance, after any names already in ``base``."""
    return (base or SymbolTable()).extend(p.constants())


def _profile(p: Program | LIRProfile) -> LIRProfile:
    return p if isinstance(p, LIRProfile) else classify_lir(p)


def compile_rms(p: Program | LIRProfile, t: SymbolTable) -> RMSInput:
    prof = _profile(p)
    pairs = [(t.index(a), t.index(b)) for a, b in prof.edges]
    return RMSInput(BitMatrix.from_pairs(t.n, t.n, pairs), t)


def compile_ie(p: Program | LIRProfile, t: SymbolTable, source: str, allow_fresh: bool = False) -> IEInput:
    """Facts become rows ``0..k-1`` in program order; ``v`` is the unit vector of ``source``.

    ``allow_fresh`` appends an unknown ``source`` to the table instead of failing.
    """
    prof = _profile(p)
    if allow_fresh:
        t = t.extend([source])
    s = t.index(source)
    k = len(prof.edges)
    first = BitMatrix.from_pairs(k, t.n, [(i, t.index(a)) for i, (a, _) in enumerate(prof.edges)])
    second = BitMatrix.from_pairs(k, t.n, [(i, t.index(b)) for i, (_, b) in enumerate(prof.edges)])
    return IEInput(BitVector.from_indices(t.n, [s]), first, second, t)


def decompile(m: BitMatrix, t: SymbolTable, predicate: str) -> FactSet:
    """Read a square relation matrix back as ground pairs."""
    return FactSet(predicate, frozenset((t.names[i], t.names[j]) for i, j in m.pairs()))


def decode(v: BitVector, t: SymbolTable) -> list[str]:
    return [t.names[i] for i in v.indices()]
