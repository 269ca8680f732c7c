"""Matrix files and atomic output.

Text layout, one fact per line::

    cton(0,c0).
    ntoc(c0,0).
    ...
    v(0,2).
    v(1,4).

Each ``pred(row,value)`` line is a matrix row; bit ``j`` of ``value`` (weight
``2**j``) is column ``j``. Several predicates may share a file, e.g. ``v`` for
the query vector and ``flight1``/``flight2`` for the per-fact matrices.

The binary sidecar (``.npz``) stores the same content as packed words and is an
extension for large matrices.
"""

from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path
from typing import Mapping

import numpy as np

from .bitmat import BitMatrix, BitVector, n_words
from .compiler import SymbolTable


class MatrixFormatError(ValueError):
    pass


def write_matrices(table: SymbolTable, matrices: Mapping[str, BitMatrix]) -> str:
    lines = []
    for i, name in enumerate(table.names):
        lines.append(f"cton({i},{name}).")
        lines.append(f"ntoc({name},{i}).")
    for pred, m in matrices.items():
        if m.n_cols != table.n:
            raise MatrixFormatError(f"{pred} has {m.n_cols} columns for {table.n} symbols")
        lines.extend(f"{pred}({i},{value})." for i, value in enumerate(m.row_ints()))
    return "".join(line + "\n" for line in lines)


_LINE = re.compile(r"([a-z][A-Za-z0-9_]*)\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)\.\Z")


def read_matrices(text: str) -> tuple[SymbolTable, dict[str, BitMatrix]]:
    cton: dict[int, str] = {}
    ntoc: dict[str, int] = {}
    rows: dict[str, dict[int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if m is None:
            raise MatrixFormatError(f"line {lineno}: cannot parse {line!r}")
        pred, a, b = m.groups()
        try:
            if pred == "cton":
                cton[int(a)] = b
            elif pred == "ntoc":
                ntoc[a] = int(b)
            else:
                rows.setdefault(pred, {})[int(a)] = int(b)
        except ValueError:
            raise MatrixFormatError(f"line {lineno}: expected integers in {line!r}") from None
    n = len(cton)
    if sorted(cton) != list(range(n)):
        raise MatrixFormatError("cton indices must be contiguous from 0")
    table = SymbolTable(tuple(cton[i] for i in range(n)))
    if ntoc and ntoc != table.to_index:
        raise MatrixFormatError("ntoc does not mirror cton")
    matrices = {}
    for pred, by_row in rows.items():
        k = max(by_row) + 1
        try:
            matrices[pred] = BitMatrix.from_ints(n, [by_row.get(i, 0) for i in range(k)])
        except ValueError as exc:
            raise MatrixFormatError(f"{pred}: {exc}") from None
    return table, matrices


def vector_matrix(v: BitVector) -> BitMatrix:
    return BitMatrix(1, v.n_bits, v.words.reshape(1, n_words(v.n_bits)).copy())


def save_binary(path: str | os.PathLike, table: SymbolTable, matrices: Mapping[str, BitMatrix]) -> None:
    arrays = {"__names__": np.array(table.names, dtype=str)}
    for pred, m in matrices.items():
        arrays[pred] = m.words
    with atomic_path(path) as tmp:
        with open(tmp, "wb") as fh:
            np.savez(fh, **arrays)


def load_binary(path: str | os.PathLike) -> tuple[SymbolTable, dict[str, BitMatrix]]:
    with np.load(path) as data:
        table = SymbolTable(tuple(str(x) for x in data["__names__"]))
        mats = {k: BitMatrix(data[k].shape[0], table.n, data[k]) for k in data.files if k != "__names__"}
    return table, mats


class atomic_path:
    """Context manager yielding a temp path next to ``path``; renamed over it on success."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)

    def __enter__(self) -> Path:
        fd, tmp = tempfile.mkstemp(prefix=f".{self.path.name}.", dir=self.path.parent or ".")
        os.close(fd)
        self.tmp = Path(tmp)
        return self.tmp

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            os.replace(self.tmp, self.path)
        else:
            self.tmp.unlink(missing_ok=True)


def write_text_atomic(path: str | os.PathLike, text: str) -> None:
    with atomic_path(path) as tmp:
        tmp.write_text(text, encoding="utf-8")
