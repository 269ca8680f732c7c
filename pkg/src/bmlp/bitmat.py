"""Word-packed boolean vectors and matrices.

Bits are stored least-significant-bit first in ``uint64`` words: bit ``j`` of a
row lives in word ``j // 64`` at position ``j % 64``. Padding bits past the
logical width are always zero, so whole-word comparisons are exact.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

WORD_BITS = 64
WORD = np.uint64
_LE_WORD = np.dtype("<u8")


class ShapeError(ValueError):
    """Operand dimensions do not agree."""


def n_words(n_bits: int) -> int:
    return (n_bits + WORD_BITS - 1) // WORD_BITS


def _tail_mask(n_bits: int) -> np.uint64:
    rem = n_bits % WORD_BITS
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _unpack(words: np.ndarray, n_bits: int) -> np.ndarray:
    """Expand packed words (1-D or 2-D) into a uint8 0/1 array along the last axis."""
    as_bytes = words.astype(_LE_WORD, copy=False).view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, bitorder="little")[..., :n_bits]


def _pack(bits: np.ndarray, n_bits: int) -> np.ndarray:
    """Inverse of :func:`_unpack` for a 1-D or 2-D boolean array."""
    bits = np.asarray(bits, dtype=bool)
    width = n_words(n_bits) * WORD_BITS
    pad = [(0, 0)] * (bits.ndim - 1) + [(0, width - n_bits)]
    packed = np.packbits(np.pad(bits, pad), axis=-1, bitorder="little")
    return packed.view(_LE_WORD).astype(WORD, copy=False)


@dataclass(frozen=True, eq=False)
class BitVector:
    """A fixed-width bit string. Treat as immutable; mutators return copies."""

    n_bits: int
    words: np.ndarray

    def __post_init__(self) -> None:
        if self.words.shape != (n_words(self.n_bits),):
            raise ShapeError(f"{self.n_bits} bits need {n_words(self.n_bits)} words, got {self.words.shape}")
        if self.words.dtype != WORD:
            object.__setattr__(self, "words", self.words.astype(WORD))
        if self.n_bits and self.words[-1] & ~_tail_mask(self.n_bits):
            raise ValueError("padding bits must be zero")
        _readonly(self.words)

    @classmethod
    def zeros(cls, n_bits: int) -> BitVector:
        return cls(n_bits, np.zeros(n_words(n_bits), dtype=WORD))

    @classmethod
    def from_indices(cls, n_bits: int, indices: Iterable[int]) -> BitVector:
        idx = np.fromiter(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n_bits):
            raise IndexError(f"bit index out of range for width {n_bits}")
        words = np.zeros(n_words(n_bits), dtype=WORD)
        np.bitwise_or.at(words, idx // WORD_BITS, np.left_shift(np.uint64(1), (idx % WORD_BITS).astype(WORD)))
        return cls(n_bits, words)

    @classmethod
    def from_bools(cls, bits) -> BitVector:
        bits = np.asarray(bits, dtype=bool)
        return cls(bits.shape[0], _pack(bits, bits.shape[0]))

    @classmethod
    def from_int(cls, n_bits: int, value: int) -> BitVector:
        """Bit ``j`` of the result is bit ``j`` of ``value`` (weight ``2**j``)."""
        if value < 0 or value.bit_length() > n_bits:
            raise ValueError(f"{value} does not fit in {n_bits} bits")
        raw = value.to_bytes(n_words(n_bits) * 8, "little")
        return cls(n_bits, np.frombuffer(raw, dtype=_LE_WORD).astype(WORD))

    def to_int(self) -> int:
        return int.from_bytes(self.words.astype(_LE_WORD).tobytes(), "little")

    def get(self, i: int) -> bool:
        if not 0 <= i < self.n_bits:
            raise IndexError(i)
        return bool((int(self.words[i // WORD_BITS]) >> (i % WORD_BITS)) & 1)

    def set(self, i: int, value: bool = True) -> BitVector:
        """Return a copy with bit ``i`` assigned."""
        if not 0 <= i < self.n_bits:
            raise IndexError(i)
        words = self.words.copy()
        mask = np.uint64(1 << (i % WORD_BITS))
        if value:
            words[i // WORD_BITS] |= mask
        else:
            words[i // WORD_BITS] &= ~mask
        return BitVector(self.n_bits, words)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(_unpack(self.words, self.n_bits))

    def popcount(self) -> int:
        return int(_unpack(self.words, self.n_bits).sum())

    def any(self) -> bool:
        return bool(self.words.any())

    def _check(self, other: BitVector) -> None:
        if self.n_bits != other.n_bits:
            raise ShapeError(f"width {self.n_bits} vs {other.n_bits}")

    def __or__(self, other: BitVector) -> BitVector:
        self._check(other)
        return BitVector(self.n_bits, self.words | other.words)

    def __and__(self, other: BitVector) -> BitVector:
        self._check(other)
        return BitVector(self.n_bits, self.words & other.words)

    def andnot(self, other: BitVector) -> BitVector:
        """Bits set here and clear in ``other``."""
        self._check(other)
        return BitVector(self.n_bits, self.words & ~other.words)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.n_bits == other.n_bits and np.array_equal(self.words, other.words)

    def __hash__(self) -> int:
        return hash((self.n_bits, self.words.tobytes()))

    def __len__(self) -> int:
        return self.n_bits

    def __iter__(self) -> Iterator[bool]:
        return (bool(b) for b in _unpack(self.words, self.n_bits))

    def __repr__(self) -> str:
        return f"BitVector(n_bits={self.n_bits}, value={self.to_int()})"


@dataclass(frozen=True, eq=False)
class BitMatrix:
    """Rows of equal-width packed bit strings; ``words`` has shape (n_rows, words per row)."""

    n_rows: int
    n_cols: int
    words: np.ndarray

    def __post_init__(self) -> None:
        expected = (self.n_rows, n_words(self.n_cols))
        if self.words.shape != expected:
            raise ShapeError(f"expected word array {expected}, got {self.words.shape}")
        if self.words.dtype != WORD:
            object.__setattr__(self, "words", self.words.astype(WORD))
        if self.n_cols and self.n_rows and (self.words[:, -1] & ~_tail_mask(self.n_cols)).any():
            raise ValueError("padding bits must be zero")
        _readonly(self.words)

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> BitMatrix:
        return cls(n_rows, n_cols, np.zeros((n_rows, n_words(n_cols)), dtype=WORD))

    @classmethod
    def from_bools(cls, dense) -> BitMatrix:
        dense = np.asarray(dense, dtype=bool)
        if dense.ndim != 2:
            raise ShapeError("expected a 2-D array")
        r, c = dense.shape
        return cls(r, c, _pack(dense, c).reshape(r, n_words(c)))

    @classmethod
    def from_pairs(cls, n_rows: int, n_cols: int, pairs: Iterable[tuple[int, int]]) -> BitMatrix:
        ij = np.array(list(pairs), dtype=np.int64).reshape(-1, 2)
        if ij.size and (ij.min() < 0 or ij[:, 0].max() >= n_rows or ij[:, 1].max() >= n_cols):
            raise IndexError(f"pair out of range for {n_rows}x{n_cols}")
        words = np.zeros((n_rows, n_words(n_cols)), dtype=WORD)
        bits = np.left_shift(np.uint64(1), (ij[:, 1] % WORD_BITS).astype(WORD))
        np.bitwise_or.at(words, (ij[:, 0], ij[:, 1] // WORD_BITS), bits)
        return cls(n_rows, n_cols, words)

    @classmethod
    def from_ints(cls, n_cols: int, rows: Iterable[int]) -> BitMatrix:
        vecs = [BitVector.from_int(n_cols, v).words for v in rows]
        if not vecs:
            return cls.zeros(0, n_cols)
        return cls(len(vecs), n_cols, np.stack(vecs))

    @classmethod
    def from_rows(cls, n_cols: int, rows: Iterable[BitVector]) -> BitMatrix:
        rows = list(rows)
        for r in rows:
            if r.n_bits != n_cols:
                raise ShapeError(f"row width {r.n_bits} != {n_cols}")
        if not rows:
            return cls.zeros(0, n_cols)
        return cls(len(rows), n_cols, np.stack([r.words for r in rows]))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def row(self, i: int) -> BitVector:
        return BitVector(self.n_cols, self.words[i].copy())

    def rows(self) -> list[BitVector]:
        return [self.row(i) for i in range(self.n_rows)]

    def row_ints(self) -> list[int]:
        return [self.row(i).to_int() for i in range(self.n_rows)]

    def get(self, i: int, j: int) -> bool:
        if not (0 <= i < self.n_rows and 0 <= j < self.n_cols):
            raise IndexError((i, j))
        return bool((int(self.words[i, j // WORD_BITS]) >> (j % WORD_BITS)) & 1)

    def to_bools(self) -> np.ndarray:
        if self.n_rows == 0:
            return np.zeros((0, self.n_cols), dtype=bool)
        return _unpack(self.words, self.n_cols).astype(bool)

    def pairs(self) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(self.to_bools())
        return list(zip(ii.tolist(), jj.tolist()))

    def popcount(self) -> int:
        return int(self.to_bools().sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.words, other.words)

    def __hash__(self) -> int:
        return hash((self.shape, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.n_rows}x{self.n_cols}, rows={self.row_ints()})"


def identity(n: int) -> BitMatrix:
    return BitMatrix.from_bools(np.eye(n, dtype=bool))


def mat_add(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Elementwise OR."""
    if a.shape != b.shape:
        raise ShapeError(f"cannot add {a.shape} and {b.shape}")
    return BitMatrix(a.n_rows, a.n_cols, a.words | b.words)


def _gather_rows(bits: np.ndarray, b_words: np.ndarray, out: np.ndarray, lo: int, hi: int) -> None:
    for i in range(lo, hi):
        idx = np.flatnonzero(bits[i])
        if idx.size:
            np.bitwise_or.reduce(b_words[idx], axis=0, out=out[i])


def mat_mul(a: BitMatrix, b: BitMatrix, threads: int = 1) -> BitMatrix:
    """Boolean product; row ``i`` of the result is the OR of ``b``'s rows selected by row ``i`` of ``a``.

    With ``threads > 1`` disjoint row blocks are filled concurrently; each output
    row is written by exactly one worker so the result does not depend on scheduling.
    """
    if a.n_cols != b.n_rows:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = np.zeros((a.n_rows, n_words(b.n_cols)), dtype=WORD)
    if a.n_rows and a.n_cols and b.n_cols:
        bits = _unpack(a.words, a.n_cols)
        if threads <= 1 or a.n_rows < 2 * threads:
            _gather_rows(bits, b.words, out, 0, a.n_rows)
        else:
            bounds = np.linspace(0, a.n_rows, threads + 1).astype(int)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                jobs = [
                    pool.submit(_gather_rows, bits, b.words, out, int(lo), int(hi))
                    for lo, hi in zip(bounds[:-1], bounds[1:])
                ]
                for job in jobs:
                    job.result()
    return BitMatrix(a.n_rows, b.n_cols, out)


def vec_mat_mul(v: BitVector, m: BitMatrix) -> BitVector:
    """OR of the rows of ``m`` selected by ``v``."""
    if v.n_bits != m.n_rows:
        raise ShapeError(f"vector of width {v.n_bits} against {m.shape} matrix")
    out = np.zeros(n_words(m.n_cols), dtype=WORD)
    idx = v.indices()
    if idx.size and m.n_cols:
        np.bitwise_or.reduce(m.words[idx], axis=0, out=out)
    return BitVector(m.n_cols, out)


def row_subset(needle: BitVector, hay: BitVector) -> bool:
    """True when every set bit of ``needle`` is also set in ``hay``."""
    needle._check(hay)
    return bool(np.array_equal(needle.words & hay.words, needle.words))


def rows_subset(m: BitMatrix, hay: BitVector) -> BitVector:
    """Bit ``i`` is set when row ``i`` of ``m`` is a subset of ``hay`` (all rows at once)."""
    if m.n_cols != hay.n_bits:
        raise ShapeError(f"{m.shape} matrix against vector of width {hay.n_bits}")
    hit = np.all((m.words & hay.words) == m.words, axis=1)
    return BitVector.from_bools(hit)
