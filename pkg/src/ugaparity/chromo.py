"""Bitstring chromosomes and populations.

A population is an m x n bit matrix stored row-major and bit-packed: locus
``j`` (0-based) of a row lives in bit ``j % 64`` of word ``j // 64``.
Public functions take 1-based locus numbers, matching the usual ``[n]``
notation for index sets.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

WORD_BITS = 64


def n_words(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


def as_bits(x, n: int | None = None) -> np.ndarray:
    """Coerce a bit string, sequence or array to a uint8 vector of 0/1."""
    if isinstance(x, str):
        if not set(x) <= {"0", "1"}:
            raise ValueError(f"not a bit string: {x!r}")
        arr = np.frombuffer(x.encode(), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(x)
        if arr.ndim != 1:
            raise ValueError("bit vector must be one-dimensional")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("bit vector elements must be 0 or 1")
        arr = arr.astype(np.uint8)
    if n is not None and arr.size != n:
        raise ValueError(f"expected {n} bits, got {arr.size}")
    return arr


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def pack_rows(rows: np.ndarray) -> np.ndarray:
    """Pack an (m, n) 0/1 array into (m, ceil(n/64)) uint64 words."""
    rows = np.asarray(rows, dtype=np.uint8)
    m, n = rows.shape
    w = n_words(n)
    padded = np.zeros((m, w * WORD_BITS), dtype=np.uint8)
    padded[:, :n] = rows
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_words(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`pack_rows`."""
    words = np.ascontiguousarray(words, dtype="<u8")
    m = words.shape[0]
    bits = np.unpackbits(words.view(np.uint8).reshape(m, -1), axis=1, bitorder="little")
    return bits[:, :n]


@functools.lru_cache(maxsize=64)
def tail_mask(n: int) -> np.ndarray:
    """Per-word mask of the bits that hold loci (the last word may be partial)."""
    w = n_words(n)
    mask = np.full(w, np.uint64((1 << 64) - 1), dtype=np.uint64)
    rem = n % WORD_BITS
    if rem:
        mask[-1] = np.uint64((1 << rem) - 1)
    mask.flags.writeable = False
    return mask


def relabel_columns(words: np.ndarray, n: int, labels: np.ndarray | None) -> np.ndarray:
    """Move bits drawn in locus-label space into column space.

    Column ``c`` receives the bit drawn for label ``labels[c]``.  ``None`` means
    the identity labelling and returns ``words`` untouched.
    """
    if labels is None:
        return words
    return pack_rows(unpack_words(words, n)[:, labels])


def in_band(count, m):
    """0.05 < count/m < 0.95 on exact integers; works elementwise on arrays."""
    return (20 * count > m) & (20 * count < 19 * m)


@dataclass(frozen=True)
class LocusFrequency:
    """Number of ones at a locus out of a population of size ``m``."""

    count: int
    m: int

    def __post_init__(self):
        if self.m < 1 or not 0 <= self.count <= self.m:
            raise ValueError(f"invalid frequency {self.count}/{self.m}")

    @property
    def value(self) -> Fraction:
        return Fraction(self.count, self.m)

    def __str__(self) -> str:
        return f"{self.count}/{self.m}"


class Population:
    """Immutable m x n bit matrix; rows are chromosomes."""

    __slots__ = ("_words", "_n")

    def __init__(self, words: np.ndarray, n: int):
        words = np.array(words, dtype=np.uint64, copy=True)
        if words.ndim != 2 or words.shape[1] != n_words(n):
            raise ValueError(f"word array of shape {words.shape} does not hold {n} loci")
        if words.shape[0] < 1 or n < 1:
            raise ValueError("population needs at least one row and one locus")
        if np.any(words & ~tail_mask(n)):
            raise ValueError("bits set beyond locus n")
        words.flags.writeable = False
        self._words = words
        self._n = n

    @classmethod
    def _wrap(cls, words: np.ndarray, n: int) -> "Population":
        # trusted constructor for the GA inner loop: no copy, no validation
        pop = object.__new__(cls)
        words.flags.writeable = False
        pop._words = words
        pop._n = n
        return pop

    @classmethod
    def from_rows(cls, rows) -> "Population":
        if isinstance(rows, np.ndarray) and rows.ndim == 2:
            arr = rows
        else:
            vecs = [as_bits(r) for r in rows]
            if not vecs:
                raise ValueError("population needs at least one row")
            if len({v.size for v in vecs}) != 1:
                raise ValueError("all chromosomes must have the same length")
            arr = np.stack(vecs)
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("population entries must be 0 or 1")
        return cls(pack_rows(arr), arr.shape[1])

    @classmethod
    def from_text(cls, text: str) -> "Population":
        return cls.from_rows([line.strip() for line in text.splitlines() if line.strip()])

    @property
    def words(self) -> np.ndarray:
        return self._words

    @property
    def m(self) -> int:
        return self._words.shape[0]

    @property
    def n(self) -> int:
        return self._n

    def rows(self) -> np.ndarray:
        """The population as an (m, n) uint8 array."""
        return unpack_words(self._words, self._n)

    def row(self, i: int) -> np.ndarray:
        return unpack_words(self._words[i : i + 1], self._n)[0]

    def ones_counts(self) -> np.ndarray:
        """Number of ones at every locus, 0-based array of length n."""
        return self.rows().sum(axis=0, dtype=np.int64)

    def locus_ones(self, loci: Sequence[int]) -> list[int]:
        """Ones counts for 1-based ``loci`` without unpacking the whole matrix."""
        out = []
        for locus in loci:
            j = locus - 1
            col = (self._words[:, j // WORD_BITS] >> np.uint64(j % WORD_BITS)) & np.uint64(1)
            out.append(int(np.count_nonzero(col)))
        return out

    def to_text(self) -> str:
        return "".join(bits_to_str(r) + "\n" for r in self.rows())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Population):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._words, other._words)

    def __hash__(self):
        return hash((self._n, self._words.tobytes()))

    def __repr__(self) -> str:
        return f"Population(m={self.m}, n={self.n})"


def one_frequency(pop: Population, locus: int) -> LocusFrequency:
    """1-frequency of a 1-based locus."""
    if not 1 <= locus <= pop.n:
        raise IndexError(f"locus {locus} outside 1..{pop.n}")
    return LocusFrequency(pop.locus_ones([locus])[0], pop.m)


def random_population(
    m: int, n: int, rng: np.random.Generator, labels: np.ndarray | None = None
) -> Population:
    """Population of i.i.d. fair bits.

    Bits are drawn in locus-label order; ``labels`` maps columns to labels
    (see :func:`relabel_columns`).
    """
    if m < 1 or n < 1:
        raise ValueError(f"m and n must be positive, got m={m}, n={n}")
    w = n_words(n)
    words = rng.bit_generator.random_raw(m * w).reshape(m, w) & tail_mask(n)
    return Population._wrap(relabel_columns(words, n, labels), n)

