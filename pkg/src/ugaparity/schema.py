"""Exhaustive schema-partition effects over {0,1}^n.

A fitness function is held as a table of 2**n values.  Row ``x`` of the table
is the chromosome whose bits, read locus 1 first, spell ``x`` in binary, so
locus 1 is the most significant bit.  Reshaping the table to ``(2,) * n``
therefore gives one axis per locus, and a schema mean is a mean over the
axes outside the index set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .chromo import as_bits, bits_to_str
from .errors import CapabilityError

MAX_N = 24


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n > MAX_N:
        raise CapabilityError(f"exhaustive enumeration limited to n <= {MAX_N}, got {n}")


def all_points(n: int) -> np.ndarray:
    """Every chromosome of length n as a (2**n, n) array, in table order."""
    _check_n(n)
    idx = np.arange(2**n, dtype=np.int64)[:, None]
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx >> shifts) & 1).astype(np.uint8)


def fitness_table(fn: Callable[[np.ndarray], np.ndarray], n: int) -> np.ndarray:
    """Evaluate a row-vectorised function on all of {0,1}^n."""
    return np.asarray(fn(all_points(n)), dtype=np.float64).reshape(2**n)


def parity_table(n: int, K: Sequence[int] | None = None) -> np.ndarray:
    """Noiseless parity of the 1-based loci in K (all loci by default)."""
    pts = all_points(n)
    cols = np.arange(n) if K is None else np.asarray(K, dtype=np.intp) - 1
    return (pts[:, cols].sum(axis=1) & 1).astype(np.float64)


def with_noise(table: np.ndarray, eta) -> np.ndarray:
    """Expected fitness when each evaluation is negated with probability eta."""
    eta = float(Fraction(eta))
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    t = np.asarray(table, dtype=np.float64)
    return (1 - eta) * t + eta * (1 - t)


def table_n(table: np.ndarray) -> int:
    size = np.asarray(table).size
    n = size.bit_length() - 1
    if size < 2 or size != 1 << n:
        raise ValueError(f"fitness table length must be 2**n with n >= 1, got {size}")
    _check_n(n)
    return n


@dataclass(frozen=True)
class IndexSet:
    """Strictly increasing 1-based loci."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"index set must be strictly increasing: {idx}")
        if idx and idx[0] < 1:
            raise ValueError(f"loci are 1-based: {idx}")

    @property
    def order(self) -> int:
        return len(self.indices)

    def check(self, n: int) -> None:
        if self.indices and self.indices[-1] > n:
            raise ValueError(f"index set {self.indices} exceeds n={n}")

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)


def _as_index_set(index_set) -> IndexSet:
    return index_set if isinstance(index_set, IndexSet) else IndexSet(tuple(index_set))


def _prepare(fitness, eta):
    table = np.asarray(fitness, dtype=np.float64).ravel()
    n = table_n(table)
    if eta is not None:
        table = with_noise(table, eta)
    return table, n


def schema_means(fitness, index_set, eta=None) -> np.ndarray:
    """Means of all 2**|I| schemata, indexed by pattern with the first locus of I as MSB."""
    table, n = _prepare(fitness, eta)
    idx = _as_index_set(index_set)
    idx.check(n)
    others = tuple(sorted(set(range(n)) - {i - 1 for i in idx}))
    means = table.reshape((2,) * n).mean(axis=others) if others else table.reshape((2,) * n)
    return np.asarray(means, dtype=np.float64).reshape(-1)


def schema_mean(fitness, index_set, pattern, eta=None) -> float:
    """Mean fitness over the 2**(n-|I|) completions of ``pattern`` on I."""
    idx = _as_index_set(index_set)
    bits = as_bits(pattern, len(idx))
    pos = int("".join(map(str, bits)) or "0", 2)
    return float(schema_means(fitness, idx, eta)[pos])


@dataclass(frozen=True)
class PartitionEffect:
    index_set: IndexSet
    effect: float
    schema_means: dict[str, float]


def partition_effect(fitness, index_set, eta=None) -> PartitionEffect:
    """Population variance of the schema means of the partition induced by I."""
    idx = _as_index_set(index_set)
    means = schema_means(fitness, idx, eta)
    effect = float(np.mean((means - means.mean()) ** 2))
    patterns = [bits_to_str(((p >> np.arange(idx.order - 1, -1, -1)) & 1)) for p in range(means.size)]
    return PartitionEffect(idx, effect, dict(zip(patterns, means.tolist())))


def count_partitions(n: int, k: int) -> int:
    """Number of schema partitions of order k over n loci."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    return math.comb(n, k)
