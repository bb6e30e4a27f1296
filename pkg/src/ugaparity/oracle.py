"""Essential-attribute membership oracle with random classification error."""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .chromo import Population, as_bits, n_words, WORD_BITS


def parity(y) -> int:
    """1 iff ``y`` holds an odd number of ones."""
    y = as_bits(y)
    if y.size == 0:
        raise ValueError("parity of an empty bit vector is undefined")
    return int(np.bitwise_xor.reduce(y))


def _parity_rows(y: np.ndarray) -> np.ndarray:
    return (y.sum(axis=1, dtype=np.int64) & 1).astype(np.uint8)


# Boolean functions over {0,1}^k, vectorised over the rows of an (N, k) array.
FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {"parity": _parity_rows}


def register_function(name: str, fn: Callable[[np.ndarray], np.ndarray]) -> None:
    if name in FUNCTIONS:
        raise ValueError(f"boolean function {name!r} already registered")
    FUNCTIONS[name] = fn


@dataclass(frozen=True)
class OracleSpec:
    """phi = <n, k, K, f, eta>; ``K`` holds 1-based essential loci."""

    n: int
    K: tuple[int, ...]
    f: str = "parity"
    eta: Fraction = Fraction(1, 5)
    k: int = field(default=-1)

    def __post_init__(self):
        K = tuple(int(i) for i in self.K)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "eta", Fraction(self.eta))
        if self.k == -1:
            object.__setattr__(self, "k", len(K))
        if len(K) != self.k:
            raise ValueError(f"|K| = {len(K)} but k = {self.k}")
        if not 1 <= self.k < self.n:
            raise ValueError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if any(b <= a for a, b in zip(K, K[1:])):
            raise ValueError(f"K must be strictly increasing: {K}")
        if K[0] < 1 or K[-1] > self.n:
            raise ValueError(f"K elements must lie in 1..{self.n}: {K}")
        if not 0 < self.eta < Fraction(1, 2):
            raise ValueError(f"eta must lie in (0, 1/2), got {self.eta}")
        if self.f not in FUNCTIONS:
            raise ValueError(f"unknown boolean function {self.f!r}")

    @property
    def zero_based(self) -> np.ndarray:
        return np.asarray(self.K, dtype=np.intp) - 1

    def to_config(self) -> str:
        return (
            f"n = {self.n}\nk = {self.k}\nK = {','.join(map(str, self.K))}\n"
            f"f = {self.f}\neta_num = {self.eta.numerator}\neta_den = {self.eta.denominator}\n"
        )

    @classmethod
    def from_config(cls, text: str) -> "OracleSpec":
        kv = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"malformed config line: {line!r}")
            kv[key.strip()] = value.strip()
        try:
            return cls(
                n=int(kv["n"]),
                k=int(kv["k"]),
                K=tuple(int(v) for v in kv["K"].split(",")),
                f=kv.get("f", "parity"),
                eta=Fraction(int(kv["eta_num"]), int(kv["eta_den"])),
            )
        except KeyError as exc:
            raise ValueError(f"missing oracle config key {exc}") from None


@dataclass
class QueryCounter:
    count: int = 0

    def add(self, queries: int) -> None:
        if queries < 0:
            raise ValueError("query counts only grow")
        self.count += queries

    def __iadd__(self, other: "QueryCounter") -> "QueryCounter":
        self.add(other.count)
        return self


def project(x, K) -> np.ndarray:
    """Keep the bits of ``x`` at the 1-based indices in ``K`` (taken in sorted order)."""
    x = as_bits(x)
    idx = sorted(int(i) for i in K)
    if idx and (idx[0] < 1 or idx[-1] > x.size):
        raise ValueError(f"index set {idx} out of range for a {x.size}-bit string")
    return x[np.asarray(idx, dtype=np.intp) - 1]


def target_concept(spec: OracleSpec) -> np.ndarray:
    c = np.zeros(spec.n, dtype=np.uint8)
    c[spec.zero_based] = 1
    return c


def _flips(spec: OracleSpec, rng: np.random.Generator, size: int | None) -> np.ndarray:
    # exact rational comparison: uniform integer in [0, den) below num
    return rng.integers(0, spec.eta.denominator, size=size) < spec.eta.numerator


def query(spec: OracleSpec, x, rng: np.random.Generator, counter: QueryCounter) -> int:
    """One noisy membership query; noise is drawn fresh on every call."""
    x = as_bits(x)
    if x.size != spec.n:
        raise ValueError(f"query of length {x.size} against an oracle with n={spec.n}")
    clean = int(FUNCTIONS[spec.f](x[spec.zero_based][None, :])[0])
    counter.add(1)
    return clean ^ int(_flips(spec, rng, None))


@functools.lru_cache(maxsize=128)
def essential_masks(spec: OracleSpec) -> np.ndarray:
    mask = np.zeros(n_words(spec.n), dtype=np.uint64)
    for j in spec.zero_based:
        mask[j // WORD_BITS] |= np.uint64(1) << np.uint64(j % WORD_BITS)
    mask.flags.writeable = False
    return mask


def clean_values(spec: OracleSpec, pop: Population) -> np.ndarray:
    """Noise-free f(pi_K(x)) for every row."""
    if spec.f == "parity":
        ones = np.bitwise_count(pop.words & essential_masks(spec)).sum(axis=1, dtype=np.int64)
        return (ones & 1).astype(np.uint8)
    return FUNCTIONS[spec.f](pop.rows()[:, spec.zero_based]).astype(np.uint8)


def query_population(
    spec: OracleSpec, pop: Population, rng: np.random.Generator, counter: QueryCounter
) -> np.ndarray:
    """Query every row once; one noise draw per row, in row order."""
    if pop.n != spec.n:
        raise ValueError(f"population has n={pop.n}, oracle has n={spec.n}")
    values = clean_values(spec, pop) ^ _flips(spec, rng, pop.m)
    counter.add(pop.m)
    return values.astype(np.uint8)
