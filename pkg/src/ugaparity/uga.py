"""Simple genetic algorithm with uniform crossover (UGA).

One generation: query the oracle once per chromosome, draw 2m parents by
fitness-proportionate selection, build child i from parents i and i+m with a
fair uniform-crossover mask, then flip each bit independently with
probability p_m.

All randomness comes from a :class:`~ugaparity.streams.KeyedStream`, one block
per (generation, phase).  Masks and the initial population are drawn in
locus-label order, so relabelling loci (and K with them) permutes the run
exactly instead of merely in distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chromo import (
    WORD_BITS,
    LocusFrequency,
    Population,
    as_bits,
    n_words,
    random_population,
    relabel_columns,
    tail_mask,
    unpack_words,
)
from .oracle import FUNCTIONS, OracleSpec, QueryCounter, essential_masks
from .streams import KeyedStream, Phase


@dataclass(frozen=True)
class GaConfig:
    m: int
    n: int
    tau: int
    p_m: float
    seed: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"population size must be at least 2, got {self.m}")
        if self.n < 1:
            raise ValueError(f"chromosome length must be positive, got {self.n}")
        if self.tau < 1:
            raise ValueError(f"need at least one generation, got tau={self.tau}")
        if not 0 <= self.p_m < 1:
            raise ValueError(f"mutation rate must lie in [0, 1), got {self.p_m}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")


@dataclass(frozen=True)
class GenerationTrace:
    generation: int
    frequencies: dict[int, LocusFrequency]


def select_parents(fitness, count: int, rng: np.random.Generator) -> np.ndarray:
    """Fitness-proportionate (roulette) selection of ``count`` row indices.

    Integer fitness is sampled exactly by drawing a uniform fitness unit.  A
    population with zero total fitness is sampled uniformly.
    """
    f = np.asarray(fitness)
    if f.ndim != 1 or f.size == 0:
        raise ValueError("fitness must be a non-empty vector")
    if np.any(f < 0):
        raise ValueError("fitness values must be non-negative")
    m = f.size
    if f.dtype == bool or np.issubdtype(f.dtype, np.integer):
        f = f.astype(np.int64)
        total = int(f.sum())
        if total == 0:
            return rng.integers(0, m, size=count)
        owner = np.repeat(np.arange(m), f)
        return owner[rng.integers(0, total, size=count)]
    total = float(f.sum())
    if total == 0.0:
        return rng.integers(0, m, size=count)
    cum = np.cumsum(f / total)
    idx = np.searchsorted(cum, rng.random(count), side="right")
    # rounding can leave cum[-1] a hair below 1
    return np.minimum(idx, np.flatnonzero(f)[-1])


def uniform_crossover(parent_a, parent_b, mask) -> np.ndarray:
    """Child takes parent_a's bit where mask is 1 and parent_b's bit elsewhere."""
    a, b, mk = as_bits(parent_a), as_bits(parent_b), as_bits(mask)
    if not a.size == b.size == mk.size:
        raise ValueError("parents and mask must have equal lengths")
    return np.where(mk == 1, a, b).astype(np.uint8)


def mutate(x, mask) -> np.ndarray:
    x, mk = as_bits(x), as_bits(mask)
    if x.size != mk.size:
        raise ValueError("chromosome and mutation mask must have equal lengths")
    return x ^ mk


def crossover_masks(rng: np.random.Generator, m: int, n: int, labels=None) -> np.ndarray:
    """Packed fair-coin masks, one row per child."""
    w = n_words(n)
    words = rng.bit_generator.random_raw(m * w).reshape(m, w) & tail_mask(n)
    return relabel_columns(words, n, labels)


def mutation_sites(rng: np.random.Generator, size: int, p_m: float) -> np.ndarray:
    """Sorted positions in ``range(size)`` hit by i.i.d. Bernoulli(p_m) flips.

    Sampled through geometric gaps, which has the same law as one coin per
    position but costs O(size * p_m) draws.
    """
    if p_m == 0 or size == 0:
        return np.empty(0, dtype=np.int64)
    mean = size * p_m
    chunk = int(mean + 6 * math.sqrt(mean) + 16)
    parts = []
    last = -1
    while last < size:
        pos = last + np.cumsum(rng.geometric(p_m, size=chunk))
        parts.append(pos)
        last = int(pos[-1])
    sites = np.concatenate(parts)
    return sites[sites < size]


def mutation_mask_words(sites: np.ndarray, m: int, n: int, labels=None) -> np.ndarray:
    """Packed mutation masks from flat (row, label) sites."""
    rows, lab = np.divmod(sites, n)
    cols = lab if labels is None else np.argsort(labels)[lab]
    words = np.zeros((m, n_words(n)), dtype=np.uint64)
    bits = np.left_shift(np.uint64(1), (cols % WORD_BITS).astype(np.uint64))
    np.bitwise_xor.at(words, (rows, cols // WORD_BITS), bits)
    return words


def _next_generation(words, spec, cfg, streams, counter, generation, labels):
    """One generation for a batch of runs; ``words`` is (R, m, W)."""
    R, m, w = words.shape
    n = cfg.n
    num, den = spec.eta.numerator, spec.eta.denominator

    if spec.f == "parity":
        ones = np.bitwise_count(words & essential_masks(spec)).sum(axis=2, dtype=np.int64)
        clean = (ones & 1).astype(np.uint8)
    else:
        flat = unpack_words(words.reshape(R * m, w), n)[:, spec.zero_based]
        clean = FUNCTIONS[spec.f](flat).astype(np.uint8).reshape(R, m)
    noise = np.empty((R, m), dtype=bool)
    for r, st in enumerate(streams):
        noise[r] = st.at(generation, Phase.NOISE).integers(0, den, size=m) < num
    fitness = clean ^ noise
    counter.add(R * m)

    # fitness-proportionate selection; identical draws to select_parents()
    totals = fitness.sum(axis=1, dtype=np.int64)
    units = np.empty((R, 2 * m), dtype=np.int64)
    for r, st in enumerate(streams):
        units[r] = st.at(generation, Phase.SELECT).integers(0, totals[r] or m, size=2 * m)
    # fitness is 0/1, so the unit owners are just the rows holding a 1
    owner = np.flatnonzero(fitness.ravel())
    dead = totals == 0
    if owner.size:
        parents = np.take(owner, units + (np.cumsum(totals) - totals)[:, None], mode="clip")
    else:
        parents = np.empty_like(units)
    if dead.any():
        parents[dead] = units[dead] + (np.flatnonzero(dead) * m)[:, None]

    mask = np.empty((R, m * w), dtype=np.uint64)
    for r, st in enumerate(streams):
        mask[r] = st.at(generation, Phase.CROSSOVER).bit_generator.random_raw(m * w)
    mask = mask.reshape(R * m, w)
    mask &= tail_mask(n)
    if labels is not None:
        mask = relabel_columns(mask, n, labels)
    flat = words.reshape(R * m, w)
    a = np.take(flat, parents[:, :m].ravel(), axis=0)
    b = np.take(flat, parents[:, m:].ravel(), axis=0)
    child = (a & mask) | (b & ~mask)

    if cfg.p_m > 0:
        sites = [
            mutation_sites(st.at(generation, Phase.MUTATION), m * n, cfg.p_m) + r * m * n
            for r, st in enumerate(streams)
        ]
        sites = np.concatenate(sites)
        if sites.size:
            child ^= mutation_mask_words(sites, R * m, n, labels)
    child = child.reshape(R, m, w)
    return child


def step(
    pop: Population,
    spec: OracleSpec,
    cfg: GaConfig,
    stream: KeyedStream,
    counter: QueryCounter,
    generation: int = 1,
    labels: np.ndarray | None = None,
) -> Population:
    """Advance one generation; makes exactly ``pop.m`` oracle queries."""
    if not pop.n == spec.n == cfg.n:
        raise ValueError(f"inconsistent n: population {pop.n}, oracle {spec.n}, config {cfg.n}")
    if pop.m != cfg.m:
        raise ValueError(f"population has {pop.m} rows, config says m={cfg.m}")
    labels = _check_labels(labels, cfg.n)
    child = _next_generation(pop.words[None], spec, cfg, [stream], counter, generation, labels)
    return Population._wrap(child[0], pop.n)


def _check_labels(labels, n):
    if labels is None:
        return None
    labels = np.asarray(labels, dtype=np.intp)
    if labels.shape != (n,) or not np.array_equal(np.sort(labels), np.arange(n)):
        raise ValueError("labels must be a permutation of 0..n-1")
    return labels


@dataclass
class RunResult:
    """Outcome of one run.  Unpacks as ``(population, traces, queries)``."""

    population: Population
    tracked: tuple[int, ...]
    ones: np.ndarray  # (tau, len(tracked)) ones counts after each generation
    queries: int
    run_index: int = 0

    @property
    def traces(self) -> list[GenerationTrace]:
        m = self.population.m
        return [
            GenerationTrace(g + 1, {l: LocusFrequency(int(c), m) for l, c in zip(self.tracked, row)})
            for g, row in enumerate(self.ones)
        ]

    def __iter__(self):
        return iter((self.population, self.traces, self.queries))


def run_batch(
    spec: OracleSpec,
    cfg: GaConfig,
    run_indices: Sequence[int],
    tracked_loci: Sequence[int] = (),
    labels=None,
    counter: QueryCounter | None = None,
) -> list[RunResult]:
    """Run several independent runs in lockstep.

    Run ``r`` draws only from ``KeyedStream(cfg.seed, r)``, so its result does
    not depend on which other runs share the batch.
    """
    if spec.n != cfg.n:
        raise ValueError(f"oracle has n={spec.n}, config has n={cfg.n}")
    tracked = tuple(int(i) for i in tracked_loci)
    for locus in tracked:
        if not 1 <= locus <= cfg.n:
            raise IndexError(f"tracked locus {locus} outside 1..{cfg.n}")
    labels = _check_labels(labels, cfg.n)
    counter = QueryCounter() if counter is None else counter
    streams = [KeyedStream(cfg.seed, int(r)) for r in run_indices]
    R, m, n = len(streams), cfg.m, cfg.n
    words = np.stack(
        [random_population(m, n, st.at(0, Phase.INIT), labels).words for st in streams]
    ) if R else np.empty((0, m, n_words(n)), dtype=np.uint64)
    word_idx = [(l - 1) // WORD_BITS for l in tracked]
    shifts = [np.uint64((l - 1) % WORD_BITS) for l in tracked]
    ones = np.zeros((R, cfg.tau, len(tracked)), dtype=np.int64)
    queries = QueryCounter()
    for generation in range(1, cfg.tau + 1):
        words = _next_generation(words, spec, cfg, streams, queries, generation, labels)
        for t, (wi, sh) in enumerate(zip(word_idx, shifts)):
            ones[:, generation - 1, t] = ((words[:, :, wi] >> sh) & np.uint64(1)).sum(axis=1)
    counter.add(queries.count)
    per_run = cfg.m * cfg.tau
    return [
        RunResult(Population._wrap(words[i].copy(), n), tracked, ones[i], per_run, int(r))
        for i, r in enumerate(run_indices)
    ]


def run(
    spec: OracleSpec,
    cfg: GaConfig,
    tracked_loci: Sequence[int] = (),
    run_index: int = 0,
    labels=None,
    counter: QueryCounter | None = None,
) -> RunResult:
    """Run tau generations from a fresh random population.

    ``tracked_loci`` are 1-based; a trace is recorded after every generation.
    ``labels`` relabels loci for the random draws (column c draws as label
    labels[c]); leave it ``None`` outside symmetry experiments.
    """
    return run_batch(spec, cfg, [run_index], tracked_loci, labels, counter)[0]
