"""Empirical 1-frequency distributions and the hypothesis tests run on them.

All p-values are carried as log10 so bounds like (7/8)**3000 never underflow.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
from scipy.stats import chi2, chi2_contingency

from .chromo import LocusFrequency, in_band
from .errors import CapabilityError

LN10 = math.log(10)


class Band(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"


def band_membership(freq: LocusFrequency) -> Band:
    return Band.INSIDE if in_band(freq.count, freq.m) else Band.OUTSIDE


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Histogram of ones counts at one locus over independent runs."""

    m: int
    counts: tuple[int, ...]  # counts[c] = runs that ended with c ones; length m + 1

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if self.m < 1 or len(counts) != self.m + 1:
            raise ValueError(f"need m+1 = {self.m + 1} bins, got {len(counts)}")
        if any(c < 0 for c in counts):
            raise ValueError("bin counts must be non-negative")

    @classmethod
    def from_observations(cls, ones: Iterable[int], m: int) -> "EmpiricalDistribution":
        ones = np.asarray(list(ones), dtype=np.int64)
        if ones.size and (ones.min() < 0 or ones.max() > m):
            raise ValueError(f"ones counts must lie in 0..{m}")
        return cls(m, tuple(np.bincount(ones, minlength=m + 1).tolist()))

    @property
    def total_runs(self) -> int:
        return sum(self.counts)

    @property
    def in_band(self) -> int:
        """Runs whose final 1-frequency lies strictly inside (0.05, 0.95)."""
        c = np.arange(self.m + 1)
        return int(np.asarray(self.counts)[in_band(c, self.m)].sum())

    def as_dict(self) -> dict[int, int]:
        return {c: k for c, k in enumerate(self.counts) if k}


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # keep pytest from collecting this class

    null_name: str
    observed_in_band: int | None
    trials: int
    log10_p: float
    adjusted_alpha: float
    rejected: bool
    statistic: float | None = None
    dof: int | None = None

    @property
    def p_value(self) -> float:
        return 10.0**self.log10_p

    def to_dict(self) -> dict:
        return {
            "null": self.null_name,
            "observed_in_band": self.observed_in_band,
            "trials": self.trials,
            "log10_p": self.log10_p,
            "adjusted_alpha": self.adjusted_alpha,
            "rejected": self.rejected,
            "statistic": self.statistic,
            "dof": self.dof,
        }


def _log10_alpha(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return math.log10(alpha)


def null_p_value_bound(threshold_eps, trials: int) -> float:
    """log10 of (1 - eps)**N, the chance that N independent runs all miss an event of probability eps."""
    eps = Fraction(threshold_eps)
    if not 0 < eps < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold_eps}")
    if trials <= 0:
        raise ValueError(f"need at least one trial, got {trials}")
    return trials * math.log10(1 - eps)


def _band_report(name, dist, want_inside, alpha, eps) -> TestReport:
    n = dist.total_runs
    if n == 0:
        raise ValueError(f"no runs in the distribution for {name}")
    inside = dist.in_band
    conforming = inside == n if want_inside else inside == 0
    # the bound only covers the case where every run conforms
    log_p = null_p_value_bound(eps, n) if conforming else 0.0
    return TestReport(name, inside, n, log_p, alpha, log_p < _log10_alpha(alpha))


def global_null_test(
    essential: EmpiricalDistribution,
    nonessential: EmpiricalDistribution,
    alpha: float,
    eps=Fraction(1, 8),
) -> tuple[TestReport, TestReport]:
    """Test both band nulls at Bonferroni level alpha/2 each.

    The essential null is that a run lands inside the band with probability
    at least eps; the nonessential null that it lands outside with
    probability at least eps.
    """
    a = alpha / 2
    return (
        _band_report("essential", essential, False, a, eps),
        _band_report("nonessential", nonessential, True, a, eps),
    )


def locus_null_tests(
    essential: Mapping[int, EmpiricalDistribution],
    nonessential: Mapping[int, EmpiricalDistribution],
    alpha: float,
    eps=Fraction(1, 8),
) -> dict[int, TestReport]:
    """One band null per locus, Bonferroni-adjusted over all of them."""
    total = len(essential) + len(nonessential)
    if total == 0:
        raise ValueError("no loci to test")
    a = alpha / total
    out = {l: _band_report(f"essential:{l}", d, False, a, eps) for l, d in essential.items()}
    out.update({l: _band_report(f"nonessential:{l}", d, True, a, eps) for l, d in nonessential.items()})
    return out


MIN_EXPECTED = 5


def merged_bins(a: EmpiricalDistribution, b: EmpiricalDistribution) -> np.ndarray:
    """2 x B table of adjacent ones-count bins, merged until every expected cell is >= 5."""
    if a.m != b.m:
        raise ValueError(f"distributions over different m: {a.m} vs {b.m}")
    na, nb = a.total_runs, b.total_runs
    if min(na, nb) < MIN_EXPECTED:
        raise CapabilityError(f"too few runs to bin ({na} and {nb}); need {MIN_EXPECTED} each")
    share = min(na, nb) / (na + nb)
    ca, cb = np.asarray(a.counts), np.asarray(b.counts)
    cols: list[list[int]] = []
    acc = [0, 0]
    for x, y in zip(ca, cb):
        acc[0] += x
        acc[1] += y
        if (acc[0] + acc[1]) * share >= MIN_EXPECTED:
            cols.append(acc)
            acc = [0, 0]
    if acc[0] + acc[1]:
        # leftover tail joins the last full bin
        cols[-1][0] += acc[0]
        cols[-1][1] += acc[1]
    return np.array(cols, dtype=np.int64).T


def symmetry_test(a: EmpiricalDistribution, b: EmpiricalDistribution, alpha: float) -> TestReport:
    """Chi-square test that two runs sets share one ones-count distribution.

    With a single merged bin there is nothing to compare; p is reported as 1.
    """
    log_alpha = _log10_alpha(alpha)
    table = merged_bins(a, b)
    trials = a.total_runs + b.total_runs
    if table.shape[1] < 2:
        return TestReport("homogeneity", None, trials, 0.0, alpha, False, 0.0, 0)
    stat, _, dof, _ = chi2_contingency(table, correction=False)
    log_p = float(chi2.logsf(stat, dof)) / LN10
    return TestReport("homogeneity", None, trials, log_p, alpha, log_p < log_alpha, float(stat), int(dof))


def per_bit_error_rates(hypotheses, target) -> np.ndarray:
    """Fraction of hypotheses wrong at each locus."""
    h = np.asarray(hypotheses, dtype=np.uint8)
    t = np.asarray(target, dtype=np.uint8)
    if h.ndim != 2 or h.shape[1] != t.size:
        raise ValueError("hypotheses must be an (R, n) array matching the target length")
    return (h != t).mean(axis=0)
