"""Hypothesis tests used across the analyses.

All tests return a :class:`TestResult`. p-values come from the normal and
chi-squared distributions evaluated through ``scipy.special`` (error
function and regularized incomplete gamma), except Tukey's HSD, which uses
the studentized range distribution.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy import special
from scipy.stats import studentized_range

from .errors import (
    DegenerateGroup,
    DegenerateSample,
    DegenerateTable,
    InvalidP,
    TooShort,
)
from .survival import DistributionSummary, EstimatedDistribution, sample_from

_TINY_P = sys.float_info.min


@dataclass
class TestResult:
    """Outcome of one hypothesis test."""

    method: str
    statistic: float
    p_value: float
    corrected_p: float | None = None
    n_comparisons: int | None = None
    notes: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def stars(self) -> str:
        """Significance stars at 0.05 / 0.01 / 0.001 on the corrected p."""
        p = self.corrected_p if self.corrected_p is not None else self.p_value
        if p < 0.001:
            return "***"
        if p < 0.01:
            return "**"
        if p < 0.05:
            return "*"
        return ""

    def to_record(self, alpha: float = 0.05) -> dict:
        return {
            "method": self.method,
            "statistic": self.statistic,
            "p": self.p_value,
            "corrected_p": self.corrected_p,
            "n_comparisons": self.n_comparisons,
            "alpha": alpha,
            "significance_stars": self.stars,
            "notes": self.notes,
            **self.extra,
        }


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * special.erfc(-z / math.sqrt(2.0))


def normal_ppf(q: float) -> float:
    return float(special.ndtri(q))


def chi2_sf(x: float, df: float) -> float:
    """Chi-squared survival function via the regularized incomplete gamma."""
    if x <= 0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


def _rankdata(values: np.ndarray) -> np.ndarray:
    """Fractional ranks (ties get the mean of their rank span)."""
    order = np.argsort(values, kind="mergesort")
    sv = values[order]
    new_group = np.r_[True, sv[1:] != sv[:-1]]
    group = np.cumsum(new_group) - 1
    counts = np.bincount(group)
    ends = np.cumsum(counts)
    mean_rank = ends - 0.5 * (counts - 1)
    ranks = np.empty(len(values))
    ranks[order] = mean_rank[group]
    return ranks


def mann_whitney_u(
    a: Sequence[float],
    b: Sequence[float],
    method: str = "normal",
) -> TestResult:
    """Two-sided Mann-Whitney U test.

    ``method='normal'`` uses the normal approximation with tie correction
    and a continuity correction. ``method='exact'`` enumerates the exact
    null distribution of U (tie-free samples, n + m <= 20).
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if len(x) < 2 or len(y) < 2:
        raise DegenerateSample("mann_whitney_u needs >= 2 values per sample")
    n1, n2 = len(x), len(y)
    ranks = _rankdata(np.concatenate([x, y]))
    u1 = n1 * n2 + n1 * (n1 + 1) / 2.0 - ranks[:n1].sum()

    if method == "exact":
        if n1 + n2 > 20:
            raise ValueError("exact mode limited to n + m <= 20")
        p = _mwu_exact_p(x, y, u1)
        return TestResult(method="mann_whitney_u_exact", statistic=u1, p_value=p)

    n = n1 + n2
    mu = n1 * n2 / 2.0
    # tie correction on the pooled sample
    _, counts = np.unique(np.concatenate([x, y]), return_counts=True)
    tie_term = (counts**3 - counts).sum()
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return TestResult(
            method="mann_whitney_u",
            statistic=u1,
            p_value=1.0,
            notes="all pooled values tied",
        )
    z = (abs(u1 - mu) - 0.5) / math.sqrt(var)
    z = max(z, 0.0)
    p = min(1.0, 2.0 * normal_cdf(-z))
    return TestResult(method="mann_whitney_u", statistic=u1, p_value=p)


def _mwu_exact_p(x: np.ndarray, y: np.ndarray, u1: float) -> float:
    """Exact two-sided p by enumerating all group assignments of the ranks."""
    n1, n2 = len(x), len(y)
    ranks = _rankdata(np.concatenate([x, y]))
    count = 0
    total = 0
    observed = min(u1, n1 * n2 - u1)
    for idx in combinations(range(n1 + n2), n1):
        r1 = ranks[list(idx)].sum()
        u = n1 * n2 + n1 * (n1 + 1) / 2.0 - r1
        total += 1
        if min(u, n1 * n2 - u) <= observed + 1e-12:
            count += 1
    return count / total


def fisher_combine(pvals: Sequence[float]) -> TestResult:
    """Fisher's combined probability test: -2 sum(ln p) ~ chi2(2k)."""
    ps = list(pvals)
    if not ps:
        raise InvalidP("fisher_combine requires at least one p-value")
    for p in ps:
        if not 0.0 < p <= 1.0:
            raise InvalidP(f"p-value {p} outside (0, 1]")
    stat = -2.0 * sum(math.log(p) for p in ps)
    p = chi2_sf(stat, 2 * len(ps))
    return TestResult(
        method="fisher_combined",
        statistic=stat,
        p_value=p,
        n_comparisons=len(ps),
    )


def mc_u_test(
    dist_a: EstimatedDistribution,
    dist_b: EstimatedDistribution,
    n_per_rep: int = 500,
    reps: int = 100,
    seed: int | np.random.SeedSequence = 0,
) -> TestResult:
    """Monte Carlo U-test between two fitted censored distributions.

    Draws ``n_per_rep`` values from each distribution per replicate, runs
    a Mann-Whitney U test, and combines the replicate p-values with
    Fisher's method. Replicate seeds are spawned deterministically from
    the master seed, so the result does not depend on execution order.
    Replicate p-values are floored at the smallest positive float before
    taking logs.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(reps)
    pvals = []
    for child in children:
        rng = np.random.default_rng(child)
        xa = sample_from(dist_a, n_per_rep, rng)
        xb = sample_from(dist_b, n_per_rep, rng)
        pvals.append(max(mann_whitney_u(xa, xb).p_value, _TINY_P))
    combined = fisher_combine(pvals)
    return TestResult(
        method="mc_u_test",
        statistic=combined.statistic,
        p_value=combined.p_value,
        n_comparisons=reps,
        extra={"n_per_rep": n_per_rep, "reps": reps},
    )


def z_test_means(
    summary_a: DistributionSummary,
    summary_b: DistributionSummary,
) -> TestResult:
    """Z-test for a difference in means of two fitted distributions.

    Z = (m_A - m_B) / sqrt(s_A^2/n_A + s_B^2/n_B), p = 2 Phi(-|Z|). When
    both standard deviations are zero the test degenerates: equal means
    give p = 1, distinct means give p = 0.
    """
    if summary_a.n < 2 or summary_b.n < 2:
        raise DegenerateSample("z_test_means needs n >= 2 per sample")
    se = math.sqrt(
        summary_a.std_km**2 / summary_a.n + summary_b.std_km**2 / summary_b.n
    )
    diff = summary_a.mean_km - summary_b.mean_km
    if se == 0:
        if diff == 0:
            return TestResult(
                method="z_test_means",
                statistic=0.0,
                p_value=1.0,
                notes="zero variance, equal means",
            )
        return TestResult(
            method="z_test_means",
            statistic=math.copysign(math.inf, diff),
            p_value=0.0,
            notes="zero variance, distinct means",
        )
    z = diff / se
    return TestResult(
        method="z_test_means",
        statistic=z,
        p_value=min(1.0, 2.0 * normal_cdf(-abs(z))),
    )


def g_test(table: Sequence[Sequence[float]]) -> TestResult:
    """G-test of independence on an r x c contingency table.

    G = 2 sum O ln(O/E) over cells with O > 0; p from chi-squared with
    (r-1)(c-1) degrees of freedom.
    """
    obs = np.asarray(table, dtype=float)
    if obs.ndim != 2 or obs.shape[0] < 2 or obs.shape[1] < 2:
        raise DegenerateTable("g_test needs a table with >= 2 rows and columns")
    if np.any(obs < 0):
        raise DegenerateTable("g_test table has negative counts")
    rows = obs.sum(axis=1)
    cols = obs.sum(axis=0)
    if np.any(rows <= 0) or np.any(cols <= 0):
        raise DegenerateTable("g_test table has a non-positive row or column sum")
    expected = np.outer(rows, cols) / obs.sum()
    mask = obs > 0
    g = 2.0 * float((obs[mask] * np.log(obs[mask] / expected[mask])).sum())
    g = max(g, 0.0)
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return TestResult(
        method="g_test",
        statistic=g,
        p_value=chi2_sf(g, df),
        extra={"df": df},
    )


def tukey_hsd(
    groups: Sequence[Sequence[float]],
    labels: Sequence[str] | None = None,
) -> list[TestResult]:
    """Pairwise Tukey HSD tests across groups.

    Uses the studentized range distribution with the Tukey-Kramer
    adjustment for unequal group sizes. When the pooled within-group
    variance is zero the comparison degenerates: equal means give p = 1,
    distinct means give p = 0 (noted on the result).
    """
    data = [np.asarray(g, dtype=float) for g in groups]
    if len(data) < 2:
        raise DegenerateGroup("tukey_hsd needs >= 2 groups")
    for g in data:
        if len(g) < 2:
            raise DegenerateGroup("every group needs >= 2 values")
    if labels is None:
        labels = [f"group{i}" for i in range(len(data))]
    k = len(data)
    n_total = sum(len(g) for g in data)
    df = n_total - k
    ms_within = sum(((g - g.mean()) ** 2).sum() for g in data) / df
    results = []
    for i, j in combinations(range(k), 2):
        gi, gj = data[i], data[j]
        diff = abs(gi.mean() - gj.mean())
        if ms_within <= 0:
            p = 1.0 if diff == 0 else 0.0
            q = 0.0 if diff == 0 else math.inf
            note = "zero within-group variance"
        else:
            q = diff / math.sqrt(ms_within / 2.0 * (1.0 / len(gi) + 1.0 / len(gj)))
            p = float(studentized_range.sf(q, k, df))
            note = ""
        results.append(
            TestResult(
                method="tukey_hsd",
                statistic=q,
                p_value=min(max(p, 0.0), 1.0),
                notes=note,
                extra={"pair": (labels[i], labels[j])},
            )
        )
    return results


def _mann_kendall_s_var(x: np.ndarray) -> tuple[float, float]:
    """Mann-Kendall S statistic and its tie-corrected null variance."""
    n = len(x)
    s = 0.0
    for i in range(n - 1):
        s += np.sign(x[i + 1 :] - x[i]).sum()
    _, counts = np.unique(x, return_counts=True)
    tie_term = (counts * (counts - 1) * (2 * counts + 5)).sum()
    var = (n * (n - 1) * (2 * n + 5) - tie_term) / 18.0
    return float(s), float(var)


def _mk_z_p(s: float, var: float) -> tuple[float, float]:
    if var <= 0:
        return 0.0, 1.0
    if s > 0:
        z = (s - 1.0) / math.sqrt(var)
    elif s < 0:
        z = (s + 1.0) / math.sqrt(var)
    else:
        z = 0.0
    return z, min(1.0, 2.0 * normal_cdf(-abs(z)))


def mann_kendall_trend(series: Sequence[float]) -> TestResult:
    """Plain (uncorrected) two-sided Mann-Kendall trend test."""
    x = np.asarray(series, dtype=float)
    if len(x) < 4:
        raise TooShort("trend test needs length >= 4")
    s, var = _mann_kendall_s_var(x)
    z, p = _mk_z_p(s, var)
    return TestResult(method="mann_kendall", statistic=z, p_value=p, extra={"s": s})


def _sen_slope(x: np.ndarray) -> float:
    n = len(x)
    slopes = [
        (x[j] - x[i]) / (j - i) for i in range(n - 1) for j in range(i + 1, n)
    ]
    return float(np.median(slopes))


def hamed_rao_trend(series: Sequence[float], lag_alpha: float = 0.05) -> TestResult:
    """Mann-Kendall trend test with autocorrelation-corrected variance.

    The null variance of S is scaled by an effective-sample-size ratio
    built from the rank autocorrelation of the Sen-detrended series. The
    lag-1 rank autocorrelation is corrected for the shrinkage caused by
    estimating the mean and trend, rho* = (n rho + 2) / (n - 4), screened
    against the two-sided ``lag_alpha`` white-noise band, and extended
    over lags as rho*^i (detrended residuals modeled as AR(1); the raw
    per-lag estimates are too biased at this length to survive a
    significance screen even when persistence is real). Ties in the
    series enter the base variance through the usual tie correction.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 4:
        raise TooShort("trend test needs length >= 4")
    s, var0 = _mann_kendall_s_var(x)

    detrended = x - _sen_slope(x) * np.arange(n)
    ranks = _rankdata(detrended)
    centered = ranks - ranks.mean()
    denom = (centered**2).sum()
    ratio = 1.0
    rho_corrected = 0.0
    if denom > 0:
        rho1 = (centered[: n - 1] * centered[1:]).sum() / denom
        if n > 4:
            rho_corrected = min((n * rho1 + 2.0) / (n - 4.0), 0.999)
        else:
            # the detrending bias correction is undefined at n = 4
            rho_corrected = min(rho1, 0.999)
        bound = normal_ppf(1.0 - lag_alpha / 2.0) / math.sqrt(n)
        if abs(rho_corrected) > bound:
            correction = sum(
                (n - i) * (n - i - 1) * (n - i - 2) * rho_corrected**i
                for i in range(1, n - 2)
            )
            ratio = 1.0 + 2.0 / (n * (n - 1) * (n - 2)) * correction
    # a non-positive ratio means the correction overshot (strong negative
    # autocorrelation); fall back to the uncorrected variance
    var = var0 * ratio if ratio > 0 else var0
    z, p = _mk_z_p(s, var)
    return TestResult(
        method="hamed_rao",
        statistic=z,
        p_value=p,
        extra={"s": s, "variance_ratio": ratio, "rho1": rho_corrected},
    )


def holm_bonferroni(
    pvals: Sequence[float], alpha: float = 0.05
) -> list[tuple[float, bool]]:
    """Holm step-down adjusted p-values and rejection decisions.

    Returns (corrected_p, reject) in the input order. Adjusted p-values
    are monotone after sorting and capped at 1; the rejection set follows
    the sequential rule at level ``alpha``.
    """
    ps = list(pvals)
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise InvalidP(f"p-value {p} outside [0, 1]")
    k = len(ps)
    order = sorted(range(k), key=lambda i: ps[i])
    adjusted = [0.0] * k
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, (k - rank) * ps[i])
        adjusted[i] = min(1.0, running)
    rejections = [False] * k
    for rank, i in enumerate(order):
        if adjusted[i] <= alpha:
            rejections[i] = True
        else:
            break
    return list(zip(adjusted, rejections))


def apply_holm(results: list[TestResult], alpha: float = 0.05,
               n_comparisons: int | None = None) -> list[TestResult]:
    """Attach Holm-corrected p-values to a family of test results.

    ``n_comparisons`` overrides the family size (results beyond the list
    are treated as p = 1 placeholders and never rejected).
    """
    k = n_comparisons if n_comparisons is not None else len(results)
    if k < len(results):
        raise ValueError("n_comparisons smaller than the result family")
    padded = [r.p_value for r in results] + [1.0] * (k - len(results))
    corrected = holm_bonferroni(padded, alpha=alpha)
    for r, (cp, _) in zip(results, corrected):
        r.corrected_p = cp
        r.n_comparisons = k
    return results
