"""Composite analyses over journey networks and region attributes.

Covers the degree/population regressions with outlier flagging, per-capita
import/export scoring, knee-based top-k selection, group profiling with
its test battery, journey-distance comparisons between groups, and the
coverage-threshold sensitivity sweep.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    EmptyAfterFilter,
    KTooLarge,
    MissingAttributes,
    TooFewPoints,
)
from .geo import DistanceInterval, lookup_interval
from .network import (
    JourneyEvent,
    JourneyNetwork,
    build_network,
    degree_vector,
    hits,
    remove_self_loops,
)
from .stats import TestResult, apply_holm, g_test, mc_u_test, tukey_hsd, z_test_means
from .survival import (
    CensoredSample,
    DistributionSummary,
    EstimatedDistribution,
    summarize,
    turnbull_fit,
)
from .temporal import slice_series, temporal_correlation

URBANICITY_CLASSES = (
    "large_central_metro",
    "large_fringe_metro",
    "medium_metro",
    "small_metro",
    "micropolitan",
    "noncore",
)
URBAN_CLASSES = frozenset(URBANICITY_CLASSES[:4])

# metrics whose top groups are profiled by journeys INTO the members;
# the others by journeys FROM the members
IMPORT_METRICS = frozenset({"ipc", "authority"})
EXPORT_METRICS = frozenset({"opc", "hub"})


class ZeroPopulationWarning(UserWarning):
    """A region was skipped in per-capita scoring for lack of population."""


@dataclass
class RegionAttributes:
    """Demographic, economic and coverage attributes of one region."""

    region_id: str
    population: int
    urbanicity: str
    demographics: dict[str, float] = field(default_factory=dict)
    employed: float = 0.0
    poverty: float = 0.0
    coverage: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.urbanicity not in URBANICITY_CLASSES:
            raise ValueError(f"unknown urbanicity class {self.urbanicity!r}")
        if self.population < 0:
            raise ValueError("population must be non-negative")
        for name, share in list(self.demographics.items()) + [
            ("employed", self.employed),
            ("poverty", self.poverty),
        ]:
            if not 0.0 <= share <= 1.0:
                raise ValueError(f"share {name!r} = {share} outside [0, 1]")
        for window, cov in self.coverage.items():
            if not 0.0 <= cov <= 1.0:
                raise ValueError(f"coverage {cov} in window {window} outside [0, 1]")

    @property
    def urban(self) -> bool:
        return self.urbanicity in URBAN_CLASSES

    def min_coverage(self) -> float:
        """Worst coverage over the region's reported windows (0 if none)."""
        return min(self.coverage.values()) if self.coverage else 0.0


@dataclass
class RegressionFit:
    """OLS fit in log-log space with 3-sigma residual outliers."""

    slope: float
    intercept: float
    r_squared: float
    residuals: np.ndarray
    outliers: np.ndarray  # boolean, aligned with the input points


@dataclass
class TopKSelection:
    """Top-k regions under one metric, with the knee of the score curve."""

    metric: str
    k: int
    members: list[str]
    elbow_k: int | None


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> RegressionFit:
    """OLS of log(y + 1) on log(x), with outliers beyond 3 residual sigmas.

    The +1 shift keeps zero-valued y points in the fit; x must be strictly
    positive.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if len(xa) < 3:
        raise TooFewPoints("loglog_fit needs >= 3 points")
    if np.any(xa <= 0):
        raise ValueError("x values must be strictly positive")
    if np.any(ya < 0):
        raise ValueError("y values must be non-negative")
    lx = np.log(xa)
    ly = np.log(ya + 1.0)
    vx = lx - lx.mean()
    vy = ly - ly.mean()
    sxx = (vx**2).sum()
    if sxx == 0:
        raise ValueError("x values are all identical after log transform")
    slope = float((vx * vy).sum() / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    residuals = ly - (intercept + slope * lx)
    sst = (vy**2).sum()
    r_squared = float(1.0 - (residuals**2).sum() / sst) if sst > 0 else 0.0
    sigma = float(residuals.std())
    outliers = (
        np.abs(residuals) > 3.0 * sigma
        if sigma > 0
        else np.zeros(len(residuals), dtype=bool)
    )
    return RegressionFit(
        slope=slope,
        intercept=intercept,
        r_squared=max(0.0, r_squared),
        residuals=residuals,
        outliers=outliers,
    )


def per_capita_metrics(
    net: JourneyNetwork,
    attrs: Mapping[str, RegionAttributes],
) -> tuple[dict[str, float], dict[str, float]]:
    """Weighted in/out degree per capita (IPC, OPC) for every scorable region.

    Self-loops never count. Regions without attributes or with zero
    population are skipped with a ZeroPopulationWarning.
    """
    din = degree_vector(net, weighted=True, direction="in").values
    dout = degree_vector(net, weighted=True, direction="out").values
    ipc: dict[str, float] = {}
    opc: dict[str, float] = {}
    for region in net.nodes:
        attr = attrs.get(region)
        if attr is None or attr.population <= 0:
            warnings.warn(
                f"region {region!r} skipped in per-capita scoring "
                "(missing attributes or zero population)",
                ZeroPopulationWarning,
                stacklevel=2,
            )
            continue
        ipc[region] = din[region] / attr.population
        opc[region] = dout[region] / attr.population
    return ipc, opc


def kneedle_elbow(sorted_desc: Sequence[float], sensitivity: float = 0.0) -> int | None:
    """Knee index of a descending score curve (offline Kneedle, S given).

    The curve is normalized to the unit square and flipped vertically so
    it becomes concave increasing; knee candidates are the interior local
    maxima of the difference between the flipped curve and the diagonal.
    A candidate is confirmed when the difference drops below its value
    minus S times the mean point spacing before the next candidate.
    Returns None when no knee exists (linear or constant input).
    """
    y = np.asarray(sorted_desc, dtype=float)
    n = len(y)
    if n < 3:
        raise ValueError("kneedle_elbow needs >= 3 points")
    if np.any(np.diff(y) > 0):
        raise ValueError("input must be sorted descending")
    if y.max() == y.min():
        return None
    x_n = np.arange(n) / (n - 1)
    y_n = (y - y.min()) / (y.max() - y.min())
    diff = (1.0 - y_n) - x_n

    candidates = [
        i for i in range(1, n - 1) if diff[i] >= diff[i - 1] and diff[i] >= diff[i + 1]
    ]
    spacing = sensitivity / (n - 1)
    # absolute tolerance keeps float dust on flat difference curves (e.g.
    # an exactly linear ramp) from faking a confirmed knee
    eps = 1e-12
    for idx, cand in enumerate(candidates):
        threshold = diff[cand] - spacing
        stop = candidates[idx + 1] if idx + 1 < len(candidates) else n
        for j in range(cand + 1, stop):
            if diff[j] < threshold - eps:
                return cand
    return None


def top_k(
    values: Mapping[str, float],
    k: int = 10,
    metric: str = "metric",
) -> TopKSelection:
    """Top k regions by value, ties broken by lexicographic region id.

    The knee of the full descending score curve is recorded alongside as
    ``elbow_k`` (interpreted as the number of regions above the bend).
    """
    if k > len(values):
        raise KTooLarge(f"k = {k} exceeds the {len(values)} scored regions")
    ranked = sorted(values.items(), key=lambda kv: (-kv[1], kv[0]))
    scores = [v for _, v in ranked]
    elbow = kneedle_elbow(scores) if len(scores) >= 3 else None
    return TopKSelection(
        metric=metric,
        k=k,
        members=[r for r, _ in ranked[:k]],
        elbow_k=elbow,
    )


@dataclass
class ProfileReport:
    """Per-group attribute means plus the group-difference test battery."""

    groups: list[str]
    table: dict[str, dict[str, float]]
    hsd_population: list[TestResult]
    g_tests: list[TestResult]


def profile_groups(
    selections: Sequence[TopKSelection],
    attrs: Mapping[str, RegionAttributes],
    alpha: float = 0.05,
    g_family_size: int | None = None,
) -> ProfileReport:
    """Profiles of the selected groups against the remaining regions.

    Each selection forms one group; "other" holds every attributed region
    in none of them. The table reports unweighted means of population,
    collapsed and six-class urbanicity shares, demographic shares, and
    employment/poverty rates. Population differences are tested pairwise
    with Tukey's HSD (already multiplicity-corrected); the categorical
    families (demographics, employed, poverty) are tested pairwise with
    G-tests on population-scaled count tables, Holm-corrected over all
    pairs x families (3 * C(3,2) = 9 in the two-selection case, unless
    ``g_family_size`` overrides the family size).
    """
    groups: dict[str, list[str]] = {}
    selected: set[str] = set()
    for sel in selections:
        for region in sel.members:
            if region not in attrs:
                raise MissingAttributes(f"no attributes for region {region!r}")
        groups[sel.metric] = list(sel.members)
        selected.update(sel.members)
    groups["other"] = sorted(set(attrs) - selected)

    demo_categories = sorted(
        {cat for attr in attrs.values() for cat in attr.demographics}
    )
    table: dict[str, dict[str, float]] = {}
    for label, members in groups.items():
        rows = [attrs[r] for r in members]
        if not rows:
            table[label] = {}
            continue
        entry = {
            "n": float(len(rows)),
            "population_mean": float(np.mean([a.population for a in rows])),
            "urban": float(np.mean([a.urban for a in rows])),
            "rural": float(np.mean([not a.urban for a in rows])),
            "employed": float(np.mean([a.employed for a in rows])),
            "poverty": float(np.mean([a.poverty for a in rows])),
        }
        for cls in URBANICITY_CLASSES:
            entry[f"urbanicity_{cls}"] = float(
                np.mean([a.urbanicity == cls for a in rows])
            )
        for cat in demo_categories:
            entry[cat] = float(np.mean([a.demographics.get(cat, 0.0) for a in rows]))
        table[label] = entry

    labels = [lbl for lbl, members in groups.items() if members]
    hsd_results: list[TestResult] = []
    if len(labels) >= 2 and all(len(groups[lbl]) >= 2 for lbl in labels):
        hsd_results = tukey_hsd(
            [[float(attrs[r].population) for r in groups[lbl]] for lbl in labels],
            labels=labels,
        )

    def counts(members: list[str], family: str) -> list[float]:
        rows = [attrs[r] for r in members]
        if family == "demographics":
            return [
                sum(a.demographics.get(cat, 0.0) * a.population for a in rows)
                for cat in demo_categories
            ]
        share = [getattr(a, family) for a in rows]
        inside = sum(s * a.population for s, a in zip(share, rows))
        total = sum(a.population for a in rows)
        return [inside, total - inside]

    g_results: list[TestResult] = []
    for a_lbl, b_lbl in combinations(labels, 2):
        for family in ("demographics", "employed", "poverty"):
            res = g_test([counts(groups[a_lbl], family), counts(groups[b_lbl], family)])
            res.method = "g_test"
            res.notes = f"{family}: {a_lbl} vs {b_lbl}"
            res.extra["pair"] = (a_lbl, b_lbl)
            res.extra["family"] = family
            g_results.append(res)
    apply_holm(g_results, alpha=alpha, n_comparisons=g_family_size)

    return ProfileReport(
        groups=list(groups),
        table=table,
        hsd_population=hsd_results,
        g_tests=g_results,
    )


@dataclass
class GroupDistanceReport:
    """Fitted journey-distance distributions per group plus pairwise tests."""

    distributions: dict[str, EstimatedDistribution]
    summaries: dict[str, DistributionSummary]
    mc_tests: list[TestResult]
    z_tests: list[TestResult]


def _group_sample(
    net: JourneyNetwork,
    members: set[str] | None,
    side: str,
    intervals: Mapping[tuple[str, str], DistanceInterval],
) -> CensoredSample:
    ivals = []
    weights = []
    for (u, v), w in net.weights.items():
        if u == v:
            continue
        if members is not None:
            anchor = v if side == "import" else u
            if anchor not in members:
                continue
        ivals.append(lookup_interval(intervals, u, v))
        weights.append(w)
    return CensoredSample(intervals=ivals, weights=weights)


def journey_distance_by_group(
    net: JourneyNetwork,
    selections: Sequence[TopKSelection],
    intervals: Mapping[tuple[str, str], DistanceInterval],
    n_per_rep: int = 500,
    reps: int = 100,
    seed: int = 0,
    alpha: float = 0.05,
    family_size: int | None = None,
) -> GroupDistanceReport:
    """Journey-distance distributions for selected groups versus all journeys.

    Import-side groups (ipc, authority) collect the discordant journeys
    INTO their members; export-side groups (opc, hub) the journeys FROM
    their members; "all" holds every discordant journey. Every group pair
    is compared with the Monte Carlo U-test and the Z-test for means,
    each family Holm-corrected over all pairs (C(5,2) = 10 with four
    selections) unless ``family_size`` overrides it.
    """
    samples: dict[str, CensoredSample] = {
        "all": _group_sample(net, None, "import", intervals)
    }
    for sel in selections:
        metric = sel.metric.lower()
        if metric in IMPORT_METRICS:
            side = "import"
        elif metric in EXPORT_METRICS:
            side = "export"
        else:
            raise ValueError(
                f"cannot infer journey side for metric {sel.metric!r}; "
                f"expected one of {sorted(IMPORT_METRICS | EXPORT_METRICS)}"
            )
        samples[sel.metric] = _group_sample(net, set(sel.members), side, intervals)

    distributions = {label: turnbull_fit(s) for label, s in samples.items()}
    summaries = {label: summarize(d) for label, d in distributions.items()}

    labels = list(samples)
    pairs = list(combinations(labels, 2))
    children = np.random.SeedSequence(seed).spawn(len(pairs))
    mc_tests: list[TestResult] = []
    z_tests: list[TestResult] = []
    for (a, b), child in zip(pairs, children):
        mc = mc_u_test(
            distributions[a], distributions[b], n_per_rep=n_per_rep, reps=reps,
            seed=child,
        )
        mc.extra["pair"] = (a, b)
        mc_tests.append(mc)
        zt = z_test_means(summaries[a], summaries[b])
        zt.extra["pair"] = (a, b)
        z_tests.append(zt)
    apply_holm(mc_tests, alpha=alpha, n_comparisons=family_size)
    apply_holm(z_tests, alpha=alpha, n_comparisons=family_size)
    return GroupDistanceReport(
        distributions=distributions,
        summaries=summaries,
        mc_tests=mc_tests,
        z_tests=z_tests,
    )


@dataclass
class BetaReport:
    """Pipeline results for one coverage threshold."""

    beta: float
    retained_regions: list[str]
    n_nodes: int
    n_edges: int
    nodes: set[str]
    edges: set[tuple[str, str]]
    regressions: dict[str, dict[str, float]]
    group_mean_km: dict[str, float] | None
    temporal_overall: dict[str, float] | None


def coverage_filter(
    attrs: Mapping[str, RegionAttributes], beta: float
) -> set[str]:
    """Regions whose minimum per-window coverage reaches ``beta``."""
    return {r for r, a in attrs.items() if a.min_coverage() >= beta}


def sensitivity_sweep(
    events: Sequence[JourneyEvent],
    attrs: Mapping[str, RegionAttributes],
    intervals: Mapping[tuple[str, str], DistanceInterval] | None = None,
    betas: Sequence[float] = (0.55, 0.65, 0.75, 0.85),
    k: int = 10,
    window_length: int = 1,
) -> list[BetaReport]:
    """Re-run the headline analyses at each coverage threshold.

    For every beta the regions whose minimum per-window coverage falls
    below it are dropped along with their events, and the degree
    regressions, per-group mean journey distances (when an interval table
    is supplied) and temporal correlation coefficients are recomputed.
    Raising beta can only shrink the network: the node and edge sets are
    verified to be nested across thresholds.
    """
    reports: list[BetaReport] = []
    for beta in betas:
        retained = coverage_filter(attrs, beta)
        kept_events = [
            ev for ev in events if ev.origin in retained and ev.destination in retained
        ]
        if not retained or not kept_events:
            raise EmptyAfterFilter(f"no regions or events survive beta = {beta}")
        net = build_network(kept_events)
        discordant = remove_self_loops(net)

        din = degree_vector(discordant, True, "in").values
        dout = degree_vector(discordant, True, "out").values
        nodes = list(discordant.nodes)
        regressions: dict[str, dict[str, float]] = {}
        if len(nodes) >= 3:
            fit = loglog_fit(
                [dout[u] + 1.0 for u in nodes], [din[u] for u in nodes]
            )
            regressions["in_vs_out"] = {"slope": fit.slope, "r_squared": fit.r_squared}
            scored = [u for u in nodes if u in attrs and attrs[u].population > 0]
            if len(scored) >= 3:
                pops = [float(attrs[u].population) for u in scored]
                for name, deg in (("out_vs_pop", dout), ("in_vs_pop", din)):
                    f = loglog_fit(pops, [deg[u] for u in scored])
                    regressions[name] = {"slope": f.slope, "r_squared": f.r_squared}

        group_means: dict[str, float] | None = None
        if intervals is not None and discordant.n_edges > 0:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ZeroPopulationWarning)
                ipc, opc = per_capita_metrics(discordant, attrs)
            scores = hits(net)
            group_means = {}
            selections = []
            for metric, values in (
                ("ipc", ipc),
                ("opc", opc),
                ("authority", scores.authority),
                ("hub", scores.hub),
            ):
                if values:
                    selections.append(
                        top_k(values, k=min(k, len(values)), metric=metric)
                    )
            for label, sample in [
                ("all", _group_sample(net, None, "import", intervals))
            ] + [
                (
                    sel.metric,
                    _group_sample(
                        net,
                        set(sel.members),
                        "import" if sel.metric in IMPORT_METRICS else "export",
                        intervals,
                    ),
                )
                for sel in selections
            ]:
                if sample.intervals:
                    group_means[label] = summarize(turnbull_fit(sample)).mean_km

        temporal_overall: dict[str, float] | None = None
        periods = {ev.period for ev in kept_events}
        if len(periods) > 1:
            series = slice_series(kept_events, window_length=window_length)
            if series.T >= 2:
                temporal_overall = {
                    direction: temporal_correlation(series, direction).overall
                    for direction in ("undirected", "in", "out")
                }

        reports.append(
            BetaReport(
                beta=beta,
                retained_regions=sorted(retained),
                n_nodes=net.n_nodes,
                n_edges=net.n_edges,
                nodes=set(net.nodes),
                edges=set(net.weights),
                regressions=regressions,
                group_mean_km=group_means,
                temporal_overall=temporal_overall,
            )
        )

    for a, b in combinations(reports, 2):
        lo, hi = (a, b) if a.beta <= b.beta else (b, a)
        if not (hi.nodes <= lo.nodes and hi.edges <= lo.edges):
            raise RuntimeError(
                f"subgraph property violated between beta {lo.beta} and {hi.beta}"
            )
    return reports
