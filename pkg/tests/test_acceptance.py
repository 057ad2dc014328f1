"""Acceptance suite: one test per release criterion.

Each test prints a PASS line once its assertions hold, so a verbose run
doubles as the acceptance report. Tolerances are pinned here and nowhere
else.
"""

import json
import math
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from journeynet.analysis import (
    ZeroPopulationWarning,
    journey_distance_by_group,
    per_capita_metrics,
    sensitivity_sweep,
    top_k,
)
from journeynet.cli import run
from journeynet.geo import (
    EARTH_RADIUS_KM,
    DistanceInterval,
    GeoPoint,
    RegionBoundary,
    boundary_distance_bounds,
    haversine,
    interval_table,
)
from journeynet.network import JourneyNetwork, build_network, hits, reciprocity, remove_self_loops
from journeynet.stats import hamed_rao_trend, mann_kendall_trend, mc_u_test
from journeynet.survival import CensoredSample, summarize, turnbull_fit
from journeynet.synth import GeneratorConfig, generate
from journeynet.temporal import NetworkSeries, temporal_correlation

FIXTURE = Path(__file__).parent / "fixtures" / "fixture6"


def report(criterion: int, message: str) -> None:
    print(f"ACCEPTANCE {criterion} PASS: {message}")


def random_digraph(rng, n_max, self_loops=True, density=0.35):
    n = int(rng.integers(2, n_max + 1))
    labels = [f"{i:05d}" for i in range(n)]
    weights = {}
    for i in range(n):
        for j in range(n):
            if i == j and not self_loops:
                continue
            if rng.random() < density:
                weights[(labels[i], labels[j])] = int(rng.integers(1, 6))
    return JourneyNetwork(nodes=tuple(labels), weights=weights)


def test_criterion_1_hits_eigen_oracle():
    """Hub/authority vectors match the dense eigensolver on 50 digraphs."""
    start = time.monotonic()
    rng = np.random.default_rng(1001)
    checked = 0
    while checked < 50:
        net = random_digraph(rng, n_max=12, self_loops=False)
        if net.n_edges == 0:
            continue
        scores = hits(net, tol=1e-13, max_iter=20000)
        sub = remove_self_loops(net)
        a = sub.adjacency_matrix(include_self_loops=False)
        h = np.array([scores.hub[u] for u in sub.nodes])
        au = np.array([scores.authority[u] for u in sub.nodes])
        for matrix, vector in ((a @ a.T, h), (a.T @ a, au)):
            vals, vecs = np.linalg.eigh(matrix)
            top = vals >= vals.max() * (1 - 1e-9) - 1e-12
            projection = vecs[:, top] @ (vecs[:, top].T @ vector)
            assert np.linalg.norm(projection) > 1 - 1e-8
        checked += 1
    elapsed = time.monotonic() - start
    assert elapsed < 5.0
    report(1, f"50 digraphs, eigenspace cosine > 1-1e-8, {elapsed:.2f}s")


def test_criterion_2_reciprocity_brute_force():
    """Adjacency-formula reciprocity equals exhaustive edge-pair counting."""
    rng = np.random.default_rng(1002)
    checked = 0
    while checked < 100:
        net = random_digraph(rng, n_max=10)
        if net.n_edges == 0:
            continue
        edges = list(net.weights)
        mutual = sum(1 for (u, v) in edges if (v, u) in net.weights)
        assert reciprocity(net) == mutual / len(edges)
        checked += 1
    report(2, "100 digraphs, exact equality with edge-pair enumeration")


def test_criterion_3_turnbull_reduction_and_recovery():
    """Degenerate data reduce to the weighted eCDF; bracketed data recover
    the exponential mean."""
    start = time.monotonic()
    rng = np.random.default_rng(1003)
    points = rng.uniform(0, 300, 80)
    weights = rng.integers(1, 6, 80).tolist()
    fit = turnbull_fit(
        CensoredSample(
            intervals=[DistanceInterval(p, p) for p in points], weights=weights
        )
    )
    order = np.argsort(points)
    xs = points[order]
    cum = np.cumsum(np.asarray(weights, float)[order]) / sum(weights)
    eval_at = np.concatenate([[xs[0] - 1], xs, xs + 1e-7, [xs[-1] + 10]])
    sup_err = 0.0
    for d in eval_at:
        idx = np.searchsorted(xs, d, side="right") - 1
        expected = cum[idx] if idx >= 0 else 0.0
        sup_err = max(sup_err, abs(float(fit.cdf(d)) - expected))
    assert sup_err < 1e-8

    true_mean = 100.0
    draws = rng.exponential(true_mean, 200)
    intervals = [
        DistanceInterval(max(0.0, d - rng.uniform(0, 30)), d + rng.uniform(0, 30))
        for d in draws
    ]
    fitted_mean = summarize(turnbull_fit(CensoredSample(intervals=intervals))).mean_km
    assert abs(fitted_mean - true_mean) / true_mean < 0.15
    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    report(
        3,
        f"eCDF sup-norm {sup_err:.1e}, bracketed-exponential mean "
        f"{fitted_mean:.1f} km vs 100 km, {elapsed:.2f}s",
    )


def gamma_loops(a, mode):
    """Literal loop transcription of the persistence formulas."""
    T, n, _ = a.shape
    out = {}
    for i in range(n):
        total = 0.0
        defined = False
        for t in range(T - 1):
            num = d1 = d2 = 0.0
            for j in range(n):
                x1 = a[t, i, j] if mode != "in" else a[t, j, i]
                x2 = a[t + 1, i, j] if mode != "in" else a[t + 1, j, i]
                num += x1 * x2
                d1 += x1
                d2 += x2
            if d1 > 0 and d2 > 0:
                total += num / math.sqrt(d1 * d2)
                defined = True
        out[i] = (total / (T - 1), defined)
    return out


def test_criterion_4_temporal_transcription():
    """Per-node coefficients match direct formula loops within 1e-12."""
    rng = np.random.default_rng(1004)
    for _ in range(25):
        n = int(rng.integers(2, 7))
        T = int(rng.integers(2, 6))
        universe = tuple(f"{i:05d}" for i in range(n))
        windows = []
        for t in range(T):
            weights = {}
            for i in range(n):
                for j in range(n):
                    if i != j and rng.random() < 0.4:
                        weights[(universe[i], universe[j])] = 1
            windows.append(
                JourneyNetwork(nodes=universe, weights=weights, period_label=t)
            )
        series = NetworkSeries(windows=windows, node_universe=universe)
        stacked = series.stacked_adjacency()
        for direction in ("undirected", "in", "out"):
            arr = stacked
            if direction == "undirected":
                arr = np.maximum(stacked, stacked.transpose(0, 2, 1))
            expected = gamma_loops(arr, direction)
            corr = temporal_correlation(series, direction)
            for i, node in enumerate(universe):
                value, defined = expected[i]
                if defined:
                    got = corr.per_node[node]
                    assert abs(got - value) <= 1e-12
                    assert 0.0 <= got <= 1.0
                else:
                    assert node not in corr.per_node
    report(4, "25 random series, loop-evaluated coefficients match to 1e-12")


def test_criterion_5_test_calibration():
    """Null rejection rates: Monte Carlo U-test and Hamed-Rao trend test."""
    start = time.monotonic()
    rng = np.random.default_rng(1005)
    los = rng.uniform(0, 100, 60)
    dist = turnbull_fit(
        CensoredSample(
            intervals=[DistanceInterval(a, a + rng.uniform(0, 20)) for a in los]
        )
    )
    mc_rejections = sum(
        mc_u_test(dist, dist, seed=seed).p_value < 0.05 for seed in range(100)
    )
    assert mc_rejections <= 10

    n, rho = 50, 0.6
    hr_rejections = 0
    mk_rejections = 0
    ar_rng = np.random.default_rng(20)
    for _ in range(500):
        x = np.empty(n)
        x[0] = ar_rng.normal()
        for t in range(1, n):
            x[t] = rho * x[t - 1] + ar_rng.normal() * math.sqrt(1 - rho**2)
        hr_rejections += hamed_rao_trend(x).p_value < 0.05
        mk_rejections += mann_kendall_trend(x).p_value < 0.05
    assert hr_rejections / 500 <= 0.10
    assert hr_rejections < mk_rejections
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    report(
        5,
        f"mc null {mc_rejections}/100, Hamed-Rao {hr_rejections}/500 vs "
        f"MK {mk_rejections}/500, {elapsed:.1f}s",
    )


def test_criterion_6_planted_authority_recovery():
    """Generator plants authority-bound journeys at 2x mean distance; the
    pipeline recovers the ordering with both tests significant."""
    config = GeneratorConfig(
        n_regions=25,
        seed=606,
        cell_deg=0.3,
        lambda_km=22.0,
        self_loop_share=0.25,
        windows=1,
        events_per_window=20000,
        planted_importers=(0, 2, 4, 20, 24),
        planted_in_boost=6.0,
        planted_lambda_factor=6.0,
    )
    from journeynet.synth import _gravity_weights, _populations

    pops = _populations(config)
    probs, dists = _gravity_weights(config, pops)
    ids = config.region_ids()
    planted = {ids[i] for i in config.planted_importers}
    into = np.array([v in planted for u in ids for v in ids if u != v])
    mean_into = (probs[into] @ dists[into]) / probs[into].sum()
    mean_other = (probs[~into] @ dists[~into]) / probs[~into].sum()
    assert mean_into / mean_other >= 2.0  # the planted 2x premise, exactly

    data = generate(config)
    net = build_network(data.events)
    scores = hits(net)
    discordant = remove_self_loops(net)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroPopulationWarning)
        ipc, opc = per_capita_metrics(discordant, data.attributes)
    selections = [
        top_k(ipc, 5, "ipc"),
        top_k(opc, 5, "opc"),
        top_k(scores.authority, 5, "authority"),
        top_k(scores.hub, 5, "hub"),
    ]
    assert set(selections[2].members) == planted

    table = interval_table(data.boundaries)
    rep = journey_distance_by_group(net, selections, table, seed=99)
    assert len(rep.mc_tests) == 10 and len(rep.z_tests) == 10
    assert all(t.n_comparisons == 10 for t in rep.mc_tests + rep.z_tests)
    assert rep.summaries["authority"].mean_km > rep.summaries["all"].mean_km
    mc = next(t for t in rep.mc_tests if t.extra["pair"] == ("all", "authority"))
    zt = next(t for t in rep.z_tests if t.extra["pair"] == ("all", "authority"))
    assert mc.corrected_p < 0.01
    assert zt.corrected_p < 0.01
    report(
        6,
        f"authority mean {rep.summaries['authority'].mean_km:.1f} km > all "
        f"{rep.summaries['all'].mean_km:.1f} km; corrected p: mc {mc.corrected_p:.1e}, "
        f"z {zt.corrected_p:.1e}",
    )


def test_criterion_7_sensitivity_monotonicity():
    """Exact subgraph nesting over the beta sweep; the planted dips and
    only they are removed at 0.75."""
    config = GeneratorConfig(
        n_regions=12,
        seed=707,
        cell_deg=0.5,
        self_loop_share=0.4,
        windows=3,
        events_per_window=400,
        coverage_dips=((1, 2, 0.70), (4, 0, 0.60), (9, 1, 0.50)),
    )
    data = generate(config)
    ids = config.region_ids()
    dipped = {ids[1], ids[4], ids[9]}
    reports = sensitivity_sweep(
        data.events, data.attributes, betas=[0.55, 0.65, 0.75, 0.85]
    )
    by_beta = {r.beta: r for r in reports}
    assert set(by_beta[0.75].retained_regions) == set(ids) - dipped
    for lo, hi in zip(reports, reports[1:]):
        assert hi.nodes <= lo.nodes
        assert hi.edges <= lo.edges
    # the intermediate thresholds peel the dips off one at a time
    assert set(by_beta[0.55].retained_regions) == set(ids) - {ids[9]}
    assert set(by_beta[0.65].retained_regions) == set(ids) - {ids[9], ids[4]}
    report(7, "nested node/edge sets over betas; exactly the 3 dips removed at 0.75")


def _fixture_flags():
    return [
        "--events", str(FIXTURE / "events.csv"),
        "--boundaries", str(FIXTURE / "boundaries.geojson"),
        "--attributes", str(FIXTURE / "attributes.csv"),
        "--coverage", str(FIXTURE / "coverage.csv"),
    ]


def test_criterion_8_golden_reproducibility(tmp_path):
    """Every subcommand is byte-identical across two seeded runs on the
    bundled 6-region fixture."""
    invocations = [
        ("stats", []),
        ("degrees", []),
        ("hits", []),
        ("temporal", []),
        ("distances", []),
        ("profile", ["--seed", "7"]),
        ("sweep", ["--betas", "0.55,0.65,0.75,0.85"]),
    ]
    for sub, extra in invocations:
        out = tmp_path / sub
        argv = [sub, *_fixture_flags(), "--out", str(out), *extra]
        assert run(argv) == 0
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        assert run(argv) == 0
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second and first
    synth_argv = lambda d: [
        "synth", "--out", str(d), "--seed", "42", "--n-regions", "6",
        "--windows", "2", "--events-per-window", "100",
    ]
    assert run(synth_argv(tmp_path / "synth_a")) == 0
    assert run(synth_argv(tmp_path / "synth_b")) == 0
    for name in ("events.csv", "boundaries.geojson", "attributes.csv", "coverage.csv"):
        assert (tmp_path / "synth_a" / name).read_bytes() == (
            tmp_path / "synth_b" / name
        ).read_bytes()
    report(8, "8 subcommands byte-identical across repeated seeded runs")


def test_criterion_9_geometry_accuracy():
    """Antipodal haversine and the 1-degree equatorial gap lower bound."""
    pi_r = math.pi * EARTH_RADIUS_KM
    antipodal = haversine(GeoPoint(0.0, 0.0), GeoPoint(0.0, 180.0))
    assert abs(antipodal - pi_r) < 0.1

    def square(rid, lat0, lon0):
        return RegionBoundary(
            rid,
            [[
                GeoPoint(lat0, lon0),
                GeoPoint(lat0, lon0 + 1.0),
                GeoPoint(lat0 + 1.0, lon0 + 1.0),
                GeoPoint(lat0 + 1.0, lon0),
            ]],
        )

    bounds = boundary_distance_bounds(square("A", -0.5, 0.0), square("B", -0.5, 2.0))
    one_degree = pi_r / 180.0
    assert abs(bounds.lower_km - one_degree) < 0.5
    report(
        9,
        f"antipodal {antipodal:.4f} vs {pi_r:.4f} km; equatorial gap "
        f"{bounds.lower_km:.3f} vs {one_degree:.3f} km",
    )
