import math

import numpy as np
import pytest

from journeynet.errors import MissingInterval, TooFewWindows
from journeynet.geo import DistanceInterval
from journeynet.network import JourneyEvent, JourneyNetwork, build_network
from journeynet.temporal import (
    NetworkSeries,
    series_summaries,
    slice_series,
    temporal_correlation,
)


def series_from_snapshots(snapshots, universe):
    """snapshots: list of dict (u, v) -> weight over a shared universe."""
    windows = [
        JourneyNetwork(nodes=tuple(sorted(universe)), weights=dict(s), period_label=t)
        for t, s in enumerate(snapshots)
    ]
    return NetworkSeries(windows=windows, node_universe=tuple(sorted(universe)))


def gamma_oracle(stacked, direction):
    """Direct loop transcription of the per-node persistence formulas.

    For each step t, the numerator counts edges of node i present in both
    snapshot t and t+1; the denominator is the geometric mean of the two
    snapshot degrees. Undefined 0/0 terms contribute 0; the average always
    divides by T - 1.
    """
    T, n, _ = stacked.shape
    a = stacked
    out = {}
    for i in range(n):
        total = 0.0
        any_defined = False
        for t in range(T - 1):
            num = 0.0
            d1 = 0.0
            d2 = 0.0
            for j in range(n):
                if direction == "out" or direction == "undirected":
                    x1, x2 = a[t, i, j], a[t + 1, i, j]
                else:
                    x1, x2 = a[t, j, i], a[t + 1, j, i]
                num += x1 * x2
                d1 += x1
                d2 += x2
            if d1 > 0 and d2 > 0:
                total += num / math.sqrt(d1 * d2)
                any_defined = True
        out[i] = (total / (T - 1), any_defined)
    return out


class TestSliceSeries:
    def test_single_window(self):
        events = [JourneyEvent("A", "B", 3), JourneyEvent("B", "A", 3)]
        series = slice_series(events)
        assert series.T == 1

    def test_three_windows_match_per_window_tallies(self):
        rng = np.random.default_rng(2)
        regions = ["00001", "00002", "00003"]
        events = [
            JourneyEvent(
                regions[rng.integers(0, 3)],
                regions[rng.integers(0, 3)],
                int(rng.integers(0, 3)),
            )
            for _ in range(30)
        ]
        series = slice_series(events, window_length=1)
        assert series.T == 3
        for t, net in enumerate(series.windows):
            expected = build_network([ev for ev in events if ev.period == t])
            assert net.weights == expected.weights

    def test_window_length_halves_count(self):
        events = [JourneyEvent("A", "B", p) for p in range(8)]
        assert slice_series(events, window_length=1).T == 8
        assert slice_series(events, window_length=2).T == 4

    def test_empty_windows_are_edgeless(self):
        events = [JourneyEvent("A", "B", 0), JourneyEvent("A", "B", 4)]
        series = slice_series(events, window_length=1)
        assert series.T == 5
        assert series.windows[2].n_edges == 0
        assert series.windows[2].nodes == ("A", "B")


class TestTemporalCorrelation:
    def test_identical_snapshots(self):
        snap = {("A", "B"): 1, ("B", "C"): 2}
        series = series_from_snapshots([snap, snap, snap], {"A", "B", "C"})
        for direction in ("undirected", "in", "out"):
            corr = temporal_correlation(series, direction)
            assert corr.overall == pytest.approx(1.0)
            for v in corr.per_node.values():
                assert v == pytest.approx(1.0)

    def test_disjoint_snapshots(self):
        series = series_from_snapshots(
            [{("A", "B"): 1}, {("C", "D"): 1}], {"A", "B", "C", "D"}
        )
        corr = temporal_correlation(series, "undirected")
        assert corr.overall == 0.0

    def test_loop_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            n = int(rng.integers(2, 7))
            T = int(rng.integers(2, 6))
            universe = [f"{i:05d}" for i in range(n)]
            snaps = []
            for _t in range(T):
                snap = {}
                for i in range(n):
                    for j in range(n):
                        if i != j and rng.random() < 0.35:
                            snap[(universe[i], universe[j])] = 1
                snaps.append(snap)
            series = series_from_snapshots(snaps, universe)
            stacked = series.stacked_adjacency()
            for direction in ("in", "out", "undirected"):
                arr = stacked
                if direction == "undirected":
                    arr = np.maximum(stacked, stacked.transpose(0, 2, 1))
                expected = gamma_oracle(arr, direction)
                corr = temporal_correlation(series, direction)
                for i, node in enumerate(series.node_universe):
                    value, defined = expected[i]
                    if defined:
                        assert corr.per_node[node] == pytest.approx(value, abs=1e-12)
                        assert 0.0 <= corr.per_node[node] <= 1.0
                    else:
                        assert node not in corr.per_node

    def test_too_few_windows(self):
        series = series_from_snapshots([{("A", "B"): 1}], {"A", "B"})
        with pytest.raises(TooFewWindows):
            temporal_correlation(series)

    def test_undirected_equals_directed_on_symmetric_series(self):
        snaps = [
            {("A", "B"): 1, ("B", "A"): 1, ("B", "C"): 1, ("C", "B"): 1},
            {("A", "B"): 1, ("B", "A"): 1},
            {("B", "C"): 2, ("C", "B"): 2},
        ]
        series = series_from_snapshots(snaps, {"A", "B", "C"})
        und = temporal_correlation(series, "undirected")
        inn = temporal_correlation(series, "in")
        out = temporal_correlation(series, "out")
        assert und.per_node == inn.per_node == out.per_node

    def test_reversal_swaps_in_out(self):
        rng = np.random.default_rng(21)
        universe = [f"{i:05d}" for i in range(5)]
        snaps = []
        for _ in range(4):
            snap = {}
            for i in range(5):
                for j in range(5):
                    if i != j and rng.random() < 0.3:
                        snap[(universe[i], universe[j])] = 1
            snaps.append(snap)
        series = series_from_snapshots(snaps, universe)
        rev = series_from_snapshots(
            [{(v, u): w for (u, v), w in s.items()} for s in snaps], universe
        )
        c_in = temporal_correlation(series, "in")
        c_out = temporal_correlation(rev, "out")
        assert c_in.per_node == c_out.per_node

    def test_duplicated_final_snapshot_terms(self):
        # appending a copy of the final snapshot adds a persistence term
        # equal to 1 for every node active in that snapshot
        snaps = [{("A", "B"): 1}, {("B", "C"): 1, ("A", "B"): 1}]
        universe = {"A", "B", "C"}
        base = series_from_snapshots(snaps, universe)
        extended = series_from_snapshots(snaps + [snaps[-1]], universe)
        gb = temporal_correlation(base, "out")
        ge = temporal_correlation(extended, "out")
        # A sends edges in every snapshot: its term sum grows by exactly 1
        before = gb.per_node["A"] * (base.T - 1)
        after = ge.per_node["A"] * (extended.T - 1)
        assert after == pytest.approx(before + 1.0, abs=1e-12)
        # B only becomes active in the final snapshot: no defined term in
        # the base series, a single perfect-persistence term afterwards
        assert "B" not in gb.per_node
        assert ge.per_node["B"] == pytest.approx(1.0 / (extended.T - 1))

    def test_self_loops_excluded_by_default(self):
        snaps = [{("A", "A"): 1, ("A", "B"): 1}, {("A", "A"): 1, ("A", "B"): 1}]
        series = series_from_snapshots(snaps, {"A", "B"})
        with_loops = temporal_correlation(series, "out", include_self_loops=True)
        without = temporal_correlation(series, "out")
        assert without.per_node["A"] == pytest.approx(1.0)
        assert with_loops.per_node["A"] == pytest.approx(1.0)
        # the loop only matters when it breaks persistence
        snaps2 = [{("A", "A"): 1, ("A", "B"): 1}, {("A", "B"): 1}]
        series2 = series_from_snapshots(snaps2, {"A", "B"})
        w2 = temporal_correlation(series2, "out", include_self_loops=True)
        wo2 = temporal_correlation(series2, "out")
        assert wo2.per_node["A"] == pytest.approx(1.0)
        assert w2.per_node["A"] == pytest.approx(1.0 / math.sqrt(2.0))


class TestSeriesSummaries:
    def make_intervals(self):
        return {
            ("A", "B"): DistanceInterval(10.0, 10.0),
            ("A", "C"): DistanceInterval(50.0, 50.0),
        }

    def test_only_self_loops(self):
        series = series_from_snapshots([{("A", "A"): 3}], {"A"})
        rows = series_summaries(series, {})
        assert rows[0].self_loop_share == 1.0
        assert rows[0].mean_km is None and rows[0].median_km is None

    def test_monotone_share(self):
        snaps = [
            {("A", "A"): 1, ("A", "B"): 3},
            {("A", "A"): 3, ("A", "B"): 1},
        ]
        series = series_from_snapshots(snaps, {"A", "B"})
        rows = series_summaries(series, self.make_intervals())
        assert rows[0].self_loop_share == pytest.approx(0.25)
        assert rows[1].self_loop_share == pytest.approx(0.75)
        assert rows[0].mean_km == pytest.approx(10.0)

    def test_missing_interval(self):
        series = series_from_snapshots([{("A", "Z"): 1}], {"A", "Z"})
        with pytest.raises(MissingInterval):
            series_summaries(series, self.make_intervals())

    def test_weighted_distance_mix(self):
        snaps = [{("A", "B"): 3, ("A", "C"): 1}]
        series = series_from_snapshots(snaps, {"A", "B", "C"})
        rows = series_summaries(series, self.make_intervals())
        assert rows[0].mean_km == pytest.approx(0.75 * 10 + 0.25 * 50)

    def test_constant_generator_share_series_has_no_trend(self):
        from journeynet.stats import hamed_rao_trend
        from journeynet.synth import GeneratorConfig, generate

        data = generate(
            GeneratorConfig(
                n_regions=9,
                seed=31,
                self_loop_share=0.5,
                windows=8,
                events_per_window=400,
            )
        )
        series = slice_series(data.events, window_length=1)
        shares = []
        for net in series.windows:
            total = net.total_weight
            shares.append(net.self_loop_weight() / total)
        res = hamed_rao_trend(shares)
        assert res.p_value > 0.05
