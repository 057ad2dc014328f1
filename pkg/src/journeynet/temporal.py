"""Time-sliced network sequences and edge-persistence statistics.

Persistence of a node's edges between consecutive snapshots is measured by
the temporal correlation coefficient: for each step t -> t+1 the overlap
of the node's edge indicator rows, normalized by the geometric mean of its
snapshot degrees, averaged over the T-1 steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import TooFewWindows
from .geo import DistanceInterval, lookup_interval
from .network import JourneyEvent, JourneyNetwork, build_network
from .survival import CensoredSample, summarize, turnbull_fit


@dataclass
class NetworkSeries:
    """Ordered snapshots over a common node universe."""

    windows: list[JourneyNetwork]
    node_universe: tuple[str, ...]

    @property
    def T(self) -> int:
        return len(self.windows)

    def stacked_adjacency(self, include_self_loops: bool = False) -> np.ndarray:
        """(T, N, N) array of 0/1 adjacency matrices in universe order."""
        n = len(self.node_universe)
        idx = {u: i for i, u in enumerate(self.node_universe)}
        out = np.zeros((self.T, n, n))
        for t, net in enumerate(self.windows):
            for (u, v), w in net.weights.items():
                if u == v and not include_self_loops:
                    continue
                out[t, idx[u], idx[v]] = 1.0
        return out


@dataclass
class TemporalCorr:
    """Per-node and overall temporal correlation coefficients."""

    per_node: dict[str, float]
    overall: float
    direction: str  # "undirected", "in" or "out"


@dataclass
class WindowSummary:
    """Per-window self-loop share and discordant distance summaries."""

    window: int
    total_weight: int
    self_loop_share: float | None
    mean_km: float | None
    median_km: float | None


def slice_series(
    events: Iterable[JourneyEvent],
    window_length: int = 1,
    self_loops: bool = True,
) -> NetworkSeries:
    """Partition events into consecutive windows of ``window_length`` periods.

    Window w covers periods [min_period + w * L, min_period + (w+1) * L).
    Every window network shares the node universe of all retained events;
    empty windows yield edgeless networks over that universe.
    """
    events = [
        ev for ev in events if self_loops or ev.origin != ev.destination
    ]
    if not events:
        raise ValueError("slice_series requires at least one event")
    if window_length < 1:
        raise ValueError("window_length must be >= 1")
    periods = [ev.period for ev in events]
    first, last = min(periods), max(periods)
    n_windows = (last - first) // window_length + 1
    universe = tuple(
        sorted({ev.origin for ev in events} | {ev.destination for ev in events})
    )
    buckets: list[list[JourneyEvent]] = [[] for _ in range(n_windows)]
    for ev in events:
        buckets[(ev.period - first) // window_length].append(ev)
    windows = [
        JourneyNetwork(
            nodes=universe,
            weights=build_network(bucket).weights,
            period_label=w,
        )
        for w, bucket in enumerate(buckets)
    ]
    return NetworkSeries(windows=windows, node_universe=universe)


def temporal_correlation(
    series: NetworkSeries,
    direction: str = "undirected",
    include_self_loops: bool = False,
    skip_undefined: bool = False,
) -> TemporalCorr:
    """Edge-persistence coefficients for every node and their mean.

    ``direction='out'`` follows each node's outgoing rows, ``'in'`` its
    incoming columns, and ``'undirected'`` first symmetrizes each snapshot
    (an edge exists if it exists in either direction). A step where the
    node has no incident edge in one of the two snapshots has an undefined
    0/0 term; by default it contributes 0 and still divides by T-1, which
    penalizes intermittency, while ``skip_undefined=True`` averages over
    the defined terms only. Nodes with no defined term in any step are
    omitted, and the overall value averages the remaining nodes.
    """
    if series.T < 2:
        raise TooFewWindows(f"need >= 2 windows, got {series.T}")
    if direction not in ("undirected", "in", "out"):
        raise ValueError(f"unknown direction {direction!r}")
    a = series.stacked_adjacency(include_self_loops=include_self_loops)
    if direction == "undirected":
        a = np.maximum(a, a.transpose(0, 2, 1))
    elif direction == "in":
        a = a.transpose(0, 2, 1)
    # rows now hold the edge set each coefficient follows
    overlap = np.einsum("tij,tij->ti", a[:-1], a[1:])
    deg_t = a[:-1].sum(axis=2)
    deg_t1 = a[1:].sum(axis=2)
    denom = np.sqrt(deg_t * deg_t1)
    defined = denom > 0
    terms = np.zeros_like(denom)
    np.divide(overlap, denom, out=terms, where=defined)

    n_defined = defined.sum(axis=0)
    per_node: dict[str, float] = {}
    for i, node in enumerate(series.node_universe):
        if n_defined[i] == 0:
            continue
        if skip_undefined:
            gamma = float(terms[:, i].sum() / n_defined[i])
        else:
            gamma = float(terms[:, i].sum() / (series.T - 1))
        per_node[node] = gamma
    overall = float(np.mean(list(per_node.values()))) if per_node else 0.0
    return TemporalCorr(per_node=per_node, overall=overall, direction=direction)


def series_summaries(
    series: NetworkSeries,
    intervals: Mapping[tuple[str, str], DistanceInterval],
) -> list[WindowSummary]:
    """Self-loop share and discordant distance summaries per window.

    Distance summaries fit the interval-censored discordant edge weights
    of each window; they are None for windows without discordant events.
    Every discordant pair must be present in the interval table.
    """
    out: list[WindowSummary] = []
    for t, net in enumerate(series.windows):
        total = net.total_weight
        if total == 0:
            out.append(
                WindowSummary(
                    window=t,
                    total_weight=0,
                    self_loop_share=None,
                    mean_km=None,
                    median_km=None,
                )
            )
            continue
        self_w = net.self_loop_weight()
        mean_km = median_km = None
        discordant = [((u, v), w) for (u, v), w in net.weights.items() if u != v]
        if discordant:
            ivals = []
            weights = []
            for (u, v), w in discordant:
                ivals.append(lookup_interval(intervals, u, v))
                weights.append(w)
            fit = turnbull_fit(CensoredSample(intervals=ivals, weights=weights))
            summary = summarize(fit)
            mean_km = summary.mean_km
            median_km = summary.median_km
        out.append(
            WindowSummary(
                window=t,
                total_weight=total,
                self_loop_share=self_w / total,
                mean_km=mean_km,
                median_km=median_km,
            )
        )
    return out
