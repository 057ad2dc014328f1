"""Weighted directed journey networks and their static metrics.

A node is a region; a directed edge (u, v) carries the number of journeys
that started in u and ended in v. Self-loops (u == v) are permitted and
represent events inside the home region; edges with u != v are the
geographically discordant journeys.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptyNetwork, UnknownRegion


@dataclass(frozen=True)
class JourneyEvent:
    """One aggregated origin-destination record."""

    origin: str
    destination: str
    period: int
    count: int = 1

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")


@dataclass(frozen=True)
class JourneyNetwork:
    """Immutable weighted directed graph over region ids.

    ``nodes`` is sorted; ``weights`` maps (origin, destination) to a
    strictly positive integer. The 0/1 adjacency is derived on demand.
    """

    nodes: tuple[str, ...]
    weights: dict[tuple[str, str], int] = field(default_factory=dict)
    period_label: int | None = None

    def __post_init__(self):
        node_set = set(self.nodes)
        for (u, v), w in self.weights.items():
            if u not in node_set or v not in node_set:
                raise UnknownRegion(f"edge ({u!r}, {v!r}) endpoint not in node set")
            if w <= 0:
                raise ValueError(f"edge ({u!r}, {v!r}) has non-positive weight {w}")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> int:
        return sum(self.weights.values())

    def node_index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.nodes)}

    def weight_matrix(self) -> np.ndarray:
        """Dense weight matrix in node order."""
        idx = self.node_index()
        w = np.zeros((self.n_nodes, self.n_nodes))
        for (u, v), c in self.weights.items():
            w[idx[u], idx[v]] = c
        return w

    def adjacency_matrix(self, include_self_loops: bool = True) -> np.ndarray:
        """Dense 0/1 adjacency in node order."""
        a = (self.weight_matrix() > 0).astype(float)
        if not include_self_loops:
            np.fill_diagonal(a, 0.0)
        return a

    def self_loop_weight(self) -> int:
        return sum(w for (u, v), w in self.weights.items() if u == v)


@dataclass
class DegreeVector:
    """Per-node degree values for one degree flavor."""

    values: dict[str, float]
    weighted: bool
    direction: str  # "in" or "out"
    self_loops_included: bool


@dataclass
class HitsScores:
    """Converged hub and authority scores (each L2-normalized)."""

    hub: dict[str, float]
    authority: dict[str, float]
    iterations: int
    converged: bool


@dataclass
class BasicStats:
    """Structural summary of one journey network."""

    empty: bool
    n_nodes: int
    n_edges: int
    total_weight: int
    max_weighted_in: float
    max_weighted_out: float
    mean_weighted_in: float
    mean_weighted_out: float
    max_unweighted_in: float
    max_unweighted_out: float
    mean_unweighted_in: float
    mean_unweighted_out: float
    reciprocity: float
    self_loop_weight_share: float
    adjacent_discordant_share: float | None = None


def build_network(
    events: Iterable[JourneyEvent],
    period_filter: int | None = None,
    known_regions: set[str] | None = None,
    extra_nodes: Iterable[str] = (),
) -> JourneyNetwork:
    """Aggregate events into a journey network.

    ``period_filter`` keeps only events in that window. ``known_regions``
    (when given) makes unknown endpoints an error. ``extra_nodes`` adds
    regions to the node set even when they have no incident event, which
    is how a coverage-filtered node universe is supplied.
    """
    weights: dict[tuple[str, str], int] = {}
    nodes: set[str] = set(extra_nodes)
    for ev in events:
        if known_regions is not None:
            for rid in (ev.origin, ev.destination):
                if rid not in known_regions:
                    raise UnknownRegion(f"event references unknown region {rid!r}")
        if period_filter is not None and ev.period != period_filter:
            continue
        key = (ev.origin, ev.destination)
        weights[key] = weights.get(key, 0) + ev.count
        nodes.add(ev.origin)
        nodes.add(ev.destination)
    return JourneyNetwork(
        nodes=tuple(sorted(nodes)), weights=weights, period_label=period_filter
    )


def remove_self_loops(net: JourneyNetwork) -> JourneyNetwork:
    """Copy of the network without self-loop edges.

    Nodes left with no incident edge disappear, so a region whose only
    journey activity was internal drops out of the discordant network.
    """
    weights = {(u, v): w for (u, v), w in net.weights.items() if u != v}
    nodes = sorted({u for (u, v) in weights} | {v for (u, v) in weights})
    return JourneyNetwork(
        nodes=tuple(nodes), weights=weights, period_label=net.period_label
    )


def degree_vector(
    net: JourneyNetwork,
    weighted: bool,
    direction: str,
    include_self_loops: bool = False,
) -> DegreeVector:
    """Weighted or unweighted in/out degrees for every node.

    With ``include_self_loops=False`` (the default) a self-loop counts
    toward neither the in- nor the out-degree, so degrees measure journeys
    exchanged with other regions only.
    """
    if direction not in ("in", "out"):
        raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")
    values = {u: 0.0 for u in net.nodes}
    for (u, v), w in net.weights.items():
        if u == v and not include_self_loops:
            continue
        node = v if direction == "in" else u
        values[node] += w if weighted else 1.0
    return DegreeVector(
        values=values,
        weighted=weighted,
        direction=direction,
        self_loops_included=include_self_loops,
    )


def reciprocity(net: JourneyNetwork, include_self_loops: bool = True) -> float:
    """Fraction of directed edges whose reverse edge also exists.

    Computed on the 0/1 adjacency: sum_ij A_ij A_ji / sum_ij A_ij. With
    ``include_self_loops=True`` a self-loop contributes one reciprocal
    edge (its own reverse); the flag removes the diagonal from both sums.
    """
    num = 0
    den = 0
    edges = set(net.weights)
    for u, v in edges:
        if u == v and not include_self_loops:
            continue
        den += 1
        if (v, u) in edges:
            num += 1
    if den == 0:
        raise EmptyNetwork("reciprocity undefined on a network with no edges")
    return num / den


def hits(
    net: JourneyNetwork,
    tol: float = 1e-10,
    max_iter: int = 1000,
) -> HitsScores:
    """Hub and authority scores via iterative update and L2 normalization.

    Scores start at 1. Each round recomputes every hub score as the sum of
    the authority scores of its out-neighbors and every authority score as
    the sum of the hub scores of its in-neighbors, then rescales both
    vectors to unit Euclidean norm. Self-loops are removed before scoring,
    so the scores rank regions by their discordant import/export roles.
    Hub scores converge to the principal eigenvector of A A^T and
    authority scores to that of A^T A.
    """
    discordant = remove_self_loops(net)
    if discordant.n_edges == 0:
        raise EmptyNetwork("hits requires at least one non-self-loop edge")
    a_mat = discordant.adjacency_matrix(include_self_loops=False)
    n = discordant.n_nodes
    h = np.ones(n)
    a = np.ones(n)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        h_new = a_mat @ a
        a_new = a_mat.T @ h
        h_new /= np.linalg.norm(h_new)
        a_new /= np.linalg.norm(a_new)
        delta = max(np.max(np.abs(h_new - h)), np.max(np.abs(a_new - a)))
        h, a = h_new, a_new
        if delta < tol:
            converged = True
            break
    hub = {u: float(h[i]) for i, u in enumerate(discordant.nodes)}
    authority = {u: float(a[i]) for i, u in enumerate(discordant.nodes)}
    return HitsScores(
        hub=hub, authority=authority, iterations=iterations, converged=converged
    )


def summary_stats(
    net: JourneyNetwork,
    adjacency: set[tuple[str, str]] | None = None,
) -> BasicStats:
    """Structural summary of the network as given.

    Degrees here count every edge present, self-loops included, so the
    summary describes whichever network variant it receives. When a
    geographic adjacency set is supplied (unordered region pairs), the
    share of discordant weight between adjacent regions is reported.
    """
    if net.n_edges == 0:
        return BasicStats(
            empty=True,
            n_nodes=net.n_nodes,
            n_edges=0,
            total_weight=0,
            max_weighted_in=0.0,
            max_weighted_out=0.0,
            mean_weighted_in=0.0,
            mean_weighted_out=0.0,
            max_unweighted_in=0.0,
            max_unweighted_out=0.0,
            mean_unweighted_in=0.0,
            mean_unweighted_out=0.0,
            reciprocity=0.0,
            self_loop_weight_share=0.0,
        )

    def _vals(weighted: bool, direction: str) -> np.ndarray:
        dv = degree_vector(net, weighted, direction, include_self_loops=True)
        return np.array([dv.values[u] for u in net.nodes])

    w_in, w_out = _vals(True, "in"), _vals(True, "out")
    u_in, u_out = _vals(False, "in"), _vals(False, "out")

    adjacent_share: float | None = None
    if adjacency is not None:
        adj = {tuple(sorted(p)) for p in adjacency}
        discordant_w = 0
        adjacent_w = 0
        for (u, v), w in net.weights.items():
            if u == v:
                continue
            discordant_w += w
            if tuple(sorted((u, v))) in adj:
                adjacent_w += w
        adjacent_share = adjacent_w / discordant_w if discordant_w else None

    total = net.total_weight
    return BasicStats(
        empty=False,
        n_nodes=net.n_nodes,
        n_edges=net.n_edges,
        total_weight=total,
        max_weighted_in=float(w_in.max()),
        max_weighted_out=float(w_out.max()),
        mean_weighted_in=float(w_in.mean()),
        mean_weighted_out=float(w_out.mean()),
        max_unweighted_in=float(u_in.max()),
        max_unweighted_out=float(u_out.max()),
        mean_unweighted_in=float(u_in.mean()),
        mean_unweighted_out=float(u_out.mean()),
        reciprocity=reciprocity(net),
        self_loop_weight_share=net.self_loop_weight() / total,
        adjacent_discordant_share=adjacent_share,
    )
