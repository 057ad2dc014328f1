"""Synthetic journey datasets with known ground truth.

Regions are lat/lon grid squares, so every boundary-distance bound has a
closed-form check. Discordant journeys follow a gravity law (population
powers times exponential distance decay between region centroids), which
keeps the true journey-length distribution computable by enumerating the
finite origin-destination mixture.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import URBANICITY_CLASSES, RegionAttributes
from .errors import InvalidConfig
from .geo import GeoPoint, RegionBoundary, haversine
from .network import JourneyEvent


@dataclass
class GeneratorConfig:
    """Parameters of the synthetic journey generator."""

    n_regions: int = 6
    seed: int | None = None
    grid_cols: int | None = None
    cell_deg: float = 1.0
    origin_lat: float = 0.0
    origin_lon: float = 0.0
    pop_scale: float = 50_000.0
    pop_exponent: float = 1.5
    gravity_a: float = 1.0
    gravity_b: float = 1.0
    lambda_km: float = 100.0
    self_loop_share: float = 0.9
    windows: int = 2
    events_per_window: int = 100
    edge_persistence: float = 0.0
    planted_importers: tuple[int, ...] = ()
    planted_in_boost: float = 1.0
    planted_lambda_factor: float = 1.0
    coverage_dips: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        if self.seed is None:
            raise InvalidConfig("seed is mandatory")
        if self.n_regions < 2:
            raise InvalidConfig("need at least 2 regions")
        if self.lambda_km <= 0:
            raise InvalidConfig("lambda_km must be positive")
        for name in ("self_loop_share", "edge_persistence"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidConfig(f"{name} = {p} outside [0, 1]")
        if self.windows < 1 or self.events_per_window < 1:
            raise InvalidConfig("windows and events_per_window must be >= 1")
        for idx, window, value in self.coverage_dips:
            if not 0 <= idx < self.n_regions:
                raise InvalidConfig(f"coverage dip region index {idx} out of range")
            if not 0 <= window < self.windows:
                raise InvalidConfig(f"coverage dip window {window} out of range")
            if not 0.0 <= value <= 1.0:
                raise InvalidConfig(f"coverage dip value {value} outside [0, 1]")

    @property
    def cols(self) -> int:
        return self.grid_cols or math.ceil(math.sqrt(self.n_regions))

    def region_ids(self) -> list[str]:
        return [f"{10000 + i}" for i in range(self.n_regions)]


@dataclass
class SyntheticData:
    """In-memory generated dataset, plus writers for the ingest formats."""

    events: list[JourneyEvent]
    boundaries: dict[str, RegionBoundary]
    attributes: dict[str, RegionAttributes]
    coverage: dict[tuple[str, int], float]

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "events": out / "events.csv",
            "boundaries": out / "boundaries.geojson",
            "attributes": out / "attributes.csv",
            "coverage": out / "coverage.csv",
        }
        write_events_csv(self.events, paths["events"])
        write_boundaries_geojson(self.boundaries, paths["boundaries"])
        write_attributes_csv(self.attributes, paths["attributes"])
        write_coverage_csv(self.coverage, paths["coverage"])
        return paths


def _centroids(config: GeneratorConfig) -> dict[str, GeoPoint]:
    half = config.cell_deg / 2.0
    out = {}
    for i, rid in enumerate(config.region_ids()):
        row, col = divmod(i, config.cols)
        out[rid] = GeoPoint(
            config.origin_lat + row * config.cell_deg + half,
            config.origin_lon + col * config.cell_deg + half,
        )
    return out


def _boundaries(config: GeneratorConfig) -> dict[str, RegionBoundary]:
    out = {}
    for i, rid in enumerate(config.region_ids()):
        row, col = divmod(i, config.cols)
        lat0 = config.origin_lat + row * config.cell_deg
        lon0 = config.origin_lon + col * config.cell_deg
        c = config.cell_deg
        out[rid] = RegionBoundary(
            rid,
            [[
                GeoPoint(lat0, lon0),
                GeoPoint(lat0, lon0 + c),
                GeoPoint(lat0 + c, lon0 + c),
                GeoPoint(lat0 + c, lon0),
            ]],
        )
    return out


def _gravity_weights(
    config: GeneratorConfig, pops: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Ordered discordant pair weights and the matching distance vector."""
    ids = config.region_ids()
    centroids = _centroids(config)
    planted = {ids[i] for i in config.planted_importers}
    weights = []
    distances = []
    for i, u in enumerate(ids):
        for j, v in enumerate(ids):
            if u == v:
                continue
            d = haversine(centroids[u], centroids[v])
            lam = config.lambda_km
            boost = 1.0
            if v in planted:
                lam *= config.planted_lambda_factor
                boost = config.planted_in_boost
            weights.append(
                pops[i] ** config.gravity_a * pops[j] ** config.gravity_b
                * math.exp(-d / lam) * boost
            )
            distances.append(d)
    w = np.asarray(weights)
    return w / w.sum(), np.asarray(distances)


def expected_discordant_mean_km(config: GeneratorConfig) -> float:
    """Exact mean centroid distance of the discordant journey mixture."""
    pops = _populations(config)
    probs, dists = _gravity_weights(config, pops)
    return float(probs @ dists)


def _populations(config: GeneratorConfig) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    draws = rng.pareto(config.pop_exponent, config.n_regions) + 1.0
    return np.maximum((draws * config.pop_scale).astype(int), 1000)


def _urbanicity_by_rank(pops: np.ndarray) -> list[str]:
    """Urbanicity classes assigned by population rank (largest first)."""
    n = len(pops)
    shares = (0.10, 0.15, 0.15, 0.15, 0.20, 0.25)
    order = np.argsort(-pops, kind="stable")
    classes = [""] * n
    cursor = 0
    for cls, share in zip(URBANICITY_CLASSES, shares):
        count = max(1, round(share * n)) if cls != "noncore" else n - cursor
        for j in range(cursor, min(cursor + count, n)):
            classes[order[j]] = cls
        cursor = min(cursor + count, n)
    for j in range(cursor, n):
        classes[order[j]] = "noncore"
    return classes


def generate(config: GeneratorConfig) -> SyntheticData:
    """Deterministic synthetic dataset for the configured grid.

    Each window draws ``events_per_window`` events: a self-loop with the
    configured probability (region chosen proportionally to population),
    otherwise a discordant pair from the gravity mixture. With positive
    ``edge_persistence`` every discordant pair active in the previous
    window is re-emitted once with that probability, planting edge
    persistence. Events are aggregated per (origin, destination, window).
    """
    ids = config.region_ids()
    pops = _populations(config)
    probs, _ = _gravity_weights(config, pops)
    pairs = [(u, v) for u in ids for v in ids if u != v]
    pop_probs = pops / pops.sum()

    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))
    counts: dict[tuple[str, str, int], int] = {}
    previous_active: set[tuple[str, str]] = set()
    for window in range(config.windows):
        active: set[tuple[str, str]] = set()
        for _ in range(config.events_per_window):
            if rng.random() < config.self_loop_share:
                u = ids[rng.choice(len(ids), p=pop_probs)]
                key = (u, u, window)
            else:
                u, v = pairs[rng.choice(len(pairs), p=probs)]
                key = (u, v, window)
                active.add((u, v))
            counts[key] = counts.get(key, 0) + 1
        for u, v in sorted(previous_active):
            if rng.random() < config.edge_persistence:
                key = (u, v, window)
                counts[key] = counts.get(key, 0) + 1
                active.add((u, v))
        previous_active = active

    events = [
        JourneyEvent(origin=u, destination=v, period=t, count=c)
        for (u, v, t), c in sorted(counts.items())
    ]

    rng_attr = np.random.default_rng(np.random.SeedSequence([config.seed, 3]))
    urbanicity = _urbanicity_by_rank(pops)
    demo_cats = ("share_white", "share_black", "share_aian", "share_asian",
                 "share_nhpi", "share_hispanic")
    alphas = (5.0, 2.0, 0.5, 0.5, 0.2, 1.5)
    attributes: dict[str, RegionAttributes] = {}
    coverage: dict[tuple[str, int], float] = {}
    dips = {(ids[i], w): value for i, w, value in config.coverage_dips}
    for i, rid in enumerate(ids):
        shares = rng_attr.dirichlet(alphas)
        # round to 6 decimals without letting the sum creep past 1
        rounded = [round(float(s), 6) for s in shares]
        top = int(np.argmax(rounded))
        rounded[top] = round(1.0 - (sum(rounded) - rounded[top]), 6)
        cov = {w: dips.get((rid, w), 1.0) for w in range(config.windows)}
        attributes[rid] = RegionAttributes(
            region_id=rid,
            population=int(pops[i]),
            urbanicity=urbanicity[i],
            demographics=dict(zip(demo_cats, rounded)),
            employed=round(float(rng_attr.uniform(0.40, 0.60)), 6),
            poverty=round(float(rng_attr.uniform(0.05, 0.25)), 6),
            coverage=cov,
        )
        for w, value in cov.items():
            coverage[(rid, w)] = value

    return SyntheticData(
        events=events,
        boundaries=_boundaries(config),
        attributes=attributes,
        coverage=coverage,
    )


# -- writers in the ingest formats -------------------------------------------


def write_events_csv(events: list[JourneyEvent], path: str | Path) -> None:
    lines = ["origin_region,dest_region,period,count"]
    for ev in sorted(events, key=lambda e: (e.period, e.origin, e.destination)):
        lines.append(f"{ev.origin},{ev.destination},{ev.period},{ev.count}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_boundaries_geojson(
    boundaries: dict[str, RegionBoundary], path: str | Path
) -> None:
    features = []
    for rid in sorted(boundaries):
        rings = [
            [[p.lon, p.lat] for p in ring] for ring in boundaries[rid].rings
        ]
        features.append(
            {
                "type": "Feature",
                "properties": {"region_id": rid},
                "geometry": {"type": "Polygon", "coordinates": rings},
            }
        )
    doc = {"type": "FeatureCollection", "features": features}
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def write_attributes_csv(
    attributes: dict[str, RegionAttributes], path: str | Path
) -> None:
    cats = sorted({c for a in attributes.values() for c in a.demographics})
    header = ["region_id", "population", "urbanicity", "employed", "poverty"] + cats
    lines = [",".join(header)]
    for rid in sorted(attributes):
        a = attributes[rid]
        row = [
            rid,
            str(a.population),
            a.urbanicity,
            f"{a.employed:.6f}",
            f"{a.poverty:.6f}",
        ] + [f"{a.demographics.get(c, 0.0):.6f}" for c in cats]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_coverage_csv(
    coverage: dict[tuple[str, int], float], path: str | Path
) -> None:
    lines = ["region_id,window,coverage"]
    for (rid, window) in sorted(coverage):
        lines.append(f"{rid},{window},{coverage[(rid, window)]:.4f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
