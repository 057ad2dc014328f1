"""Great-circle geometry over region boundaries.

Distances between regions are only known up to their boundary geometry, so
each region pair is summarized by a censoring interval: the shortest and
longest great-circle distance between any two points on the two boundaries,
approximated by a vertex-pair scan over densified polygon edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DegenerateBoundary, MissingInterval, MissingRegion

# IUGG mean Earth radius, km
EARTH_RADIUS_KM = 6371.0088

# Default maximum arc length of a densified boundary segment, km
DEFAULT_DENSIFY_STEP_KM = 5.0


@dataclass(frozen=True)
class GeoPoint:
    """A latitude/longitude pair in degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class DistanceInterval:
    """Censored journey length as a [lower, upper] kilometer pair."""

    lower_km: float
    upper_km: float

    def __post_init__(self):
        if not 0.0 <= self.lower_km <= self.upper_km:
            raise ValueError(
                f"invalid interval [{self.lower_km}, {self.upper_km}]"
            )
        if not math.isfinite(self.upper_km):
            raise ValueError("upper_km must be finite")

    @property
    def midpoint_km(self) -> float:
        return 0.5 * (self.lower_km + self.upper_km)


class RegionBoundary:
    """One region's boundary: one or more closed lat/lon rings.

    Rings are normalized so the first vertex equals the last. Island
    regions carry multiple rings; distance bounds are taken over the union
    of all rings' vertices.
    """

    def __init__(self, region_id: str, rings: Iterable[Iterable[GeoPoint]]):
        self.region_id = region_id
        self.rings: list[list[GeoPoint]] = []
        for ring in rings:
            ring = list(ring)
            if ring and ring[0] == ring[-1]:
                ring = ring[:-1]
            if len({(p.lat, p.lon) for p in ring}) < 3:
                raise DegenerateBoundary(
                    f"region {region_id!r}: ring with < 3 distinct vertices"
                )
            self.rings.append(ring + [ring[0]])
        if not self.rings:
            raise DegenerateBoundary(f"region {region_id!r}: no rings")
        self._dense_cache: dict[float, np.ndarray] = {}

    def vertices(self) -> list[GeoPoint]:
        """Distinct vertices over all rings (closing duplicates dropped)."""
        return [p for ring in self.rings for p in ring[:-1]]

    def densified_radians(self, step_km: float) -> np.ndarray:
        """(n, 2) array of [lat, lon] in radians after edge densification.

        Intermediate vertices are interpolated linearly in lat/lon so that
        no segment exceeds ``step_km`` of arc. Results are cached per step.
        """
        cached = self._dense_cache.get(step_km)
        if cached is not None:
            return cached
        pts: list[tuple[float, float]] = []
        for ring in self.rings:
            for a, b in zip(ring[:-1], ring[1:]):
                pts.append((a.lat, a.lon))
                if step_km > 0:
                    seg_km = haversine(a, b)
                    n_mid = int(math.ceil(seg_km / step_km)) - 1
                    for k in range(1, n_mid + 1):
                        t = k / (n_mid + 1)
                        pts.append(
                            (a.lat + t * (b.lat - a.lat), a.lon + t * (b.lon - a.lon))
                        )
        arr = np.radians(np.asarray(pts, dtype=float))
        self._dense_cache[step_km] = arr
        return arr


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in kilometers."""
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    s = (
        math.sin(0.5 * (lat2 - lat1)) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin(0.5 * (lon2 - lon1)) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))


def _pairwise_haversine_km(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Distance matrix (len(p), len(q)) between radian [lat, lon] arrays."""
    lat1 = p[:, 0][:, None]
    lat2 = q[:, 0][None, :]
    dlat = lat2 - lat1
    dlon = q[:, 1][None, :] - p[:, 1][:, None]
    s = np.sin(0.5 * dlat) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(0.5 * dlon) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(s)))


def boundary_distance_bounds(
    a: RegionBoundary,
    b: RegionBoundary,
    step_km: float = DEFAULT_DENSIFY_STEP_KM,
) -> DistanceInterval:
    """Min/max great-circle distance between two region boundaries.

    The scan runs over all vertex pairs after densifying edges to at most
    ``step_km`` of arc, which approximates the continuous boundary-to-
    boundary minimum. The maximum (the region-pair diameter) serves as the
    conservative upper censoring bound.
    """
    pa = a.densified_radians(step_km)
    pb = b.densified_radians(step_km)
    d = _pairwise_haversine_km(pa, pb)
    return DistanceInterval(lower_km=float(d.min()), upper_km=float(d.max()))


def pair_key(a: str, b: str) -> tuple[str, str]:
    """Canonical unordered key for a region pair."""
    return (a, b) if a <= b else (b, a)


def interval_table(
    boundaries: Mapping[str, RegionBoundary],
    pairs: Iterable[tuple[str, str]] | None = None,
    step_km: float = DEFAULT_DENSIFY_STEP_KM,
) -> dict[tuple[str, str], DistanceInterval]:
    """Distance intervals for the requested region pairs.

    Keys are canonical unordered pairs (see :func:`pair_key`). When
    ``pairs`` is None, all distinct unordered pairs are computed. Results
    are deterministic regardless of request order.
    """
    if pairs is None:
        ids = sorted(boundaries)
        pairs = [(u, v) for i, u in enumerate(ids) for v in ids[i + 1 :]]
    table: dict[tuple[str, str], DistanceInterval] = {}
    for u, v in pairs:
        for rid in (u, v):
            if rid not in boundaries:
                raise MissingRegion(f"no boundary for region {rid!r}")
        key = pair_key(u, v)
        if key not in table:
            table[key] = boundary_distance_bounds(
                boundaries[u], boundaries[v], step_km=step_km
            )
    return table


def lookup_interval(
    table: Mapping[tuple[str, str], DistanceInterval], a: str, b: str
) -> DistanceInterval:
    """Symmetric lookup into an interval table."""
    try:
        return table[pair_key(a, b)]
    except KeyError:
        raise MissingInterval(f"no distance interval for pair ({a!r}, {b!r})") from None
