"""Parsing, validation, and coverage-based exclusion of input files.

All inputs are UTF-8 CSV with mandatory headers, except boundaries, which
may also be a geographic JSON feature collection. See FORMATS.md for one
worked example row of every file.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import URBANICITY_CLASSES, RegionAttributes
from .errors import IntegrityError, ParseError
from .geo import GeoPoint, RegionBoundary
from .network import JourneyEvent


@dataclass
class Provenance:
    """Row accounting for one load: parsed = retained + excluded + merged."""

    paths: dict[str, str]
    rows_parsed: dict[str, int]
    events_retained: int = 0
    events_excluded: int = 0
    events_merged: int = 0
    excluded_regions: dict[str, str] = field(default_factory=dict)
    exclusion_log: list[str] = field(default_factory=list)


@dataclass
class Dataset:
    """Validated inputs with referential integrity."""

    events: list[JourneyEvent]
    boundaries: dict[str, RegionBoundary]
    attributes: dict[str, RegionAttributes]
    beta: float
    provenance: Provenance


@dataclass
class ValidationReport:
    """Soft findings that do not block a load."""

    orphan_regions: list[str]
    zero_population_regions: list[str]
    share_sum_violations: list[str]
    merged_duplicates: int

    @property
    def clean(self) -> bool:
        return not (
            self.orphan_regions
            or self.zero_population_regions
            or self.share_sum_violations
            or self.merged_duplicates
        )


def _float_cell(path, row_no, column, value, lo=None, hi=None) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ParseError(str(path), row_no, column, f"not a number: {value!r}") from None
    if (lo is not None and x < lo) or (hi is not None and x > hi):
        raise ParseError(str(path), row_no, column, f"{x} outside [{lo}, {hi}]")
    return x


def _int_cell(path, row_no, column, value, minimum=None) -> int:
    try:
        x = int(value)
    except (TypeError, ValueError):
        raise ParseError(str(path), row_no, column, f"not an integer: {value!r}") from None
    if minimum is not None and x < minimum:
        raise ParseError(str(path), row_no, column, f"{x} < {minimum}")
    return x


def _read_rows(path: Path, required: list[str]) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise ParseError(str(path), 1, column, "missing required column")
        return list(reader)


def _check_region_id(path, row_no, rid: str, fips_mode: bool) -> str:
    rid = (rid or "").strip()
    if not rid:
        raise ParseError(str(path), row_no, "region_id", "empty region id")
    if fips_mode and not (len(rid) == 5 and rid.isdigit()):
        raise ParseError(
            str(path), row_no, "region_id", f"{rid!r} is not a 5-digit FIPS code"
        )
    return rid


def load_events(path: str | Path, fips_mode: bool = False) -> list[JourneyEvent]:
    """Events CSV: origin_region, dest_region, period, count."""
    path = Path(path)
    rows = _read_rows(path, ["origin_region", "dest_region", "period", "count"])
    events = []
    for i, row in enumerate(rows, start=2):
        origin = _check_region_id(path, i, row["origin_region"], fips_mode)
        dest = _check_region_id(path, i, row["dest_region"], fips_mode)
        period = _int_cell(path, i, "period", row["period"])
        count = _int_cell(path, i, "count", row["count"], minimum=1)
        events.append(JourneyEvent(origin, dest, period, count))
    return events


def _boundary_from_rings(path, feature_no, rid, rings_latlon) -> RegionBoundary:
    rings = []
    for ring in rings_latlon:
        points = []
        for lat, lon in ring:
            if not -90.0 <= lat <= 90.0:
                raise ParseError(str(path), feature_no, "lat", f"{lat} outside [-90, 90]")
            if not -180.0 <= lon <= 180.0:
                raise ParseError(
                    str(path), feature_no, "lon", f"{lon} outside [-180, 180]"
                )
            points.append(GeoPoint(lat, lon))
        rings.append(points)
    return RegionBoundary(rid, rings)


def load_boundaries(path: str | Path, fips_mode: bool = False) -> dict[str, RegionBoundary]:
    """Boundary geometry from GeoJSON (.json/.geojson) or long-format CSV."""
    path = Path(path)
    if path.suffix.lower() in (".json", ".geojson"):
        return _load_boundaries_geojson(path, fips_mode)
    return _load_boundaries_csv(path, fips_mode)


def _load_boundaries_geojson(path: Path, fips_mode: bool) -> dict[str, RegionBoundary]:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(str(path), exc.lineno, "-", f"invalid JSON: {exc.msg}") from None
    out: dict[str, RegionBoundary] = {}
    for i, feature in enumerate(doc.get("features", []), start=1):
        props = feature.get("properties") or {}
        rid = _check_region_id(path, i, str(props.get("region_id", "")), fips_mode)
        geom = feature.get("geometry") or {}
        gtype = geom.get("type")
        coords = geom.get("coordinates", [])
        if gtype == "Polygon":
            polygons = [coords]
        elif gtype == "MultiPolygon":
            polygons = coords
        else:
            raise ParseError(str(path), i, "geometry", f"unsupported type {gtype!r}")
        # geographic JSON stores lon-lat order
        rings = [
            [(pt[1], pt[0]) for pt in ring] for poly in polygons for ring in poly
        ]
        out[rid] = _boundary_from_rings(path, i, rid, rings)
    return out


def _load_boundaries_csv(path: Path, fips_mode: bool) -> dict[str, RegionBoundary]:
    rows = _read_rows(path, ["region_id", "ring_index", "vertex_index", "lat", "lon"])
    staged: dict[str, dict[int, list[tuple[int, float, float]]]] = {}
    for i, row in enumerate(rows, start=2):
        rid = _check_region_id(path, i, row["region_id"], fips_mode)
        ring = _int_cell(path, i, "ring_index", row["ring_index"], minimum=0)
        vertex = _int_cell(path, i, "vertex_index", row["vertex_index"], minimum=0)
        lat = _float_cell(path, i, "lat", row["lat"], -90.0, 90.0)
        lon = _float_cell(path, i, "lon", row["lon"], -180.0, 180.0)
        staged.setdefault(rid, {}).setdefault(ring, []).append((vertex, lat, lon))
    out = {}
    for rid, rings in staged.items():
        ordered = [
            [(lat, lon) for _, lat, lon in sorted(rings[k])] for k in sorted(rings)
        ]
        out[rid] = _boundary_from_rings(path, 0, rid, ordered)
    return out


def load_attributes(path: str | Path, fips_mode: bool = False) -> dict[str, RegionAttributes]:
    """Attributes CSV: region_id, population, urbanicity, employed, poverty,
    plus any number of share_* demographic columns."""
    path = Path(path)
    rows = _read_rows(path, ["region_id", "population", "urbanicity", "employed", "poverty"])
    out: dict[str, RegionAttributes] = {}
    for i, row in enumerate(rows, start=2):
        rid = _check_region_id(path, i, row["region_id"], fips_mode)
        population = _int_cell(path, i, "population", row["population"], minimum=0)
        urbanicity = (row["urbanicity"] or "").strip()
        if urbanicity not in URBANICITY_CLASSES:
            raise ParseError(
                str(path), i, "urbanicity",
                f"{urbanicity!r} not one of {sorted(URBANICITY_CLASSES)}",
            )
        employed = _float_cell(path, i, "employed", row["employed"], 0.0, 1.0)
        poverty = _float_cell(path, i, "poverty", row["poverty"], 0.0, 1.0)
        demographics = {
            col: _float_cell(path, i, col, value, 0.0, 1.0)
            for col, value in row.items()
            if col.startswith("share_") and value not in (None, "")
        }
        out[rid] = RegionAttributes(
            region_id=rid,
            population=population,
            urbanicity=urbanicity,
            demographics=demographics,
            employed=employed,
            poverty=poverty,
        )
    return out


def load_coverage(path: str | Path, fips_mode: bool = False) -> dict[tuple[str, int], float]:
    """Coverage CSV: region_id, window, coverage in [0, 1]."""
    path = Path(path)
    rows = _read_rows(path, ["region_id", "window", "coverage"])
    out = {}
    for i, row in enumerate(rows, start=2):
        rid = _check_region_id(path, i, row["region_id"], fips_mode)
        window = _int_cell(path, i, "window", row["window"])
        cov = _float_cell(path, i, "coverage", row["coverage"], 0.0, 1.0)
        out[(rid, window)] = cov
    return out


def load(
    events_path: str | Path,
    boundaries_path: str | Path,
    attributes_path: str | Path,
    coverage_path: str | Path,
    beta: float = 0.75,
    fips_mode: bool = False,
) -> Dataset:
    """Parse all inputs, apply the coverage threshold, enforce integrity.

    A region whose minimum coverage over the windows present in the
    coverage file falls below ``beta`` is dropped together with all its
    events; missing (region, window) pairs count as coverage 0. Duplicate
    (origin, destination, period) event rows are merged by summing their
    counts. Any surviving event endpoint without both an attribute and a
    boundary record raises IntegrityError.
    """
    raw_events = load_events(events_path, fips_mode)
    boundaries = load_boundaries(boundaries_path, fips_mode)
    attributes = load_attributes(attributes_path, fips_mode)
    coverage = load_coverage(coverage_path, fips_mode)

    provenance = Provenance(
        paths={
            "events": str(events_path),
            "boundaries": str(boundaries_path),
            "attributes": str(attributes_path),
            "coverage": str(coverage_path),
        },
        rows_parsed={
            "events": len(raw_events),
            "boundaries": len(boundaries),
            "attributes": len(attributes),
            "coverage": len(coverage),
        },
    )

    # attach per-window coverage; windows absent for a region count as 0
    windows = sorted({w for (_, w) in coverage})
    for rid, attr in attributes.items():
        attr.coverage = {w: coverage.get((rid, w), 0.0) for w in windows}

    excluded = {
        rid for rid, attr in attributes.items() if attr.min_coverage() < beta
    }
    for rid in sorted(excluded):
        reason = f"min coverage {attributes[rid].min_coverage():.4f} < beta {beta}"
        provenance.excluded_regions[rid] = reason
        provenance.exclusion_log.append(f"region {rid}: {reason}")

    merged: dict[tuple[str, str, int], int] = {}
    kept_rows = 0
    for ev in raw_events:
        if ev.origin in excluded or ev.destination in excluded:
            provenance.events_excluded += 1
            continue
        kept_rows += 1
        key = (ev.origin, ev.destination, ev.period)
        if key in merged:
            provenance.events_merged += 1
        merged[key] = merged.get(key, 0) + ev.count
    provenance.events_retained = kept_rows - provenance.events_merged

    events = [
        JourneyEvent(origin=u, destination=v, period=t, count=c)
        for (u, v, t), c in sorted(merged.items())
    ]

    retained_attrs = {
        rid: attr for rid, attr in attributes.items() if rid not in excluded
    }
    retained_bounds = {
        rid: b for rid, b in boundaries.items() if rid not in excluded
    }
    for ev in events:
        for rid in (ev.origin, ev.destination):
            if rid not in retained_attrs:
                raise IntegrityError(f"event references region {rid!r} with no attributes")
            if rid not in retained_bounds:
                raise IntegrityError(f"event references region {rid!r} with no boundary")

    return Dataset(
        events=events,
        boundaries=retained_bounds,
        attributes=retained_attrs,
        beta=beta,
        provenance=provenance,
    )


def validate(dataset: Dataset) -> ValidationReport:
    """Report-only checks on a loaded dataset."""
    touched = {ev.origin for ev in dataset.events} | {
        ev.destination for ev in dataset.events
    }
    orphans = sorted(set(dataset.attributes) - touched)
    zero_pop = sorted(
        rid for rid, a in dataset.attributes.items() if a.population == 0
    )
    share_violations = sorted(
        rid
        for rid, a in dataset.attributes.items()
        if sum(a.demographics.values()) > 1.0 + 1e-9
    )
    return ValidationReport(
        orphan_regions=orphans,
        zero_population_regions=zero_pop,
        share_sum_violations=share_violations,
        merged_duplicates=dataset.provenance.events_merged,
    )
