"""Batch command-line front end: ingest, analyze, write files.

Every subcommand reads the input files, runs one slice of the pipeline and
writes fixed-name outputs under --out. Outputs embed a JSON metadata block
echoing the invocation, and identical inputs plus identical seeds produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ZeroPopulationWarning,
    journey_distance_by_group,
    loglog_fit,
    per_capita_metrics,
    profile_groups,
    sensitivity_sweep,
    top_k,
)
from .errors import JourneyNetError
from .geo import interval_table, lookup_interval, pair_key
from .ingest import Dataset, load, validate
from .network import (
    build_network,
    degree_vector,
    hits,
    remove_self_loops,
    summary_stats,
)
from .stats import hamed_rao_trend
from .survival import CensoredSample, summarize, turnbull_fit
from .synth import GeneratorConfig, generate
from .temporal import series_summaries, slice_series, temporal_correlation

SUBCOMMANDS = (
    "stats",
    "degrees",
    "hits",
    "temporal",
    "distances",
    "profile",
    "sweep",
    "synth",
)


def _metadata(args: argparse.Namespace) -> dict:
    config = {
        k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None
    }
    return {
        "tool": "journeynet",
        "version": __version__,
        "subcommand": args.subcommand,
        "config": config,
    }


def _write_json(path: Path, meta: dict, payload: dict) -> None:
    doc = {"meta": meta, **payload}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, meta: dict, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = "# " + json.dumps(meta, sort_keys=True) + "\n" + buf.getvalue()
    path.write_text(text, encoding="utf-8")


def _load_dataset(args: argparse.Namespace) -> Dataset:
    return load(
        events_path=args.events,
        boundaries_path=args.boundaries,
        attributes_path=args.attributes,
        coverage_path=args.coverage,
        beta=args.beta,
    )


def _observed_interval_table(dataset: Dataset):
    pairs = {
        pair_key(ev.origin, ev.destination)
        for ev in dataset.events
        if ev.origin != ev.destination
    }
    return interval_table(dataset.boundaries, pairs=sorted(pairs))


def _discordant_sample(net, intervals) -> CensoredSample:
    ivals, weights = [], []
    for (u, v), w in net.weights.items():
        if u != v:
            ivals.append(lookup_interval(intervals, u, v))
            weights.append(w)
    return CensoredSample(intervals=ivals, weights=weights)


def _selections(dataset: Dataset, net, k: int):
    discordant = remove_self_loops(net)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroPopulationWarning)
        ipc, opc = per_capita_metrics(discordant, dataset.attributes)
    scores = hits(net)
    out = []
    for metric, values in (
        ("ipc", ipc),
        ("opc", opc),
        ("authority", scores.authority),
        ("hub", scores.hub),
    ):
        out.append(top_k(values, k=min(k, len(values)), metric=metric))
    return out


def _selection_record(sel) -> dict:
    return {
        "metric": sel.metric,
        "k": sel.k,
        "members": sel.members,
        "elbow_k": sel.elbow_k,
    }


# -- subcommand implementations ----------------------------------------------


def cmd_stats(args) -> int:
    dataset = _load_dataset(args)
    net = build_network(dataset.events)
    meta = _metadata(args)
    report = validate(dataset)
    out = Path(args.out)
    _write_json(
        out / "stats.json",
        meta,
        {
            "included": asdict(summary_stats(net)),
            "excluded": asdict(summary_stats(remove_self_loops(net))),
            "validation": asdict(report),
            "provenance": asdict(dataset.provenance),
        },
    )
    rows = [[u, v, w] for (u, v), w in sorted(net.weights.items())]
    _write_csv(out / "edges.csv", meta, ["origin", "dest", "weight"], rows)
    return 0


def cmd_degrees(args) -> int:
    dataset = _load_dataset(args)
    net = build_network(dataset.events)
    discordant = remove_self_loops(net)
    meta = _metadata(args)
    out = Path(args.out)

    kinds = {
        "weighted_in": degree_vector(discordant, True, "in").values,
        "weighted_out": degree_vector(discordant, True, "out").values,
        "unweighted_in": degree_vector(discordant, False, "in").values,
        "unweighted_out": degree_vector(discordant, False, "out").values,
    }
    rows = [
        [u] + [kinds[k][u] for k in kinds] for u in discordant.nodes
    ]
    _write_csv(out / "degrees.csv", meta, ["region"] + list(kinds), rows)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroPopulationWarning)
        ipc, opc = per_capita_metrics(discordant, dataset.attributes)
    _write_csv(
        out / "percapita.csv",
        meta,
        ["region", "ipc", "opc"],
        [[r, f"{ipc[r]:.10g}", f"{opc[r]:.10g}"] for r in sorted(ipc)],
    )

    fits = {}
    nodes = list(discordant.nodes)
    if len(nodes) >= 3:
        din, dout = kinds["weighted_in"], kinds["weighted_out"]
        fit = loglog_fit([dout[u] + 1.0 for u in nodes], [din[u] for u in nodes])
        fits["in_vs_out"] = {
            "slope": fit.slope,
            "r_squared": fit.r_squared,
            "outliers": [nodes[i] for i in np.flatnonzero(fit.outliers)],
        }
        scored = [
            u for u in nodes
            if u in dataset.attributes and dataset.attributes[u].population > 0
        ]
        if len(scored) >= 3:
            pops = [float(dataset.attributes[u].population) for u in scored]
            for name, deg in (("out_vs_pop", dout), ("in_vs_pop", din)):
                f = loglog_fit(pops, [deg[u] for u in scored])
                fits[name] = {
                    "slope": f.slope,
                    "r_squared": f.r_squared,
                    "outliers": [scored[i] for i in np.flatnonzero(f.outliers)],
                }
    selections = [
        top_k(vals, k=min(args.k, len(vals)), metric=name)
        for name, vals in (("ipc", ipc), ("opc", opc))
        if vals
    ]
    _write_json(
        out / "degree_fits.json",
        meta,
        {"fits": fits, "top_k": [_selection_record(s) for s in selections]},
    )
    if args.plots:
        _plot_sorted_scores(
            out / "percapita_elbows.svg",
            {"ipc": sorted(ipc.values(), reverse=True),
             "opc": sorted(opc.values(), reverse=True)},
        )
    return 0


def cmd_hits(args) -> int:
    dataset = _load_dataset(args)
    net = build_network(dataset.events)
    scores = hits(net)
    meta = _metadata(args)
    out = Path(args.out)
    rows = [
        [u, f"{scores.hub[u]:.12g}", f"{scores.authority[u]:.12g}"]
        for u in sorted(scores.hub)
    ]
    _write_csv(out / "hits.csv", meta, ["region", "hub", "authority"], rows)
    selections = [
        top_k(scores.authority, k=min(args.k, len(scores.authority)), metric="authority"),
        top_k(scores.hub, k=min(args.k, len(scores.hub)), metric="hub"),
    ]
    _write_json(
        out / "hits_topk.json",
        meta,
        {
            "converged": scores.converged,
            "iterations": scores.iterations,
            "top_k": [_selection_record(s) for s in selections],
        },
    )
    if args.plots:
        _plot_sorted_scores(
            out / "hits_elbows.svg",
            {"authority": sorted(scores.authority.values(), reverse=True),
             "hub": sorted(scores.hub.values(), reverse=True)},
        )
    return 0


def cmd_temporal(args) -> int:
    dataset = _load_dataset(args)
    intervals = _observed_interval_table(dataset)
    series = slice_series(dataset.events, window_length=args.window)
    meta = _metadata(args)
    out = Path(args.out)

    summaries = series_summaries(series, intervals)
    _write_csv(
        out / "temporal_windows.csv",
        meta,
        ["window", "self_loop_share", "mean_km", "median_km"],
        [
            [
                s.window,
                "" if s.self_loop_share is None else f"{s.self_loop_share:.6f}",
                "" if s.mean_km is None else f"{s.mean_km:.4f}",
                "" if s.median_km is None else f"{s.median_km:.4f}",
            ]
            for s in summaries
        ],
    )

    payload: dict = {"T": series.T}
    if series.T >= 2:
        corrs = {
            d: temporal_correlation(series, d) for d in ("undirected", "in", "out")
        }
        nodes = sorted(
            set().union(*(c.per_node for c in corrs.values()))
        )
        _write_csv(
            out / "temporal_nodes.csv",
            meta,
            ["node", "gamma", "gamma_in", "gamma_out"],
            [
                [
                    u,
                    *(
                        ""
                        if u not in corrs[d].per_node
                        else f"{corrs[d].per_node[u]:.10g}"
                        for d in ("undirected", "in", "out")
                    ),
                ]
                for u in nodes
            ],
        )
        payload["overall"] = {d: corrs[d].overall for d in corrs}
        share_series = [
            s.self_loop_share for s in summaries if s.self_loop_share is not None
        ]
        mean_series = [s.mean_km for s in summaries if s.mean_km is not None]
        trends = {}
        if len(share_series) >= 4:
            trends["self_loop_share"] = hamed_rao_trend(share_series).to_record()
        if len(mean_series) >= 4:
            trends["mean_km"] = hamed_rao_trend(mean_series).to_record()
        payload["trends"] = trends
    _write_json(out / "temporal_trend.json", meta, payload)
    return 0


def cmd_distances(args) -> int:
    dataset = _load_dataset(args)
    net = build_network(dataset.events)
    intervals = _observed_interval_table(dataset)
    sample = _discordant_sample(net, intervals)
    fit = turnbull_fit(sample)
    meta = _metadata(args)
    out = Path(args.out)
    _write_csv(
        out / "distance_distribution.csv",
        meta,
        ["interval_lower", "interval_upper", "mass"],
        [
            [f"{lo:.6f}", f"{hi:.6f}", f"{m:.12g}"]
            for lo, hi, m in zip(fit.support_lower, fit.support_upper, fit.mass)
        ],
    )
    _write_json(
        out / "distance_summary.json",
        meta,
        {
            "summary": asdict(summarize(fit)),
            "converged": fit.converged,
            "iterations": fit.iterations,
        },
    )
    if args.plots:
        _plot_survival(out / "survival_curve.svg", fit)
    return 0


def cmd_profile(args) -> int:
    dataset = _load_dataset(args)
    net = build_network(dataset.events)
    intervals = _observed_interval_table(dataset)
    selections = _selections(dataset, net, args.k)
    meta = _metadata(args)
    out = Path(args.out)

    degree_profile = profile_groups(selections[:2], dataset.attributes)
    hits_profile = profile_groups(selections[2:], dataset.attributes)
    attr_names = sorted(
        {name for table in (degree_profile.table, hits_profile.table)
         for row in table.values() for name in row}
    )
    rows = []
    for battery, report in (("degree", degree_profile), ("hits", hits_profile)):
        for group in report.groups:
            row = report.table[group]
            rows.append(
                [battery, group] + [f"{row.get(a, float('nan')):.6g}" for a in attr_names]
            )
    _write_csv(out / "profiles.csv", meta, ["battery", "group"] + attr_names, rows)

    distance_report = journey_distance_by_group(
        net, selections, intervals, seed=args.seed
    )
    _write_json(
        out / "profile_tests.json",
        meta,
        {
            "selections": [_selection_record(s) for s in selections],
            "degree_battery": {
                "hsd_population": [r.to_record() for r in degree_profile.hsd_population],
                "g_tests": [r.to_record() for r in degree_profile.g_tests],
            },
            "hits_battery": {
                "hsd_population": [r.to_record() for r in hits_profile.hsd_population],
                "g_tests": [r.to_record() for r in hits_profile.g_tests],
            },
            "distance_groups": {
                "summaries": {
                    label: asdict(s) for label, s in distance_report.summaries.items()
                },
                "mc_tests": [r.to_record() for r in distance_report.mc_tests],
                "z_tests": [r.to_record() for r in distance_report.z_tests],
            },
        },
    )
    if args.plots:
        _plot_group_bars(
            out / "distance_groups_bar.svg",
            {lbl: s.mean_km for lbl, s in distance_report.summaries.items()},
        )
    return 0


def cmd_sweep(args) -> int:
    # the sweep applies each beta itself, so ingest must not pre-filter
    dataset = load(
        events_path=args.events,
        boundaries_path=args.boundaries,
        attributes_path=args.attributes,
        coverage_path=args.coverage,
        beta=0.0,
    )
    intervals = _observed_interval_table(dataset)
    betas = [float(b) for b in args.betas.split(",")]
    reports = sensitivity_sweep(
        dataset.events,
        dataset.attributes,
        intervals=intervals,
        betas=betas,
        k=args.k,
        window_length=args.window,
    )
    meta = _metadata(args)
    payload = {
        "betas": betas,
        "subgraph_property_verified": True,
        "reports": [
            {
                "beta": r.beta,
                "n_nodes": r.n_nodes,
                "n_edges": r.n_edges,
                "retained_regions": r.retained_regions,
                "regressions": r.regressions,
                "group_mean_km": r.group_mean_km,
                "temporal_overall": r.temporal_overall,
            }
            for r in reports
        ],
    }
    _write_json(Path(args.out) / "sweep.json", meta, payload)
    return 0


def cmd_synth(args) -> int:
    dips = ()
    if args.coverage_dips:
        parts = [p for p in args.coverage_dips.split(";") if p]
        dips = tuple(
            (int(i), int(w), float(v))
            for i, w, v in (p.split(",") for p in parts)
        )
    config = GeneratorConfig(
        n_regions=args.n_regions,
        seed=args.seed,
        cell_deg=args.cell_deg,
        lambda_km=args.lambda_km,
        self_loop_share=args.self_loop_share,
        windows=args.windows,
        events_per_window=args.events_per_window,
        edge_persistence=args.edge_persistence,
        coverage_dips=dips,
    )
    data = generate(config)
    out = Path(args.out)
    paths = data.write(out)
    _write_json(
        out / "synth_meta.json",
        _metadata(args),
        {"files": {k: str(p.name) for k, p in paths.items()},
         "n_events": len(data.events)},
    )
    return 0


# -- optional SVG plots -------------------------------------------------------


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    # fixed hash salt keeps generated SVG element ids reproducible
    matplotlib.rcParams["svg.hashsalt"] = "journeynet"
    import matplotlib.pyplot as plt

    return plt


def _save_svg(fig, path: Path) -> None:
    # strip the creation date so outputs stay byte-reproducible
    fig.savefig(path, format="svg", metadata={"Date": None})


def _plot_survival(path: Path, fit) -> None:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    grid = np.linspace(0, float(fit.support_upper.max()) * 1.05, 400)
    ax.step(grid, [fit.survival(d) for d in grid], where="post")
    ax.set_xlabel("journey distance (km)")
    ax.set_ylabel("S(d)")
    ax.set_ylim(0, 1.02)
    _save_svg(fig, path)
    plt.close(fig)


def _plot_group_bars(path: Path, means: dict) -> None:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = list(means)
    ax.bar(range(len(labels)), [means[k] for k in labels])
    ax.set_xticks(range(len(labels)), labels)
    ax.set_ylabel("mean journey distance (km)")
    _save_svg(fig, path)
    plt.close(fig)


def _plot_sorted_scores(path: Path, curves: dict) -> None:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, values in curves.items():
        ax.plot(range(1, len(values) + 1), values, label=label)
    ax.set_xlabel("rank")
    ax.set_ylabel("score")
    ax.set_yscale("log")
    ax.legend()
    _save_svg(fig, path)
    plt.close(fig)


# -- argument parsing ---------------------------------------------------------


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--events", required=True, help="events CSV")
    parser.add_argument("--boundaries", required=True, help="boundary GeoJSON or CSV")
    parser.add_argument("--attributes", required=True, help="attributes CSV")
    parser.add_argument("--coverage", required=True, help="coverage CSV")
    parser.add_argument("--beta", type=float, default=0.75,
                        help="minimum per-window coverage (default 0.75)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="journeynet",
        description="Origin-destination journey network analysis",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(name, help_text, seed_required=False):
        p = sub.add_parser(name, help=help_text)
        _add_data_flags(p)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--k", type=int, default=10, help="top-k size (default 10)")
        p.add_argument("--window", type=int, default=1,
                       help="window length in periods (default 1)")
        p.add_argument("--plots", action="store_true", help="write SVG plots")
        p.add_argument("--seed", type=int, required=seed_required,
                       help="master random seed")
        return p

    common("stats", "structural network summary").set_defaults(func=cmd_stats)
    common("degrees", "degree vectors, regressions, per-capita top-k").set_defaults(
        func=cmd_degrees
    )
    common("hits", "hub and authority scores").set_defaults(func=cmd_hits)
    common("temporal", "window series, persistence, trend tests").set_defaults(
        func=cmd_temporal
    )
    common("distances", "journey-distance distribution estimate").set_defaults(
        func=cmd_distances
    )
    common("profile", "group profiles and test batteries",
           seed_required=True).set_defaults(func=cmd_profile)
    sweep = common("sweep", "coverage-threshold sensitivity sweep")
    sweep.add_argument("--betas", default="0.55,0.65,0.75,0.85",
                       help="comma-separated thresholds")
    sweep.set_defaults(func=cmd_sweep)

    synth = sub.add_parser("synth", help="generate a synthetic dataset")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--seed", type=int, required=True, help="master random seed")
    synth.add_argument("--n-regions", type=int, default=6)
    synth.add_argument("--cell-deg", type=float, default=1.0)
    synth.add_argument("--lambda-km", type=float, default=100.0)
    synth.add_argument("--self-loop-share", type=float, default=0.9)
    synth.add_argument("--windows", type=int, default=2)
    synth.add_argument("--events-per-window", type=int, default=100)
    synth.add_argument("--edge-persistence", type=float, default=0.0)
    synth.add_argument("--coverage-dips", default="",
                       help="semicolon-separated region,window,value triples")
    synth.set_defaults(func=cmd_synth)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    out = getattr(args, "out", None)
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
    try:
        return args.func(args)
    except JourneyNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
