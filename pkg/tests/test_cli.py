import json
from pathlib import Path

import pytest

from journeynet.cli import run

FIXTURE = Path(__file__).parent / "fixtures" / "fixture6"
GOLDEN = Path(__file__).parent / "fixtures" / "golden"


def data_flags():
    return [
        "--events", str(FIXTURE / "events.csv"),
        "--boundaries", str(FIXTURE / "boundaries.geojson"),
        "--attributes", str(FIXTURE / "attributes.csv"),
        "--coverage", str(FIXTURE / "coverage.csv"),
    ]


def payload(path: Path) -> dict:
    doc = json.loads(path.read_text())
    doc.pop("meta", None)
    # input locations vary with the checkout; the accounting does not
    if "provenance" in doc:
        doc["provenance"].pop("paths", None)
    return doc


def csv_body(path: Path) -> str:
    lines = path.read_text().splitlines()
    return "\n".join(line for line in lines if not line.startswith("#"))


class TestExitCodes:
    def test_no_arguments_usage_error(self, capsys):
        assert run([]) == 2

    def test_unknown_subcommand(self):
        assert run(["frobnicate"]) == 2

    def test_profile_requires_seed(self, tmp_path):
        code = run(["profile", *data_flags(), "--out", str(tmp_path)])
        assert code == 2

    def test_validation_error_is_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "events.csv"
        bad.write_text("origin_region,dest_region,period,count\nA,B,0,1\n")
        code = run(
            [
                "stats",
                "--events", str(bad),
                "--boundaries", str(FIXTURE / "boundaries.geojson"),
                "--attributes", str(FIXTURE / "attributes.csv"),
                "--coverage", str(FIXTURE / "coverage.csv"),
                "--out", str(tmp_path / "out"),
            ]
        )
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_version_flag(self):
        assert run(["--version"]) == 0


class TestGolden:
    def test_stats_matches_golden(self, tmp_path):
        assert run(["stats", *data_flags(), "--out", str(tmp_path)]) == 0
        assert payload(tmp_path / "stats.json") == payload(GOLDEN / "stats.json")
        assert csv_body(tmp_path / "edges.csv") == csv_body(GOLDEN / "edges.csv")


def run_subcommand(sub, out_dir, seed=None, extra=()):
    argv = [sub, *data_flags(), "--out", str(out_dir), *extra]
    if seed is not None:
        argv += ["--seed", str(seed)]
    assert run(argv) == 0


ALL_SUBCOMMANDS = [
    ("stats", None, ()),
    ("degrees", None, ()),
    ("hits", None, ()),
    ("temporal", None, ()),
    ("distances", None, ()),
    ("profile", 7, ()),
    ("sweep", None, ("--betas", "0.55,0.65,0.75,0.85")),
]


class TestReproducibility:
    @pytest.mark.parametrize("sub,seed,extra", ALL_SUBCOMMANDS)
    def test_byte_identical_reruns(self, tmp_path, sub, seed, extra):
        out = tmp_path / "out"
        run_subcommand(sub, out, seed=seed, extra=extra)
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        run_subcommand(sub, out, seed=seed, extra=extra)
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second
        assert first  # at least one output per subcommand

    def test_synth_byte_identical(self, tmp_path):
        argv = lambda d: [
            "synth", "--out", str(d), "--seed", "5", "--n-regions", "5",
            "--windows", "2", "--events-per-window", "40",
        ]
        assert run(argv(tmp_path / "a")) == 0
        assert run(argv(tmp_path / "b")) == 0
        for name in ("events.csv", "boundaries.geojson", "attributes.csv",
                     "coverage.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_inputs_not_mutated(self, tmp_path):
        before = {
            p.name: p.read_bytes() for p in FIXTURE.iterdir() if p.is_file()
        }
        run_subcommand("stats", tmp_path / "x")
        run_subcommand("profile", tmp_path / "y", seed=3)
        after = {
            p.name: p.read_bytes() for p in FIXTURE.iterdir() if p.is_file()
        }
        assert before == after


class TestSweepCommand:
    def test_four_keyed_reports_with_subgraph_flag(self, tmp_path):
        run_subcommand("sweep", tmp_path, extra=("--betas", "0.55,0.65,0.75,0.85"))
        doc = json.loads((tmp_path / "sweep.json").read_text())
        assert doc["subgraph_property_verified"] is True
        assert [r["beta"] for r in doc["reports"]] == [0.55, 0.65, 0.75, 0.85]
        # the 0.6-dip region leaves at 0.65+, the 0.8-dip region at 0.85
        by_beta = {r["beta"]: set(r["retained_regions"]) for r in doc["reports"]}
        assert "10005" in by_beta[0.55] and "10005" not in by_beta[0.65]
        assert "10004" in by_beta[0.75] and "10004" not in by_beta[0.85]


class TestPlots:
    def test_distance_plot_written_and_reproducible(self, tmp_path):
        pytest.importorskip("matplotlib")
        out = tmp_path / "p"
        run_subcommand("distances", out, extra=("--plots",))
        svg = out / "survival_curve.svg"
        assert svg.exists()
        first = svg.read_bytes()
        run_subcommand("distances", out, extra=("--plots",))
        assert svg.read_bytes() == first
