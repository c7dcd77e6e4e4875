import json
import math
import subprocess
import sys

import pytest

from delone.cli import ANALYSES, AnalysisConfig, main, run_analysis
from delone.errors import SchemaError
from delone.generators import gen_fibonacci_chain
from delone.pointset import load_sample
from delone.report import SCHEMA_VERSION, comparison_table, dumps, load_report, table_csv, table_text

# FIB[k] tiles at depth k
FIB = [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610]

FAST = ["--radius-grid", "1,2,4", "--no-timestamp"]


@pytest.fixture(scope="module")
def fib_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "fib.pts"
    assert main(["generate", "fibonacci", "--depth", "12", "-o", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def fib_report(fib_file, tmp_path_factory):
    out = tmp_path_factory.mktemp("fib-report")
    assert main(["analyze", str(fib_file), "-o", str(out)] + FAST) == 0
    return out


def test_generate_fibonacci(fib_file):
    s = load_sample(fib_file)
    assert len(s) == FIB[12] + 1 == 234
    assert "fibonacci_chain" in fib_file.read_text().splitlines()[0]


def test_generate_lattice(tmp_path):
    path = tmp_path / "z.pts"
    assert main(["generate", "lattice", "--dim", "2", "--side", "50", "-o", str(path)]) == 0
    assert len(load_sample(path)) == 51 ** 2


def test_generate_sturmian_and_others(tmp_path):
    assert main(["generate", "sturmian", "--quotients", "1,100,1,100", "--length", "5000",
                 "-o", str(tmp_path / "s.pts")]) == 0
    assert len(load_sample(tmp_path / "s.pts")) == 5000
    spec = json.dumps({"kind": "fibonacci_chain", "params": {"depth": 5}})
    assert main(["generate", "product", "--x", spec, "--y", spec, "-o", str(tmp_path / "p.pts")]) == 0
    assert len(load_sample(tmp_path / "p.pts")) == 81
    assert main(["generate", "perturbed", "--alphabet", "0,0;0.1,0.1", "--side", "10",
                 "-o", str(tmp_path / "q.pts")]) == 0


def test_generate_to_stdout(capsys):
    assert main(["generate", "fibonacci", "--depth", "3"]) == 0
    out = capsys.readouterr().out
    assert "DELONE v1 dim=1" in out


@pytest.mark.parametrize("argv", [
    ["generate", "fibonacci", "--depth", "0"],
    ["generate", "sturmian", "--quotients", "0", "--length", "10"],
    ["generate", "perturbed", "--alphabet", "0.3,0"],
])
def test_generate_invalid_spec(argv, capsys):
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_analyze_report_contents(fib_report):
    rep = load_report(fib_report / "report.json")
    assert set(rep) == {"schema_version", "sample", "config_echo", "results", "skipped"}
    res = rep["results"]
    for key in ("properties.lr_constant", "densities.weight_estimate.PW", "densities.weight_estimate.PQ",
                "voronoi.uniformity_estimate", "pointset_core.packing_radius"):
        assert key in res, key
    assert res["properties.lr_constant"]["value"] == pytest.approx(3.4270509831248432)
    assert res["voronoi.uniformity_estimate"]["value"] == pytest.approx((1 + 5 ** 0.5) / 2)
    assert all(k.split(".")[0] in {"pointset_core", "densities", "voronoi", "properties", "set_harness"}
               for k in res)
    assert any(p.suffix == ".csv" for p in fib_report.iterdir())


def test_analyze_is_deterministic(fib_file, fib_report, tmp_path):
    assert main(["analyze", str(fib_file), "-o", str(tmp_path)] + FAST) == 0
    assert (tmp_path / "report.json").read_bytes() == (fib_report / "report.json").read_bytes()


def test_timestamp_present_by_default(fib_file, tmp_path):
    assert main(["analyze", str(fib_file), "-o", str(tmp_path), "--analyses", "radii"]) == 0
    assert "timestamp" in json.loads((tmp_path / "report.json").read_text())


def test_tiny_window_completes_nothing(tmp_path):
    path = tmp_path / "tiny.pts"
    path.write_text("DELONE v1 dim=1\nwindow 0 1\n0\n1\n")
    code = main(["analyze", str(path), "-o", str(tmp_path / "out"), "--no-timestamp",
                 "--analyses", "densities,weights,lr"])
    assert code == 3
    rep = load_report(tmp_path / "out" / "report.json")
    assert not rep["results"]
    assert all("insufficient window" in item["reason"] for item in rep["skipped"])


def test_skipped_analyses_do_not_abort(tmp_path):
    path = tmp_path / "short.pts"
    main(["generate", "fibonacci", "--depth", "6", "-o", str(path)])
    code = main(["analyze", str(path), "-o", str(tmp_path / "out"), "--no-timestamp", "--radius-grid", "1,4"])
    rep = load_report(tmp_path / "out" / "report.json")
    assert code == 0
    assert rep["results"] and rep["skipped"]


def test_malformed_input_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.pts"
    path.write_text("DELONE v1 dim=2\nwindow 0 0 5 5\n1 1\n1 2 3\n")
    assert main(["analyze", str(path), "-o", str(tmp_path / "o")]) == 2
    assert "line 4" in capsys.readouterr().err


def test_config_file_and_flag_override(fib_file, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"radius_grid": [1, 2], "analyses": ["lr"]}))
    assert main(["analyze", str(fib_file), "--config", str(cfg), "--radius-grid", "1,2,4",
                 "-o", str(tmp_path / "o"), "--no-timestamp"]) == 0
    rep = load_report(tmp_path / "o" / "report.json")
    assert rep["config_echo"]["radius_grid"] == [1.0, 2.0, 4.0]
    assert set(rep["results"]) == {"properties.lr_constant"}


def test_unknown_config_key(fib_file, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"radius": 3}))
    assert main(["analyze", str(fib_file), "--config", str(cfg), "-o", str(tmp_path)]) == 2


def test_generator_input(tmp_path):
    spec = json.dumps({"kind": "lattice", "params": {"basis": [[1.0]], "window": [[0.0], [60.0]]}})
    assert main(["analyze", "--generator", spec, "--analyses", "radii,voronoi", "--no-timestamp",
                 "-o", str(tmp_path)]) == 0
    res = load_report(tmp_path / "report.json")["results"]
    assert res["pointset_core.packing_radius"]["value"] == 0.5
    assert res["voronoi.set_distortion"]["value"] == 1.0


def test_prerequisites_are_pulled_in():
    assert AnalysisConfig(analyses=["lemma_rip"]).resolved_analyses() == ["weights", "lemma_rip"]
    got = AnalysisConfig(analyses=["consistency"]).resolved_analyses()
    assert got == ["weights", "uniformity", "lr", "rp", "consistency"]
    assert AnalysisConfig().resolved_analyses() == list(ANALYSES)
    with pytest.raises(ValueError):
        AnalysisConfig(analyses=["nope"]).resolved_analyses()


def test_cube_ladder_and_placements(fib_file, tmp_path):
    assert main(["analyze", str(fib_file), "--analyses", "densities", "--radius-grid", "1",
                 "--cube-ladder", "base=20,factor=1.5,count=5", "--placements", "1",
                 "--no-timestamp", "-o", str(tmp_path)]) == 0
    res = load_report(tmp_path / "report.json")["results"]
    assert len(res["densities.lower_density"]) == 3
    rows = (tmp_path / "density_R1_class0.csv").read_text().splitlines()[1:]
    assert [float(r.split(",")[0]) for r in rows] == pytest.approx([20 * 1.5 ** k for k in range(5)])


def test_run_analysis_in_process():
    report, tables = run_analysis(gen_fibonacci_chain(10), AnalysisConfig(radius_grid=[1, 2],
                                                                          analyses=["uniformity"]), False)
    assert "timestamp" not in report
    assert report["results"]["voronoi.uniformity_estimate"]["value"] == pytest.approx((1 + 5 ** 0.5) / 2)


def test_report_command(fib_file, fib_report, tmp_path, capsys):
    other = tmp_path / "f14"
    f14 = tmp_path / "f14.pts"
    main(["generate", "fibonacci", "--depth", "14", "-o", str(f14)])
    assert main(["analyze", str(f14), "-o", str(other)] + FAST) == 0
    capsys.readouterr()
    csv_path = tmp_path / "cmp.csv"
    assert main(["report", str(fib_report / "report.json"), str(other / "report.json"),
                 "-o", str(csv_path)]) == 0
    text = capsys.readouterr().out
    assert "properties.lr_constant.value" in text
    header = csv_path.read_text().splitlines()[0].split(",")
    assert header == ["quantity", "fib", "f14"]


def test_report_single_passthrough(fib_report, capsys):
    assert main(["report", str(fib_report / "report.json")]) == 0
    rep = load_report(fib_report / "report.json")
    header, rows = comparison_table([rep])
    assert capsys.readouterr().out == table_text(header, rows)


def test_report_schema_mismatch(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": "0.1", "sample": {}, "results": {}, "skipped": []}))
    assert main(["report", str(bad)]) == 2
    with pytest.raises(SchemaError):
        load_report(bad)


def test_dumps_is_stable_and_round_trips(tmp_path):
    obj = {"b": [1.0 / 3, math.inf, -math.inf], "a": {"x": 0.1 + 0.2, "n": None, "ok": True}}
    assert dumps(obj) == dumps(json.loads(json.dumps(obj)))
    path = tmp_path / "r.json"
    path.write_text(dumps({"schema_version": SCHEMA_VERSION, "sample": {}, "results": obj, "skipped": []}))
    back = load_report(path)["results"]
    assert back["a"]["x"] == 0.1 + 0.2
    assert back["b"][1] == math.inf and back["b"][2] == -math.inf


def test_table_csv_full_precision():
    text = table_csv(["quantity", "a"], [["x", 0.1 + 0.2], ["y", None]])
    assert text.splitlines() == ["quantity,a", "x,0.30000000000000004", "y,"]


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "delone", "generate", "fibonacci", "--depth", "4"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.count("\n") == 3 + FIB[4] + 1
