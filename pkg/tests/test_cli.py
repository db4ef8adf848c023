import json
import math
import subprocess
import sys

import pytest

from anglecone.cli import main, parse_point, write_atomic
from anglecone import AngleConeError, euclidean


@pytest.fixture
def cfg(tmp_path):
    files = {
        "euclid2": {"kind": "euclidean", "dimension": 2},
        "linf2": {"kind": "normed_p", "dimension": 2, "p": "inf"},
        "sphere": {"kind": "sphere", "radius": 1.0},
    }
    out = {}
    for name, body in files.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(body))
        out[name] = str(path)
    graph = tmp_path / "graph.csv"
    graph.write_text("0,1,1.0\n1,2,1.0\n2,3,1.0\n3,0,1.0\n")
    out["graph"] = str(graph)
    return out


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_angle_right_angle(cfg, capsys):
    code, out, _ = run(capsys, "angle", "--space", cfg["euclid2"], "--p", "1,0", "--x", "0,0", "--q", "0,1")
    rep = json.loads(out)
    assert code == 0
    assert rep["cone"]["angle_minus"] == pytest.approx(1.5708, abs=1e-4)
    assert rep["cone"]["angle_plus"] == pytest.approx(1.5708, abs=1e-4)


def test_report_header_lists_defaults(cfg, capsys):
    _, out, _ = run(capsys, "angle", "--space", cfg["euclid2"], "--p", "1,0", "--x", "0,0", "--q", "0,1")
    s = json.loads(out)["settings"]
    assert s["dirs"] == 2048 and s["tau"] == 0.05 and s["seed"] == 0
    assert s["eps_max"] == 0.1 and s["eps_min"] == 1e-6 and s["t_max"] == 1e-2
    assert len(s["eps_ladder"]) > 0 and len(s["honda_t_ladder"]) > 0


def test_angle_sphere_antipodal(cfg, capsys):
    code, out, _ = run(capsys, "angle", "--space", cfg["sphere"], "--p", "1,0,0", "--x", "0,0,1", "--q", "0,0,-1")
    cone = json.loads(out)["cone"]
    assert code == 0 and cone["angle_minus"] <= 0.05 and cone["angle_plus"] >= 3.09


def test_degenerate_exit_2(cfg, capsys):
    code, _, err = run(capsys, "angle", "--space", cfg["euclid2"], "--x", "1,0", "--p", "1,0")
    assert code == 2 and "degenerate" in err


@pytest.mark.parametrize("argv", [
    ["angle", "--space", "missing.json", "--p", "1,0", "--x", "0,0", "--q", "0,1"],
    ["angle", "--space", "{euclid2}", "--p", "1,zero", "--x", "0,0", "--q", "0,1"],
    ["angle", "--space", "{euclid2}", "--p", "1,0,0", "--x", "0,0", "--q", "0,1"],
    ["angle", "--space", "{euclid2}", "--p", "1,0", "--x", "0,0", "--q", "0,1", "--eps-factor", "2"],
    ["angle", "--space", "{euclid2}", "--dirs", "-3"],
    ["frobnicate", "--space", "{euclid2}"],
])
def test_operational_errors_exit_1(cfg, capsys, argv):
    argv = [a.format(**cfg) for a in argv]
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_scan_zero_samples(cfg, capsys):
    code, _, err = run(capsys, "scan", "--space", cfg["euclid2"], "--p", "0,0", "--q", "1,1", "--n", "0")
    assert code == 1 and "usage" in err


def test_scan_files_and_determinism(cfg, capsys, tmp_path):
    outs = []
    for i in range(2):
        base = tmp_path / f"run{i}" / "scan.csv"
        code, _, _ = run(capsys, "scan", "--space", cfg["sphere"], "--p", "1,0,0", "--q", "0,0.6,0.8",
                         "--n", "6", "--seed", "3", "--mode", "equivalence", "--tol", "0.02", "--out", str(base))
        assert code == 0
        outs.append((base.read_bytes(), base.with_suffix(".json").read_bytes()))
    assert outs[0] == outs[1]
    summary = json.loads(outs[0][1])
    assert summary["summary"]["n_recorded"] == 6 and summary["settings"]["dirs"] == 2048
    leftovers = [p.name for p in (tmp_path / "run0").iterdir()]
    assert sorted(leftovers) == ["scan.csv", "scan.json"]


def test_scan_box(cfg, capsys):
    code, out, _ = run(capsys, "scan", "--space", cfg["euclid2"], "--p=-3,-3", "--q=-2,-1", "--n", "4",
                       "--box=-4,-2", "--format", "csv")
    assert code == 0
    for line in out.splitlines()[1:]:
        coords = [float(v) for v in line.split(",")[1].split()]
        assert all(-4 <= c <= -2 for c in coords)


def test_verify_euclid(cfg, capsys):
    code, out, _ = run(capsys, "verify", "--space", cfg["euclid2"])
    assert code == 0 and "FAIL" not in out and "inner_product_oracle" in out


def test_verify_linf_skips_strict_convexity(cfg, capsys):
    code, out, _ = run(capsys, "verify", "--space", cfg["linf2"])
    assert code == 0
    assert "SKIP    single_valued_generic" in out and "PASS    linf_multivalued" in out


def test_verify_sphere_cut_locus(cfg, capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--space", cfg["sphere"], "--out", str(tmp_path / "v.json"))
    assert code == 0 and "PASS    cut_locus_multivalued" in out
    rep = json.loads((tmp_path / "v.json").read_text())
    assert all(r["status"] != "fail" for r in rep["results"])


def test_verify_graph(cfg, capsys):
    code, out, _ = run(capsys, "verify", "--space", cfg["graph"])
    assert code == 0 and "SKIP" in out
    code, out, _ = run(capsys, "verify", "--space", cfg["graph"], "--scale-r", "1.5")
    assert code == 0 and "PASS    sign_duality" in out


@pytest.mark.parametrize("cmd", ["pairing", "slope", "honda", "compare", "rescale-check"])
def test_other_subcommands(cfg, capsys, cmd):
    code, out, _ = run(capsys, cmd, "--space", cfg["euclid2"], "--p", "1,0", "--x", "0,0", "--q", "0,1")
    assert code == 0
    rep = json.loads(out)
    key = {"pairing": "pairing", "slope": "slope", "honda": "honda", "compare": "comparison",
           "rescale-check": "homothety"}[cmd]
    assert key in rep


def test_compare_csv(cfg, capsys):
    code, out, _ = run(capsys, "compare", "--space", cfg["euclid2"], "--p", "1,0", "--x", "0,0", "--q", "0,1",
                       "--format", "csv")
    header, row = out.splitlines()
    assert code == 0 and header == "p,x,q,cone_mid,cone_width,honda,abs_diff,flags"
    assert float(row.split(",")[3]) == pytest.approx(math.pi / 2, abs=1e-6)


def test_graph_angle_needs_scale(cfg, capsys):
    code, _, err = run(capsys, "angle", "--space", cfg["graph"], "--p", "0", "--x", "1", "--q", "2")
    assert code == 1 and "scale" in err
    code, out, _ = run(capsys, "angle", "--space", cfg["graph"], "--p", "0", "--x", "1", "--q", "2",
                       "--scale-r", "1")
    assert code == 0 and json.loads(out)["pairing"]["backend"] == "graph_scale"


def test_parse_point():
    assert parse_point(" 1, 2.5 ", euclidean(2), "p").tolist() == [1.0, 2.5]
    with pytest.raises(AngleConeError):
        parse_point(None, euclidean(2), "p")


def test_write_atomic_replaces(tmp_path):
    path = tmp_path / "sub" / "r.txt"
    write_atomic(path, "one\n")
    write_atomic(path, "two\n")
    assert path.read_text() == "two\n"
    assert [p.name for p in path.parent.iterdir()] == ["r.txt"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "anglecone", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "anglecone" in res.stdout
