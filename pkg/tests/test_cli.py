import json

import pytest

from interpriv.cli import EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, EXIT_USAGE, run


def test_erasure_prints_value(capsys):
    assert run(["erasure", "--p", "0.03", "--d1", "0.8116"]) == EXIT_OK
    assert "1.3832" in capsys.readouterr().out


def test_exit_codes(tmp_path, capsys):
    assert run([]) == EXIT_USAGE
    assert run(["nonsense"]) == EXIT_USAGE
    assert run(["oracle", "--rounds", "x"]) == EXIT_USAGE
    assert run(["oracle", "--source", "random:seed=1", "--rounds", "0", "--d1", "0"]) == EXIT_INFEASIBLE
    assert run(["ingest", "--csv", str(tmp_path / "missing.csv")]) == EXIT_IO
    capsys.readouterr()


def test_results_and_manifest(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["oracle", "--source", "random:seed=3", "--d1", "0.5", "--out", str(out)]) == EXIT_OK
    body = json.loads((out / "oracle.json").read_text())
    man = json.loads((out / "oracle.manifest.json").read_text())
    assert body["manifest_file"] == "oracle.manifest.json"
    assert body["manifest"]["command"] == "oracle"
    assert "wall_clock_seconds" in man and "wall_clock_seconds" not in body["manifest"]
    capsys.readouterr()


@pytest.mark.parametrize("argv", [
    ["simulate", "--n", "2000", "--trials", "3", "--seed", "5"],
    ["gaussian", "--check", "--seed", "2", "--points", "10"],
    ["funnel", "--source", "census", "--rounds", "2", "--taus", "0.2,0.1"],
])
def test_byte_identical_reruns(tmp_path, argv, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(argv + ["--out", str(a)]) == EXIT_OK
    assert run(argv + ["--out", str(b)]) == EXIT_OK
    name = argv[0] + ".json"
    assert (a / name).read_bytes() == (b / name).read_bytes()
    capsys.readouterr()


def test_gaussian_check_reports_gap(tmp_path, capsys):
    assert run(["gaussian", "--check", "--seed", "4", "--points", "20", "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "gaussian.json").read_text())["results"]
    assert res["max_abs_gap_bits"] < 1e-9
    capsys.readouterr()


def test_sweep_writes_curves(tmp_path, capsys):
    assert run(["sweep", "--source", "erasure:p=0.1,r=0.2", "--points", "4",
                "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
    assert lines[0] == "rounds,utility_bits,distortion_bits,leakage_bits"
    rows = [l.split(",") for l in lines[1:]]
    one = {r[1]: float(r[3]) for r in rows if r[0] == "1"}
    two = {r[1]: float(r[3]) for r in rows if r[0] == "2"}
    assert one.keys() == two.keys()
    assert all(two[u] <= one[u] + 1e-9 for u in one)
    capsys.readouterr()


def test_ingest_pmf_roundtrip(tmp_path, capsys):
    pmf_path = tmp_path / "joint.json"
    assert run(["ingest", "--pmf-out", str(pmf_path)]) == EXIT_OK
    assert run(["oracle", "--source", f"pmf:{pmf_path}", "--rounds", "0"]) == EXIT_OK
    capsys.readouterr()
