import csv
import json
import os
from pathlib import Path

import pytest

from resradon.cli import csv_header, main, run_scenario
from resradon.config import ConfigError, load_config

SCEN = Path(__file__).resolve().parents[1] / "scenarios"


def _scenario(tmp_path, base, **changes):
    data = json.loads((SCEN / base).read_text())
    data.update(changes)
    p = tmp_path / f"{data['name']}.json"
    p.write_text(json.dumps(data, indent=2))
    return p


def _read_csv(p):
    with open(p, newline="") as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("sub", ["residue", "radon", "verify"])
def test_conic_subcommands_succeed(tmp_path, sub):
    assert main([sub, "--scenario", str(SCEN / "conic.json"), "--out", str(tmp_path)]) == 0
    rows = _read_csv(tmp_path / f"conic_{sub}.csv")
    assert rows[0] == csv_header(2, 1)
    assert len(rows) == 13
    assert all(r[-1] == "ok" for r in rows[1:])


def test_fantappie_and_invert_on_martineau(tmp_path):
    for sub in ("fantappie", "invert"):
        assert main([sub, "--scenario", str(SCEN / "martineau.json"), "--out", str(tmp_path), "--grid", "32"]) == 0


def test_point_mass_fantappie(tmp_path):
    status, table, _ = run_scenario(SCEN / "point_mass.json", "fantappie", {"out": tmp_path})
    assert status == 0
    for r in table.rows:
        assert abs(r.euler - 1) < 1e-12


def test_both_formats_agree(tmp_path):
    main(["radon", "--scenario", str(SCEN / "cubic.json"), "--out", str(tmp_path), "--format", "csv,json"])
    rows = _read_csv(tmp_path / "cubic_radon.csv")
    doc = json.loads((tmp_path / "cubic_radon.json").read_text())
    assert len(doc["rows"]) == len(rows) - 1
    assert doc["metadata"]["subcommand"] == "radon"
    first = doc["rows"][0]
    assert float(rows[1][6]) == first["f"][0][0]


def test_csv_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        main(["radon", "--scenario", str(SCEN / "conic.json"), "--out", str(d), "--format", "csv"])
    assert (a / "conic_radon.csv").read_bytes() == (b / "conic_radon.csv").read_bytes()
    assert not (a / "conic_radon.json").exists()


def test_empty_table_writes_header_only(tmp_path):
    p = _scenario(tmp_path, "conic.json", name="empty", test_points=[])
    assert main(["radon", "--scenario", str(p), "--out", str(tmp_path)]) == 0
    assert _read_csv(tmp_path / "empty_radon.csv") == [csv_header(2, 1)]
    assert json.loads((tmp_path / "empty_radon.json").read_text())["rows"] == []


def test_tolerance_failure_exit_status(tmp_path):
    # no quadrature reaches this tolerance on the PDE residual
    assert main(["verify", "--scenario", str(SCEN / "conic.json"), "--out", str(tmp_path), "--tol", "1e-30"]) == 1
    doc = json.loads((tmp_path / "conic_verify.json").read_text())
    assert any(not c["passed"] for r in doc["rows"] for c in r["checks"].values())


def test_flags_override_config(tmp_path):
    p = _scenario(tmp_path, "martineau.json", grid=16, output={"dir": str(tmp_path / "cfg"), "format": ["json"]})
    _, table, paths = run_scenario(p, "invert", {"grid": 24, "tol": 0.5, "out": tmp_path / "flag"})
    assert table.metadata["grid"] == 24
    assert table.metadata["tolerances"]["quadrature"] == 0.5
    assert paths == [tmp_path / "flag" / "martineau_invert.json"]
    _, table, paths = run_scenario(p, "invert")
    assert table.metadata["grid"] == 16
    assert paths[0].parent == tmp_path / "cfg"


def test_missing_field_exit_status(tmp_path, capsys):
    assert main(["radon", "--scenario", str(SCEN / "missing_field.json"), "--out", str(tmp_path)]) == 2
    assert "'domain' is a required property" in capsys.readouterr().err


def test_bad_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "name": "x",\n  "domain": {"radius": 1.0,}\n}\n')
    with pytest.raises(ConfigError, match="line 3"):
        load_config(p)
    assert main(["radon", "--scenario", str(p)]) == 2


def test_bad_field_reports_path(tmp_path):
    p = _scenario(tmp_path, "conic.json", test_points=[[1, 2, 0]])
    with pytest.raises(ConfigError, match=r"test_points\[0\]"):
        load_config(p)
    p = _scenario(tmp_path, "conic.json", form={"leray": "exp(s)"})
    with pytest.raises(ConfigError, match="field form"):
        load_config(p)


def test_usage_errors(tmp_path):
    assert main(["radon"]) == 2
    assert main(["radon", "--scenario", str(SCEN / "conic.json"), "--format", "xml"]) == 2
    assert main(["radon", "--scenario", str(SCEN / "conic.json"), "--kappa", "1", "--out", str(tmp_path)]) == 2


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_output(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    assert main(["radon", "--scenario", str(SCEN / "conic.json"), "--out", str(locked / "sub")]) == 3


def test_output_path_is_a_file(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["radon", "--scenario", str(SCEN / "conic.json"), "--out", str(blocker)]) == 3
