import json
import subprocess
import sys
from pathlib import Path

import pytest

from quadspec.cli import run
from quadspec.io import dumps, quadratic_to_doc, validate_report
from quadspec.models import example_form

DATA = Path(__file__).resolve().parents[1] / "data"


def call(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = run([*map(str, argv), "--out", str(out)])
    return code, (json.loads(out.read_text()) if code == 0 and out.exists() else None)


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_analyze_quadratic(tmp_path):
    code, rep = call(tmp_path, "analyze-quadratic", DATA / "kfp.json")
    assert code == 0
    res = rep["result"]
    assert res["admissible"] and res["partially_elliptic"]
    assert res["singular_space"]["dim"] == 0
    validate_report(rep)


def test_spectrum_harmonic(tmp_path):
    code, rep = call(tmp_path, "spectrum", DATA / "harmonic.json", "--radius", "6")
    assert code == 0
    vals = sorted(p["value"]["re"] for p in rep["result"]["points"])
    assert vals[0] == pytest.approx(rep["result"]["ground"]["re"])


def test_spectrum_failure_is_exit_2(tmp_path):
    src = write(tmp_path, "q.json", quadratic_to_doc(example_form(0.0, 0.0, 0.0)))
    code, _ = call(tmp_path, "spectrum", src)
    assert code == 2


def test_deform_records(tmp_path):
    code, rep = call(tmp_path, "deform", DATA / "kfp.json", "--delta", "0.1", "--delta", "0")
    assert code == 0
    assert [r["delta"] for r in rep["result"]["records"]] == [0.1, 0.0]
    assert rep["result"]["residual"] < 1e-9


def test_weight(tmp_path):
    code, rep = call(tmp_path, "weight", DATA / "example_symbol.json", "--grid-file", DATA / "points.json")
    assert code == 0
    assert len(rep["result"]["values"]) == 2


def test_certify_example(tmp_path):
    code, rep = call(tmp_path, "certify-prop1", DATA / "example_symbol.json", "--grid-file", DATA / "prop1.json")
    assert code == 0 and rep["result"]["passed"] is True
    code, rep = call(tmp_path, "certify-prop1", DATA / "example_symbol.json", "--grid-file", DATA / "prop1.json", "--delta", "0")
    # a failed certification is a result, not an error
    assert code == 0 and rep["result"]["passed"] is False
    iv = next(it for it in rep["result"]["items"] if it["name"] == "iv")
    assert iv["passed"] is False


def test_scan_writes_csv_and_summary(tmp_path):
    conf = write(tmp_path, "scan.json", {"z_grid": {"points": [[1.0, 0.0], [2.0, 0.5]]}, "h": [0.1], "levels": 12, "margin": 0.2})
    out = tmp_path / "scan.csv"
    assert run(["scan-resolvent", str(DATA / "kfp_symbol.json"), "--grid-file", str(conf), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["z_re", "z_im", "h"] and len(lines) == 3
    summary = json.loads(Path(str(out) + ".json").read_text())
    assert summary["result"]["entries"] == 2 and summary["result"]["csv"] == str(out)


def test_scan_empty_grid_is_input_error(tmp_path, capsys):
    code = run(["scan-resolvent", str(DATA / "kfp_symbol.json"), "--grid-file", str(DATA / "empty_scan.json")])
    assert code == 1
    assert "empty grid" in capsys.readouterr().err


def test_verify_identities(tmp_path):
    code, rep = call(tmp_path, "verify-identities", DATA / "kfp.json")
    assert code == 0 and rep["result"]["passed"]


@pytest.mark.parametrize(
    "doc",
    [
        {"n": 1, "coeffs": [{"mono": [2, 0], "re": 1.0, "bogus": 1}]},
        {"coeffs": []},
        {"n": "one", "coeffs": []},
    ],
)
def test_schema_rejection(tmp_path, capsys, doc):
    code, _ = call(tmp_path, "analyze-quadratic", write(tmp_path, "bad.json", doc))
    assert code == 1
    assert "field" in capsys.readouterr().err


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{"n": 1,\n "coeffs": [}')
    assert run(["analyze-quadratic", str(p)]) == 1
    assert "line 2" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["spectrum"], ["nonsense", "x"], ["deform", "x.json", "--T", "-1"]])
def test_usage_errors(argv):
    assert run(argv) == 1


def test_missing_file():
    assert run(["analyze-quadratic", "/nonexistent/q.json"]) == 1


def test_output_is_deterministic(tmp_path):
    args = ["certify-prop1", DATA / "example_symbol.json", "--grid-file", DATA / "prop1.json", "--delta", "0"]
    out = tmp_path / "a.json"
    run([*map(str, args), "--out", str(out)])
    first = out.read_bytes()
    run([*map(str, args), "--out", str(out)])
    assert out.read_bytes() == first


def test_dumps_format():
    text = dumps({"b": 1.0, "a": [0.1, float("nan")], "c": 2j})
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text and "null" in text


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "quadspec", "verify-identities", str(DATA / "harmonic.json")], capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["command"] == "verify-identities"
