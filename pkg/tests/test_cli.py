import json
from pathlib import Path

import pytest

from biharm import cli

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


@pytest.mark.parametrize(
    "name, code",
    [
        ("power_root", 0),
        ("power_nonroot", 1),
        ("bad_expression", 2),
        ("inverse_linear", 0),
        ("slanted", 0),
        ("hyperbolic", 0),
        ("negative_curvature", 0),
        ("catenoid", 1),
        ("constant_factor", 0),
    ],
)
def test_check_exit_codes(capsys, name, code):
    got, out, err = run(capsys, "check", "--config", str(CONFIGS / f"{name}.json"), "--samples", "20")
    assert got == code
    if code < 2:
        assert json.loads(out)["passed"] is (code == 0)
    else:
        assert "^" in err  # caret diagnostic


def test_catenoid_report(capsys):
    _, out, _ = run(capsys, "check", "--config", str(CONFIGS / "catenoid.json"), "--samples", "10")
    rep = json.loads(out)
    cls = next(c for c in rep["checks"] if c["name"] == "classify")
    assert cls["verdict"] == "NotBiharmonic"
    assert rep["tool_version"] and len(rep["config_hash"]) == 64


def test_numeric_failure_exit_3(capsys, tmp_path):
    cfg = write(tmp_path, {
        "dimension_m": 2,
        "conformal_factor": "z",
        "hypersurface": {"hyperplane": {"normal": [0, 0, 1], "offset": -1}},
        "samples": 3,
    })
    assert run(capsys, "check", "--config", cfg)[0] == 3


@pytest.mark.parametrize(
    "raw",
    [
        {"conformal_factor": "z"},
        {"dimension_m": 2, "conformal_factor": "z", "bogus": 1},
        {"dimension_m": 2, "conformal_factor": "k*z"},
        {"dimension_m": 2, "conformal_factor": "foo(z)"},
        {"dimension_m": 2, "conformal_factor": "z", "checks": ["nope"]},
        {"dimension_m": 2, "conformal_factor": "z", "hypersurface": {"hyperplane": {"normal": [1, 0]}}},
    ],
)
def test_malformed_config_exit_2(capsys, tmp_path, raw):
    assert run(capsys, "check", "--config", write(tmp_path, raw))[0] == 2


def test_invalid_json_exit_2(capsys, tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    assert run(capsys, "check", "--config", str(p))[0] == 2


def test_determinism(capsys, tmp_path):
    outs = []
    for k in range(2):
        dest = tmp_path / f"r{k}.json"
        run(capsys, "check", "--config", str(CONFIGS / "power_nonroot.json"), "--samples", "15", "--out", str(dest))
        outs.append(dest.read_bytes())
    assert outs[0] == outs[1]


def test_seed_changes_records(capsys):
    base = ["check", "--config", str(CONFIGS / "power_nonroot.json"), "--samples", "5"]
    _, a, _ = run(capsys, *base, "--seed", "1")
    _, b, _ = run(capsys, *base, "--seed", "2")
    assert a != b


def test_oracle_columns(capsys):
    _, out, _ = run(capsys, "check", "--config", str(CONFIGS / "inverse_linear.json"), "--samples", "5", "--oracle")
    assert "oracle_hbar_rel" in out


def test_tolerance_override(capsys):
    # a huge relative tolerance swallows the non-root residual
    argv = ["check", "--config", str(CONFIGS / "power_nonroot.json"), "--samples", "5", "--tol-rel", "10"]
    assert run(capsys, *argv)[0] == 0


def test_scan_curvature(capsys):
    code, out, _ = run(capsys, "scan-curvature", "--config", str(CONFIGS / "hyperbolic.json"), "--samples", "20")
    rep = json.loads(out)
    assert code == 0 and rep["curvature"]["max_k"] == pytest.approx(-1, abs=1e-12)


def test_derive_constant_factor(capsys, tmp_path):
    cfg = write(tmp_path, {"dimension_m": 4, "conformal_factor": "1"})
    code, out, _ = run(capsys, "derive", "--config", cfg)
    assert code == 0 and out.strip() == "0"


def test_derive_slanted_values(capsys, tmp_path):
    dest = tmp_path / "d.json"
    code, _, _ = run(capsys, "derive", "--config", str(CONFIGS / "slanted.json"), "--out", str(dest))
    rep = json.loads(dest.read_text())
    assert code == 0 and rep["equation"] == "slanted"
    assert all(abs(v) <= 1e-12 for v in rep["sample_values"])


def test_derive_needs_supported_case(capsys, tmp_path):
    cfg = write(tmp_path, {"dimension_m": 3, "conformal_factor": "x1+z+2"})
    assert run(capsys, "derive", "--config", cfg)[0] == 2


def test_families_default_and_config(capsys):
    code, out, _ = run(capsys, "families", "--samples", "10")
    rep = json.loads(out)
    assert code == 0 and len(rep["families"]) == 5
    code, out, _ = run(capsys, "families", "--config", str(CONFIGS / "product_family.json"), "--samples", "10")
    assert code == 0 and json.loads(out)["families"][0]["family"] == "ProductExample"


def test_families_bad_kind(capsys, tmp_path):
    cfg = write(tmp_path, {"dimension_m": 4, "family": {"kind": "Nope"}})
    assert run(capsys, "families", "--config", cfg)[0] == 2


def test_json_number_format():
    assert cli._num(2.0) == "2"
    assert cli._num(0.1) == "0.10000000000000001"
    assert cli._num(float("nan")) == "null"
