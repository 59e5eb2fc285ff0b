"""Command-line contract: outputs, determinism and exit codes."""

import json
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from symplength.cli import main
from symplength.config import ConfigError, ExperimentConfig

TORUS = {"kind": "flat-torus", "periods": [1.0, 1.0]}
SPHERE = {"kind": "round-sphere", "dim": 2, "radius": 0.15915494309189535}


def run(tmp_path, command, doc, *flags):
    cfg = tmp_path / f"{command}.json"
    cfg.write_text(json.dumps(doc) if isinstance(doc, dict) else doc)
    out = tmp_path / f"{command}.out"
    code = main([command, "--config", str(cfg), "--out", str(out), *flags])
    return code, (out.read_text() if out.exists() else "")


def test_certify_bidisc_passes(tmp_path):
    code, text = run(tmp_path, "certify", {"map": "bidisc", "params": {"a": 1, "b": 1, "eps": 0.001}}, "--samples", "2048")
    doc = json.loads(text)
    assert code == 0 and doc["verdict"] == "pass" and doc["map"] == "bidisc"


def test_certify_unattainable_tolerance(tmp_path):
    code, text = run(tmp_path, "certify", {"map": "bidisc", "params": {"a": 1, "b": 1}}, "--tol", "1e-30", "--samples", "512")
    assert code == 2 and json.loads(text)["verdict"] == "fail"


@pytest.mark.parametrize(
    "doc",
    ["{not json", {"map": "teapot"}, {"params": {}}, {"map": "bidisc", "params": {"a": 1}}, {"map": "bidisc", "tol": -1}],
)
def test_certify_bad_config(tmp_path, doc, capsys):
    code, _ = run(tmp_path, "certify", doc)
    assert code == 1
    assert "config error" in capsys.readouterr().err


def test_unknown_neighbourhood_kind(tmp_path):
    code, _ = run(tmp_path, "rho", {"model": TORUS, "q0": [0, 0], "q1": [0.1, 0], "spec": {"kind": "blob"}})
    assert code == 1


def test_missing_config_file(tmp_path):
    assert main(["rho", "--config", str(tmp_path / "nope.json")]) == 1


def test_certify_local_ball(tmp_path):
    doc = {"model": SPHERE, "map": "local-ball", "params": {"q0": [0.01, 0.02], "d": 0.05, "rho_p": 0.95}}
    code, text = run(tmp_path, "certify", doc, "--samples", "256")
    assert code == 0 and json.loads(text)["map"] == "local-ball"


def test_rho_same_point(tmp_path):
    code, text = run(tmp_path, "rho", {"model": TORUS, "q0": [0.2, 0.2], "q1": [0.2, 0.2]})
    lines = text.splitlines()
    assert code == 0 and lines[0].startswith("q0,q1,d_g,lower,upper")
    assert lines[1].split('"')[-1].split(",")[2:4] == ["0.0", "0.0"]


def test_rho_json(tmp_path):
    code, text = run(tmp_path, "rho", {"model": TORUS, "pairs": [[[0, 0], [0.1, 0]]]}, "--format", "json")
    (b,) = json.loads(text)
    assert code == 0 and b["lower_source"] == "local-distance" and b["upper"] == pytest.approx(0.1)


def test_converge_torus_seven_rows(tmp_path):
    doc = {"model": TORUS, "curve": {"kind": "geodesic", "q": [0, 0], "v": [0.3, 0.4]}, "schedule": [2, 3, 4, 5, 6, 7, 8]}
    code, text = run(tmp_path, "converge", doc)
    rows = [line.split(",") for line in text.strip().splitlines()]
    assert code == 0 and rows[0] == ["k", "mesh", "sum_dg", "lower", "upper", "squeeze_factor", "riem_length"]
    assert len(rows) == 8
    gaps = [float(r[4]) - float(r[3]) for r in rows[1:]]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_converge_inadmissible_is_library_error(tmp_path):
    doc = {"model": TORUS, "curve": {"kind": "geodesic", "q": [0, 0], "v": [0.3, 0.4]}, "schedule": [0]}
    code, _ = run(tmp_path, "converge", doc)
    assert code == 3


def test_length_expression_curve(tmp_path):
    doc = {"model": SPHERE, "curve": {"kind": "expression", "coords": ["0.05*cos(2*pi*t)", "0.05*sin(2*pi*t)"]}, "k": 6}
    code, text = run(tmp_path, "length", doc, "--format", "json")
    out = json.loads(text)
    assert code == 0 and 0 < out["lower"] <= out["upper"] <= out["sum_dg"] + 1e-15


def test_dw_csv(tmp_path):
    doc = {"model": TORUS, "q0": [0, 0], "q1": [0.4, 0], "graph_size": 2048}
    code, text = run(tmp_path, "dw", doc)
    header, row = text.strip().splitlines()
    assert code == 0 and header.startswith("q0,q1,d_g,upper,lower_graph")
    assert float(row.split('"')[-1].split(",")[2]) >= 0.4


def test_capacities_bidisc(tmp_path):
    code, text = run(tmp_path, "capacities", {"bidisc": [[1, 1]], "samples": 1024})
    doc = json.loads(text)
    rep = doc["bidisc"][0]
    assert code == 0 and rep["gromov_lower"] == pytest.approx(4 * 0.999**2) and rep["cyl_upper"] == 4.0
    assert [s["ratio"] for s in doc["sphere_examples"]] == pytest.approx([1, 1, 1])


def test_audit_random_pairs(tmp_path):
    code, text = run(tmp_path, "audit", {"model": TORUS, "random_pairs": 30})
    doc = json.loads(text)
    assert code == 0 and doc["pass"] and doc["pairs"] == 30


def test_outputs_byte_identical(tmp_path):
    doc = {"model": SPHERE, "random_pairs": 5}
    _, first = run(tmp_path, "rho", doc, "--seed", "7")
    _, second = run(tmp_path, "rho", doc, "--seed", "7")
    assert first == second and first


def test_module_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "symplength", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for word in ("certify", "converge", "squeeze_factor", "SML_THREADS"):
        assert word in res.stdout


def test_bad_thread_setting(tmp_path, monkeypatch):
    monkeypatch.setenv("SML_THREADS", "many")
    code, _ = run(tmp_path, "dw", {"model": TORUS, "q0": [0, 0], "q1": [0.2, 0], "graph_size": 256})
    assert code != 0


@given(
    st.fixed_dictionaries(
        {"tol": st.floats(1e-12, 1.0), "schedule": st.lists(st.integers(1, 12), min_size=1, max_size=5, unique=True).map(sorted)}
    )
)
def test_config_roundtrip(doc):
    cfg = ExperimentConfig.from_json("converge", json.dumps(doc))
    assert json.loads(cfg.to_json()) == doc


@given(st.one_of(st.floats(max_value=0.0), st.just("x")))
def test_config_rejects_nonpositive_tolerance(tol):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("certify", json.dumps({"tol": tol}))
