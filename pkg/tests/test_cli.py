import json

import pytest

from mincerlab.cli import main
from mincerlab.csvio import COLUMNS, file_digest, read_microdata
from mincerlab.model_spec import ModelKind, build_design
from mincerlab.regression import fit_ols

from .conftest import FIXTURES

EXPECTED = json.loads((FIXTURES / "expected_diagnose.json").read_text())


@pytest.fixture(scope="module")
def datasets(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    out = {}
    for name in ("endogenous", "exogenous", "weak", "small"):
        path = root / f"{name}.csv"
        assert main(["simulate", str(FIXTURES / f"{name}.toml"), "--out", str(path)]) == 0
        out[name] = path
    return out


def run_json(argv, tmp_path, name="report.json"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if code == 0 else None)


def test_simulate_writes_header_and_rows(datasets):
    lines = datasets["small"].read_text().splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert len(lines) == 2001


def test_simulate_is_repeatable(tmp_path, datasets):
    again = tmp_path / "again.csv"
    main(["simulate", str(FIXTURES / "small.toml"), "--out", str(again)])
    assert file_digest(again) == file_digest(datasets["small"])


def test_simulate_seed_and_n_overrides(tmp_path, datasets):
    path = tmp_path / "s.csv"
    assert main(["simulate", str(FIXTURES / "small.toml"), "--out", str(path), "--seed", "4", "--n", "50"]) == 0
    assert len(path.read_text().splitlines()) == 51


def test_simulate_errors(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "nope.toml"), "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["simulate", str(FIXTURES / "bad_field.toml"), "--out", str(tmp_path / "x.csv")]) == 2
    assert "wage.noise_sd" in capsys.readouterr().err
    assert main(["simulate", str(FIXTURES / "small.toml"), "--out", str(tmp_path / "x.csv"), "--n", "0"]) == 2


def test_estimate_base_ols(tmp_path, datasets):
    code, rep = run_json(["estimate", str(datasets["small"]), "--deterministic"], tmp_path)
    assert code == 0
    assert rep["schema_version"] == "1" and rep["timestamp"] is None and rep["seed"] == 0
    fit = rep["models"][0]["fit"]
    assert len(fit["coefficients"]) == 8
    assert fit["column_labels"] == [
        "INTERCEPT", "EDU", "EXP", "EXP2", "GENDER", "MARRIED", "WTIME", "BIG_TOWN"]
    assert rep["inputs"]["data"]["sha256"] == file_digest(datasets["small"])


def test_estimate_2sls_blocks(tmp_path, datasets):
    code, rep = run_json(["estimate", str(datasets["small"]), "--method", "2sls", "--instrument", "urban",
                          "--deterministic"], tmp_path)
    assert code == 0
    assert {"hausman", "first_stage"} <= set(rep["iv_diagnostics"])
    assert [m["method"] for m in rep["models"]] == ["ols", "2sls", "ols"]
    assert rep["models"][1]["instruments"] == ["URBAN"]


@pytest.mark.parametrize("model, first", [("levels", "HAS_PROF"), ("fields", "HE_TECH")])
def test_estimate_dummy_models(tmp_path, datasets, model, first):
    code, rep = run_json(["estimate", str(datasets["small"]), "--model", model], tmp_path)
    assert code == 0
    assert rep["models"][0]["fit"]["column_labels"][1] == first
    assert rep["returns"]["kind"] == model


def test_estimate_report_round_trips_floats(tmp_path, datasets):
    _, rep = run_json(["estimate", str(datasets["small"])], tmp_path)
    X, y = build_design(read_microdata(datasets["small"]), ModelKind.BASE)
    direct = fit_ols(X, y)
    got = rep["models"][0]["fit"]["coefficients"]
    assert got == [float(v) for v in direct.coefficients]


def test_estimate_errors(tmp_path, datasets, capsys):
    assert main(["estimate", str(FIXTURES / "gymnasium_only.csv"), "--model", "levels"]) == 3
    assert "HAS_" in capsys.readouterr().err
    assert main(["estimate", str(datasets["small"]), "--method", "2sls"]) == 2
    assert main(["estimate", str(datasets["small"]), "--method", "2sls", "--instrument", "height"]) == 2
    assert main(["estimate", str(datasets["small"]), "--model", "levels", "--method", "2sls",
                 "--instrument", "urban"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join(COLUMNS) + "\n30,robot,1,40,52,1,1,Bachelor,Law,1000,1\n")
    assert main(["estimate", str(bad)]) == 2
    assert "row 1" in capsys.readouterr().err
    assert main(["estimate", str(tmp_path / "missing.csv")]) == 2


@pytest.mark.parametrize("name", ["endogenous", "exogenous", "weak"])
def test_diagnose_fixtures(tmp_path, datasets, name):
    code, rep = run_json(["diagnose", str(datasets[name]), "--instrument", "urban", "--deterministic"], tmp_path)
    assert code == 0
    want = EXPECTED[name]
    got = rep["iv_diagnostics"]
    assert got["hausman"]["stat"] == pytest.approx(want["hausman"]["stat"], rel=1e-6)
    assert got["first_stage"]["partial_f"] == pytest.approx(want["first_stage"]["partial_f"], rel=1e-6)
    p, weak = got["hausman"]["p_value"], got["first_stage"]["weak_instrument"]
    if name == "endogenous":
        assert p < 1e-3 and not weak
    elif name == "exogenous":
        assert p > 0.05 and not weak
    else:
        assert weak and any("weak instrument" in w for w in rep["warnings"])


def test_diagnose_full_scope(tmp_path, datasets):
    code, rep = run_json(["diagnose", str(datasets["small"]), "--instrument", "urban", "--scope", "full"], tmp_path)
    assert code == 0 and rep["iv_diagnostics"]["hausman"]["df"] >= 1


def test_returns_preset_levels(tmp_path):
    code, rep = run_json(["returns", "--preset", "paper-table6"], tmp_path)
    assert code == 0
    rows = {r["label"]: r for r in rep["returns"]["rows"]}
    for label, pub in {"Vocational": 13.7, "HighSchool": 31.6, "PostSecondary": 81.9,
                       "Bachelor": 157.2, "Masters": 221.5, "Doctorate": 165.5}.items():
        assert rows[label]["relative_effect"] == pytest.approx(pub, abs=0.5)
    statuses = {(c["quantity"], c["label"]): c["status"] for c in rep["published_comparison"]}
    assert statuses[("incremental_rate", "PostSecondary/HighSchool")] == "discrepancy"
    assert any("16.9" in w for w in rep["warnings"])


def test_returns_preset_fields_uniform(tmp_path):
    code, rep = run_json(["returns", "--preset", "paper-table9", "--durations", "uniform"], tmp_path)
    rows = {r["label"]: r["annualized_rate"] for r in rep["returns"]["rows"]}
    for label, pub in {"Technical": 29.48, "Economics": 29.34, "Medicine": 33.67,
                       "Law": 26.65, "Science": 26.33, "Arts": 20.59}.items():
        assert rows[label] == pytest.approx(pub, abs=0.1)


def test_returns_csv_and_errors(tmp_path):
    coef = tmp_path / "c.csv"
    coef.write_text("label,coefficient\nHAS_HE,0.9\nHAS_MA,1.1\n")
    out = tmp_path / "r.csv"
    assert main(["returns", "--coefficients", str(coef), "--format", "csv", "--out", str(out)]) == 0
    assert "incremental,Masters/Bachelor" in out.read_text()
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["returns", "--coefficients", str(empty)]) == 2
    coef.write_text("label,coefficient\nHAS_PHD,0.9\n")
    assert main(["returns", "--coefficients", str(coef)]) == 2
    assert main(["returns"]) == 2


def test_montecarlo_command(tmp_path):
    code, rep = run_json(["montecarlo", str(FIXTURES / "small.toml"), "--reps", "5", "--estimator", "2sls",
                          "--deterministic"], tmp_path)
    assert code == 0
    assert rep["summary"]["reps"] == 5 and rep["summary"]["failed"] == 0
