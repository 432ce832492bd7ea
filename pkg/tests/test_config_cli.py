import csv
import io
import json

import numpy as np
import pytest

import wqed.cli as cli
from wqed.config import RunConfig, expand_grid
from wqed.errors import ConfigError
from wqed.verification import SuiteResult


def write_config(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(tmp_path, command, doc, *extra):
    out = tmp_path / f"{command}.out"
    code = cli.main([command, "--config", write_config(tmp_path, doc), "--out", str(out), *extra])
    return code, (out.read_text() if out.exists() else "")


def table(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def header(text):
    return {ln[2:].split(":", 1)[0]: json.loads(ln.split(":", 1)[1])
            for ln in text.splitlines() if ln.startswith("# ")}


# --- config ---------------------------------------------------------------------

def test_expand_grid():
    assert expand_grid({"start": 0, "stop": 1, "count": 5}) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert expand_grid([3, 1]) == [3.0, 1.0]
    assert expand_grid(None) == []


@pytest.mark.parametrize("doc", [
    {},
    {"params": {"N": 2, "Q": 1}},
    {"params": {"N": 0}},
    {"params": {"N": 2}, "grids": {"alpha": "middlest"}},
    {"params": {"N": 2}, "mode": {"pulse": "gaussian"}},
    {"params": {"N": 2}, "output": {"format": "xml"}},
    {"params": {"N": 2, "kappa": 0}},
    {"params": {"N": 2}, "grids": {"h_over_J": {"start": 0, "stop": 1}}},
])
def test_invalid_configs_rejected(doc):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(doc)


def test_resolved_config_is_complete():
    cfg = RunConfig.from_dict({"params": {"N": 3, "U": 2},
                               "grids": {"h_over_J": {"start": 0, "stop": 2, "count": 3}},
                               "workers": 4})
    res = cfg.resolved()
    assert res["grids"]["h_over_J"] == [0.0, 1.0, 2.0]
    assert res["params"]["kappa"] == 0.25 and res["params"]["sigma"] == 0.01
    assert res["mode"]["pulse"] == "lorentzian"
    assert res["integration"] == {"rel_tol": 1e-6, "max_subdivisions": 200}
    assert "workers" not in res
    assert RunConfig.from_dict(res).resolved() == res


# --- exit codes -----------------------------------------------------------------

def test_schema_error_exits_before_compute(tmp_path, capsys):
    code, text = run(tmp_path, "t2-map", {"params": {"N": 2}, "bogus": 1})
    assert code == 1 and text == ""
    assert "config error" in capsys.readouterr().err


def test_unreadable_and_malformed_configs(tmp_path):
    assert cli.main(["spectrum", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["spectrum", "--config", str(bad)]) == 1


def test_usage_errors_exit_as_config_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["t2-map"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["spectrum", "--config", "x.json", "--pulse", "square"])
    assert exc.value.code == 1


def test_missing_grid_is_config_error(tmp_path):
    assert run(tmp_path, "t2-map", {"params": {"N": 2}})[0] == 1
    assert run(tmp_path, "scaling", {"params": {"N": 2}, "grids": {"h_over_J": [1], "N": [2]}})[0] == 1


def test_global_failure_exits_2(tmp_path):
    # every cell is a localised one where the first-order delta formula fails
    doc = {"params": {"N": 4, "U": 3.5}, "grids": {"h_over_J": [2.0], "alpha": [5]},
           "mode": {"pulse": "delta"}}
    code, text = run(tmp_path, "t2-map", doc)
    assert code == 2
    assert table(text)[0]["flags"] == "error:ProbabilityOutOfRange"


# --- spectrum -------------------------------------------------------------------

def test_spectrum_two_sites(tmp_path):
    code, text = run(tmp_path, "spectrum", {"params": {"N": 2, "h": 0}})
    assert code == 0
    rows = table(text)
    one = [(float(r["re_E"]), float(r["im_E"])) for r in rows if r["sector"] == "1"]
    np.testing.assert_allclose(one, [(-1, 0), (1, 0)], atol=1e-12)
    assert [r["alpha"] for r in rows] == ["1", "2", "1", "2", "3"]


def test_spectrum_row_count(tmp_path):
    code, text = run(tmp_path, "spectrum", {"params": {"N": 15, "U": 3.5, "h": 1}})
    assert code == 0
    rows = table(text)
    assert sum(r["sector"] == "1" for r in rows) == 15
    assert sum(r["sector"] == "2" for r in rows) == 120


def test_effective_spectrum_is_passive(tmp_path):
    doc = {"params": {"N": 6, "U": 2, "h": 1.5}, "mode": {"spectrum": "effective"}}
    code, text = run(tmp_path, "spectrum", doc)
    assert code == 0
    im = np.array([float(r["im_E"]) for r in table(text)])
    assert np.all(im <= 0) and np.any(im < 0)


# --- maps -----------------------------------------------------------------------

def test_sw_check_reports_transition(tmp_path):
    code, text = run(tmp_path, "sw-check", {"params": {"N": 8, "U": 10, "h": 0.5}})
    assert code == 0
    meta = header(text)
    assert meta["predicted_transition"] == pytest.approx(0.2)
    assert meta["within_bound"] is True
    assert len(table(text)) == 8


def test_pr_map_decoupled_sites(tmp_path):
    doc = {"params": {"N": 4, "U": 3.5, "J": 0},
           "grids": {"h_over_J": [0, 1, 2], "alpha": "all"}, "mode": {"pulse": "delta"}}
    code, text = run(tmp_path, "pr-map", doc)
    assert code == 0
    rows = table(text)
    assert len(rows) == 3 * 10
    assert all(float(r["value"]) == pytest.approx(0.0, abs=1e-12) for r in rows)


def test_t2_map_header_replays(tmp_path):
    doc = {"params": {"N": 3, "U": 2}, "grids": {"h_over_J": [0.5], "alpha": [1, 6]},
           "mode": {"pulse": "delta"}}
    code, text = run(tmp_path, "t2-map", doc)
    assert code == 0
    meta = header(text)
    assert meta["code_version"] == cli.__version__
    replay = tmp_path / "replay.json"
    replay.write_text(json.dumps(meta["config"]))
    out2 = tmp_path / "again.csv"
    assert cli.main(["t2-map", "--config", str(replay), "--out", str(out2)]) == 0
    assert out2.read_text() == text


def test_t2_map_serial_and_parallel_are_identical(tmp_path):
    doc = {"params": {"N": 3, "U": 2}, "grids": {"h_over_J": [0.0, 1.0, 2.5], "alpha": "all"}}
    _, serial = run(tmp_path, "t2-map", doc, "--workers", "1")
    code, parallel = run(tmp_path, "t2-map", doc, "--workers", "3")
    assert code == 0 and serial == parallel
    assert len(table(serial)) == 18


def test_json_output(tmp_path):
    doc = {"params": {"N": 2, "U": 1}, "grids": {"h_over_J": [0.2], "alpha": "highest"},
           "mode": {"pulse": "delta"}}
    code, text = run(tmp_path, "t2coh-map", doc, "--format", "json")
    assert code == 0
    out = json.loads(text)
    assert out["columns"] == ["h_over_J", "alpha", "value", "flags"]
    assert out["records"][0]["alpha"] == 3 and 0 <= out["records"][0]["value"] <= 1


def test_scaling_and_loss_tables(tmp_path):
    doc = {"params": {"N": 2, "U": 3.5}, "grids": {"h_over_J": [0.3], "alpha": "highest", "N": [2, 3]},
           "mode": {"pulse": "delta"}}
    code, text = run(tmp_path, "scaling", doc)
    assert code == 0
    assert [r["N"] for r in table(text)] == ["2", "3"]
    assert header(text)["sw_transition"] == pytest.approx(2 / 3.5)
    doc = {"params": {"N": 3, "U": 3.5}, "grids": {"h_over_J": [0.3], "alpha": [2], "gamma": [0, 0.1]},
           "mode": {"pulse": "delta"}}
    code, text = run(tmp_path, "loss-map", doc)
    assert code == 0
    vals = [float(r["value"]) for r in table(text)]
    assert vals[1] < vals[0]


def test_scaling_rejects_alpha_lists(tmp_path):
    doc = {"params": {"N": 2}, "grids": {"h_over_J": [0.3], "alpha": [1], "N": [2]}}
    assert run(tmp_path, "scaling", doc)[0] == 1


# --- verify ---------------------------------------------------------------------

def test_verify_passes_on_small_chain(tmp_path):
    doc = {"params": {"N": 2, "U": 3}, "mode": {"suites": ["null", "unitarity"]}}
    code, text = run(tmp_path, "verify", doc)
    assert code == 0
    rows = {r["suite"]: r for r in table(text)}
    assert rows["null"]["status"] == "PASS" and float(rows["null"]["max_deviation"]) < 1e-9
    assert float(rows["unitarity_two_photon"]["max_deviation"]) < 1e-4


def test_verify_guards_size(tmp_path):
    assert run(tmp_path, "verify", {"params": {"N": 5}})[0] == 1


def test_verify_failure_exits_3(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "run_suites", lambda p, s: [SuiteResult("null", 1.0, 1e-9)])
    code, text = run(tmp_path, "verify", {"params": {"N": 2}})
    assert code == 3
    assert table(text)[0]["status"] == "FAIL"
