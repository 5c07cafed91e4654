import json
from pathlib import Path

import pytest

from allelofear import ConfigError
from allelofear.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from allelofear.config import load_config, load_config_text

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def run(capsys, argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# ------------------------------------------------------------------ config


def test_decimal_strings_echo_exactly():
    cfg = load_config_text('{"analysis": "equilibria", "params": {"a": "0.1000", "b": 0.30, "c": "1e-1", "m": "0"}}')
    assert cfg.params.a == 0.1 and cfg.params.k == 0.0
    echo = cfg.echo()
    assert echo["params"] == {"a": "0.1000", "b": "0.30", "c": "1e-1", "m": "0"}


def test_echo_round_trips():
    cfg = load_config(CONFIGS / "heterogeneous_fear_pde.json")
    again = load_config_text(json.dumps(cfg.echo()))
    assert again.params == cfg.params
    assert again.options == cfg.options
    assert again.echo() == cfg.echo()


def test_raw_parameters_need_the_flag():
    raw = {"r1": 1, "r2": 2, "alpha1": 1, "alpha2": 2, "beta1": 1, "beta2": 1, "eta": 1, "xi": 1}
    cfg = load_config_text(json.dumps({"analysis": "equilibria", "raw_params": raw, "nondimensionalize": True}))
    assert cfg.params.b == 0.5
    with pytest.raises(ConfigError):
        load_config_text(json.dumps({"analysis": "equilibria", "raw_params": raw}))


@pytest.mark.parametrize("doc,where", [
    ({"analysis": "equilibria"}, "config"),
    ({"analysis": "nonsense", "params": {"a": 1, "b": 1, "c": 1, "m": 0}}, "config.analysis"),
    ({"analysis": "equilibria", "params": {"a": 1, "b": 1, "c": 1}}, "config.params"),
    ({"analysis": "equilibria", "params": {"a": "x", "b": 1, "c": 1, "m": 0}}, "config.params.a"),
    ({"analysis": "equilibria", "params": {"a": -1, "b": 1, "c": 1, "m": 0}}, "config.params"),
    ({"analysis": "simulate", "params": {"a": 1, "b": 1, "c": 1, "m": 0}, "options": {"bogus": 1}}, "config.options"),
])
def test_invalid_configs_name_the_field(doc, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        load_config_text(json.dumps(doc))


def test_missing_tabulated_file(tmp_path):
    doc = {"analysis": "simulate", "params": {"a": 1, "b": 1, "c": 1, "m": 0},
           "options": {"mode": "pde", "fear_field": {"kind": "tabulated", "file": "nowhere.csv"}}}
    with pytest.raises(ConfigError, match="no such file"):
        load_config(write(tmp_path, doc))


def test_invalid_json():
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config_text("{")


# --------------------------------------------------------------------- CLI


def test_equilibria_command(capsys):
    code, out, _ = run(capsys, ["equilibria", "--config", CONFIGS / "strong_toxin_equilibria.json"])
    assert code == EXIT_OK
    rep = json.loads(out)
    kinds = {e["label"]: e["kind"] for e in rep["results"]["equilibria"]}
    assert kinds == {"E0": "Source", "E1": "HyperbolicSaddle", "E2": "HyperbolicSaddle", "E2*": "InteriorStableNode"}
    assert rep["tool"] == "allelofear" and rep["config"]["params"]["a"] == "0.8"


def test_saddle_node_equilibria_multiplicity(capsys):
    code, out, _ = run(capsys, ["equilibria", "--config", CONFIGS / "saddle_node_equilibria.json"])
    assert code == EXIT_OK
    eq = [e for e in json.loads(out)["results"]["equilibria"] if e["label"] == "E3*"]
    assert len(eq) == 1 and eq[0]["multiplicity"] == 2


def test_single_saddle_row(tmp_path, capsys):
    doc = {"analysis": "equilibria", "params": {"a": "0.3", "b": "0.2", "c": "1.1", "k": "2.5", "m": "0.5"}}
    code, out, _ = run(capsys, ["equilibria", "--config", write(tmp_path, doc)])
    labels = [e["label"] for e in json.loads(out)["results"]["equilibria"] if e["label"].endswith("*")]
    assert code == EXIT_OK and labels == ["E1*"]


@pytest.mark.parametrize("k,outcome", [("1.1", "coexistence"), ("4", "y-extinction")])
def test_simulate_ode_outcomes(tmp_path, capsys, k, outcome):
    doc = {"analysis": "simulate", "params": {"a": "0.3", "b": "0.5", "c": "1.1", "k": k, "m": "0.15"},
           "options": {"mode": "ode", "init": ["0.5", "0.5"], "t_end": "1000"}}
    code, out, _ = run(capsys, ["simulate", "--config", write(tmp_path, doc), "--out", tmp_path / "o"])
    assert code == EXIT_OK
    assert json.loads(out)["outcome"] == outcome
    lines = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,x,y"
    # every field is written with 17 significant digits, so it is its own round trip
    for field in lines[-1].split(","):
        assert field == format(float(field), ".17g")


def test_simulate_pde_outcome(tmp_path, capsys):
    doc = json.loads((CONFIGS / "heterogeneous_fear_pde.json").read_text())
    doc["options"]["n"] = 200
    code, out, _ = run(capsys, ["simulate", "--config", write(tmp_path, doc), "--out", tmp_path / "o"])
    assert code == EXIT_OK
    assert json.loads(out)["outcome"] == "(1,0) uniform"
    assert (tmp_path / "o" / "snapshots.csv").read_text().startswith("t,x,u,v\n")
    assert (tmp_path / "o" / "fear_field.csv").read_text().startswith("x,k\n")


def test_bifurcation_commands(capsys):
    code, out, _ = run(capsys, ["bifurcation", "--config", CONFIGS / "strong_toxin_kscan.json"])
    rep = json.loads(out)
    assert code == EXIT_OK
    assert [e["kind"] for e in rep["results"]["events"]] == ["transcritical"]
    assert abs(rep["results"]["events"][0]["value"] - 0.25) < 1e-6
    assert rep["results"]["events"][0]["transversality"]["verdict"] == "satisfied"

    _, out, _ = run(capsys, ["bifurcation", "--config", CONFIGS / "saddle_node_mscan.json"])
    ev = json.loads(out)["results"]["events"]
    assert [e["kind"] for e in ev] == ["saddle-node"]
    assert abs(ev[0]["value"] - 0.1262554731) < 1e-6

    _, out, _ = run(capsys, ["bifurcation", "--config", CONFIGS / "pitchfork_cscan.json"])
    ev = json.loads(out)["results"]["events"]
    pf = [e for e in ev if e["kind"] == "pitchfork"]
    assert len(pf) == 1 and abs(pf[0]["value"] - 1.0) < 1e-6
    assert pf[0]["transversality"]["verdict"] == "degenerate-to-pitchfork"


def test_outputs_are_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        assert run(capsys, ["bifurcation", "--config", CONFIGS / "strong_toxin_kscan.json",
                            "--out", tmp_path / d])[0] == EXIT_OK
    docs = []
    for d in ("a", "b"):
        doc = json.loads((tmp_path / d / "bifurcation.json").read_text())
        doc.pop("timestamp")
        docs.append(json.dumps(doc, sort_keys=True))
    assert docs[0] == docs[1]
    assert (tmp_path / "a" / "events.csv").read_bytes() == (tmp_path / "b" / "events.csv").read_bytes()


def test_format_restriction(tmp_path, capsys):
    run(capsys, ["equilibria", "--config", CONFIGS / "strong_toxin_equilibria.json",
                 "--out", tmp_path, "--format", "csv"])
    assert sorted(p.name for p in tmp_path.iterdir()) == ["equilibria.csv"]


def test_config_error_exit_code(tmp_path, capsys):
    doc = {"analysis": "equilibria", "params": {"a": "-1", "b": "1", "c": "1", "m": "0"}}
    code, _, err = run(capsys, ["equilibria", "--config", write(tmp_path, doc)])
    assert code == EXIT_CONFIG and "config.params" in err
    code, _, err = run(capsys, ["simulate", "--config", CONFIGS / "strong_toxin_equilibria.json"])
    assert code == EXIT_CONFIG and "config.analysis" in err
    code, _, _ = run(capsys, ["equilibria", "--config", tmp_path / "absent.json"])
    assert code == EXIT_CONFIG


def test_numerical_failure_exit_code(tmp_path, capsys, monkeypatch):
    # lower the blow-up guard below the carrying capacity so the tripwire fires
    from allelofear import pde

    monkeypatch.setattr(pde, "BLOWUP", 0.5)
    doc = {"analysis": "simulate", "params": {"a": "0.3", "b": "0.2", "c": "1.1", "m": "0.15"},
           "options": {"mode": "pde", "init": ["0.1", "0.1"], "t_end": "50", "n": 32,
                       "fear_field": {"kind": "constant", "value": "1"}}}
    code, _, err = run(capsys, ["simulate", "--config", write(tmp_path, doc)])
    assert code == EXIT_NUMERIC and "numerical failure" in err


def test_unknown_verify_suite(capsys):
    code, _, err = run(capsys, ["verify", "no-such-suite"])
    assert code == EXIT_CONFIG


def test_verify_single_suite(tmp_path, capsys):
    code, out, _ = run(capsys, ["verify", "saddle-node", "--out", tmp_path])
    assert code == EXIT_OK
    assert "[PASS]" in out and "1/1 criteria passed" in out
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["summary"] == {"passed": True, "failed": 0}


def test_schema_command(capsys):
    code, out, _ = run(capsys, ["schema"])
    assert code == EXIT_OK and json.loads(out)["title"] == "allelofear run configuration"
