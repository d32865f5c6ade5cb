import csv
import hashlib
import json

import pytest

from recurmix.cli import EXIT_CONFIG, EXIT_NO_RECURRENCE, EXIT_OK, main
from recurmix.config import ExperimentConfig, load_config, parse_config
from recurmix.errors import ConfigError
from recurmix.targets import TwoMode

BASE = {
    "target": {"kind": "multi_normal", "d": 3},
    "subsets": {"component": 1, "a": -1.0, "b": 1.0},
    "chain": {"n_iter": 20000, "seed": 3},
}


def _with(**sections):
    cfg = json.loads(json.dumps(BASE))
    for k, v in sections.items():
        if v is None:
            cfg.pop(k, None)
        else:
            cfg[k] = v
    return cfg


def _write(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


# -- configuration ------------------------------------------------------------------------

def test_config_round_trip():
    cfg = parse_config(_with(sweep={"log_grid": {"center": 0.9}}))
    again = parse_config(cfg.to_json())
    assert again == cfg
    assert len(cfg.sweep.grid()) == 11


@pytest.mark.parametrize("bad", [
    _with(extra=1),
    _with(chain={"n_iter": 100, "seeed": 1}),
    _with(target={"kind": "multi_normal", "d": 0}),
    _with(target={"kind": "banana"}),
    _with(subsets={"component": 0, "a": 1.0, "b": -1.0}),
    _with(subsets={"component": 5, "a": -1.0, "b": 1.0}),
    _with(subsets=None),
    _with(chain={"n_iter": 100, "burn_in": 200}),
    _with(chain={"n_iter": 100, "seed": -1}),
    _with(chain={"n_iter": 100, "sampler": "cycle"}),
    _with(target={"kind": "cycle", "n": 2}),
    _with(sweep={"sigma_grid": []}),
    _with(sweep={"sigma_grid": [1.0, 0.5]}),
    _with(sweep={"sigma_grid": [1.0], "log_grid": {"center": 1.0}}),
    "{not json",
])
def test_invalid_configs_raise_config_error(bad):
    with pytest.raises(ConfigError):
        parse_config(json.dumps(bad) if isinstance(bad, dict) else bad)


def test_builders():
    cfg = parse_config(_with(target={"kind": "two_mode", "a": 4.0, "phi_variance": 0.5},
                             subsets={"component": 0, "a": 1.0, "b": 3.0},
                             proposal={"sigma2": 5.5, "phi_variance": 0.5},
                             sweep={"sigma_grid": [4.0, 5.5]}))
    assert cfg.build_target() == TwoMode(4.0, 0.5)
    assert cfg.build_subsets().pi_A is not None
    assert cfg.build_proposal().sigma2 == 5.5 and cfg.build_proposal(2.0).sigma2 == 2.0
    chain = cfg.build_chain(3, seed=9)
    assert chain.stream_key == (3,) and chain.seed == 9 and chain.burn_in == 2000
    assert cfg.build_sweep().sigma_grid == (4.0, 5.5)


def test_build_sweep_requires_section_and_length():
    with pytest.raises(ConfigError):
        parse_config(BASE).build_sweep()
    short = parse_config(_with(chain={"n_iter": 500}, sweep={"sigma_grid": [1.0]}))
    with pytest.raises(ConfigError):
        short.build_sweep()


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


def test_cycle_config_is_consistent():
    cfg = parse_config({"target": {"kind": "cycle", "n": 4}, "chain": {"n_iter": 1000, "sampler": "cycle"}})
    assert isinstance(cfg, ExperimentConfig) and cfg.build_subsets() is None


# -- command line --------------------------------------------------------------------------

def test_simulate_writes_declared_outputs(tmp_path, two_mode_config):
    path, _ = two_mode_config
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(path), "--out", str(out)]) == EXIT_OK
    names = {p.name for p in out.iterdir()}
    assert names == {"intervals.csv", "summary.json", "manifest.json", "fits.json", "bounds.json",
                     "variance_curve.csv"}
    summary = json.loads((out / "summary.json").read_text())
    for key in ("m", "M_hat", "H_hat", "acceptance_rate", "S1"):
        assert summary[key] is not None
    assert len(summary["chains"]) == 3
    with open(out / "intervals.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["chain_id"] for r in rows} == {"0", "1", "2"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["chain"]["seed"] == 11
    assert "PCG64DXSM" in manifest["rng"]["algorithm"]
    for entry in manifest["files"]:
        assert hashlib.sha256((out / entry["path"]).read_bytes()).hexdigest() == entry["sha256"]


def test_seed_flag_changes_output(tmp_path, two_mode_config):
    path, _ = two_mode_config
    main(["simulate", "--config", str(path), "--out", str(tmp_path / "a")])
    main(["simulate", "--config", str(path), "--out", str(tmp_path / "b"), "--seed", "12"])
    assert (tmp_path / "a" / "intervals.csv").read_bytes() != (tmp_path / "b" / "intervals.csv").read_bytes()
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["rng"]["seed"] == 12


def test_jobs_do_not_change_output(tmp_path, two_mode_config):
    path, _ = two_mode_config
    main(["simulate", "--config", str(path), "--out", str(tmp_path / "a")])
    main(["simulate", "--config", str(path), "--out", str(tmp_path / "b"), "--jobs", "3"])
    for name in ("intervals.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_json_format(tmp_path, two_mode_config):
    path, _ = two_mode_config
    out = tmp_path / "j"
    assert main(["simulate", "--config", str(path), "--out", str(out), "--format", "json"]) == EXIT_OK
    rows = json.loads((out / "intervals.json").read_text())
    assert set(rows[0]) == {"chain_id", "k", "start_index", "end_index", "L", "P", "R"}
    assert main(["sweep", "--config", str(path), "--out", str(out), "--format", "json"]) == EXIT_OK
    assert json.loads((out / "sweep.json").read_text())[0]["sigma2"] == 2.0


def test_sweep_outputs(tmp_path, two_mode_config):
    path, _ = two_mode_config
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(path), "--out", str(out)]) == EXIT_OK
    assert (out / "sweep.csv").read_text().startswith("sigma2,acceptance_rate")
    opt = json.loads((out / "optimum.json").read_text())
    assert opt["sigma2"] in (2.0, 3.25, 5.0)


def test_fit_and_bounds_from_intervals(tmp_path, two_mode_config):
    path, _ = two_mode_config
    sim = tmp_path / "sim"
    main(["simulate", "--config", str(path), "--out", str(sim)])
    assert main(["fit", "--intervals", str(sim / "intervals.csv"), "--out", str(tmp_path / "f")]) == EXIT_OK
    fits = json.loads((tmp_path / "f" / "fits.json").read_text())
    assert fits["L"]["family"] == "weibull" and fits["R"]["family"] == "exponential"
    pA = json.loads((sim / "summary.json").read_text())["pi_A"]
    code = main(["bounds", "--intervals", str(sim / "intervals.csv"), "--pi-a", str(pA), "--k", "5",
                 "--out", str(tmp_path / "b")])
    assert code == EXIT_OK
    from_csv = json.loads((tmp_path / "b" / "bounds.json").read_text())
    from_sim = json.loads((sim / "bounds.json").read_text())
    assert from_csv["empirical_var"] == pytest.approx(from_sim["empirical_var"], rel=1e-12)
    assert "diagnostics" in from_csv


def test_exit_code_no_recurrence(tmp_path, capsys):
    cfg = _with(subsets={"component": 1, "a": -4.0, "b": 4.0}, chain={"n_iter": 200, "seed": 1})
    code = main(["simulate", "--config", str(_write(tmp_path, cfg)), "--out", str(tmp_path / "o")])
    assert code == EXIT_NO_RECURRENCE
    assert "n_iter" in capsys.readouterr().err


@pytest.mark.parametrize("cfg", [_with(extra=1), _with(sweep={"sigma_grid": []})])
def test_exit_code_config(tmp_path, cfg, capsys):
    p = _write(tmp_path, cfg)
    assert main(["sweep", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_exit_code_missing_config_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unknown_reproduce_name_lists_choices(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "table9", "--out", str(tmp_path)])
    assert exc.value.code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "table1" in err and "cauchy" in err


def test_bounds_needs_an_input(tmp_path):
    assert main(["bounds", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["bounds", "--intervals", "x.csv", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_reproduce_writes_comparison(tmp_path):
    out = tmp_path / "r"
    assert main(["reproduce", "cycle", "--out", str(out)]) == EXIT_OK
    header = (out / "cycle.csv").read_text().splitlines()[0]
    assert header == "experiment,setting,quantity,ours,se,published,rel_dev"


def test_cycle_simulation_via_cli(tmp_path):
    cfg = {"target": {"kind": "cycle", "n": 2}, "chain": {"n_iter": 50000, "sampler": "cycle"}}
    out = tmp_path / "c"
    assert main(["simulate", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "summary.json").read_text())["H_hat"] < 1


def test_independence_sampler_via_cli(tmp_path):
    cfg = _with(chain={"n_iter": 50000, "sampler": "independence"})
    out = tmp_path / "i"
    assert main(["simulate", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == EXIT_OK
    s = json.loads((out / "summary.json").read_text())
    assert s["acceptance_rate"] == 1.0 and s["H_hat"] == pytest.approx(1.0, abs=0.1)
