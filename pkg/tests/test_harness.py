"""Harness: generation determinism, presets, CSV/JSON formats, CLI verbs."""

import dataclasses
import json
import os

import numpy as np
import pytest

from klprox.cli import main as cli_main
from klprox.core import ConfigurationError, SolverTrace
from klprox.harness import (
    PRESETS,
    ProblemConfig,
    RunReport,
    build_config,
    emit_csv,
    emit_json,
    generate_problem,
    load_report,
    parse_config_file,
    read_trace_csv,
    run_experiment,
    sweep_threads,
)


def small_trace():
    return SolverTrace(
        iterates=np.arange(6.0).reshape(3, 2),
        objectives=np.array([3.0, 2.0, 1.5]),
        residuals=np.array([1.0, 0.5, 0.25]),
        subgrad_dists=np.array([1.5, np.nan, 0.5]),
        steps=np.array([0.1, 0.1, 0.1]),
        converged=False,
        tol=1e-10,
    )


def test_generation_is_bit_deterministic():
    cfg = ProblemConfig(preset="lasso", seed=7)
    obj1, x01, res1 = generate_problem(cfg)
    obj2, x02, res2 = generate_problem(cfg)
    np.testing.assert_array_equal(obj1.smooth.A, obj2.smooth.A)
    np.testing.assert_array_equal(obj1.smooth.b, obj2.smooth.b)
    np.testing.assert_array_equal(x01, x02)
    assert res1["mu"] == res2["mu"]


def test_planted_signal_has_requested_sparsity():
    for preset in ("lasso", "l0-ball-ls", "sparse-simplex-ls"):
        cfg = dataclasses.replace(ProblemConfig(preset=preset, seed=11), sparsity=5, n=50)
        _, _, resolved = generate_problem(cfg)
        assert resolved["signal_nnz"] == 5
        signal = np.array(resolved["signal"])
        assert np.count_nonzero(signal) == 5


def test_lasso_preset_mu_and_nontrivial_support():
    cfg = ProblemConfig(preset="lasso", seed=1)
    obj, x0, resolved = generate_problem(cfg)
    expected_mu = 0.1 * np.max(np.abs(obj.smooth.gradient(np.zeros(obj.n))))
    assert resolved["mu"] == pytest.approx(expected_mu, rel=1e-12)
    report, trace = run_experiment(cfg)
    assert report.converged
    assert np.count_nonzero(trace.final_iterate) > 0


def test_every_preset_converges_within_budget():
    for name in PRESETS:
        report, _ = run_experiment(ProblemConfig(preset=name, seed=0))
        assert report.converged, name
        assert report.iterations <= ProblemConfig().max_iters


def test_group_ball_preset_satisfies_relaxation_hypothesis():
    # the group-ball model carries a KL-1/2 certificate only when the
    # constraint genuinely binds, i.e. the infimum over the ball exceeds the
    # unconstrained smooth infimum; verify before trusting the rate
    cfg = ProblemConfig(preset="group-ball-ls", seed=1)
    report, trace = run_experiment(cfg)
    obj, _, _ = generate_problem(cfg)
    A, b = obj.smooth.A, obj.smooth.b
    unconstrained = 0.5 * float(
        np.sum((A @ np.linalg.lstsq(A, b, rcond=None)[0] - b) ** 2)
    )
    assert report.final_objective > unconstrained + 1e-8
    assert report.converged
    assert report.rate is not None and report.rate["rho_hat"] < 1.0
    # the solution sits on the constraint boundary
    gauge = obj.reg.gauge(trace.final_iterate)
    assert gauge == pytest.approx(obj.reg.sigma, rel=1e-6)


def test_poisson_problem_generation():
    cfg = dataclasses.replace(ProblemConfig(seed=3, m=12, n=8, sparsity=2), loss="poisson")
    obj, x0, resolved = generate_problem(cfg)
    assert obj.smooth.kind == "poisson"
    assert np.all(np.isfinite(obj.smooth.b)) and np.all(obj.smooth.b >= 0)
    assert np.isfinite(resolved["lipschitz"])
    obj2, _, _ = generate_problem(cfg)
    np.testing.assert_array_equal(obj.smooth.b, obj2.smooth.b)


def test_report_determinism_up_to_wall_time():
    cfg = ProblemConfig(preset="mcp-ls", seed=5)
    rep1, _ = run_experiment(cfg)
    rep2, _ = run_experiment(cfg)
    d1, d2 = rep1.to_dict(), rep2.to_dict()
    d1.pop("wall_time_s")
    d2.pop("wall_time_s")
    assert d1 == d2


def test_unknown_preset_and_config_keys_are_named():
    with pytest.raises(ConfigurationError, match="unknown preset"):
        generate_problem(ProblemConfig(preset="nonsense"))
    with pytest.raises(ConfigurationError, match="frobnicate"):
        build_config({}, {"frobnicate": "1"})


def test_invalid_windows_are_rejected_with_constraint_named():
    with pytest.raises(ConfigurationError, match="sparsity"):
        generate_problem(ProblemConfig(sparsity=0))
    with pytest.raises(ConfigurationError, match="beta"):
        generate_problem(dataclasses.replace(ProblemConfig(), beta=1.5))
    with pytest.raises(ConfigurationError, match="p"):
        generate_problem(dataclasses.replace(ProblemConfig(), p=3))


def test_csv_format_and_na_markers(tmp_path):
    path = tmp_path / "trace.csv"
    emit_csv(small_trace(), str(path))
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "iter,objective,residual,subgrad_dist,step"
    assert len(lines) == 4  # header + one row per recorded iterate
    assert lines[2].split(",")[3] == "NA"
    cols = read_trace_csv(str(path))
    np.testing.assert_allclose(cols["objective"], [3.0, 2.0, 1.5])
    assert np.isnan(cols["subgrad_dist"][1])
    np.testing.assert_allclose(cols["subgrad_dist"][[0, 2]], [1.5, 0.5])


def test_csv_round_trips_floats_exactly(tmp_path):
    cfg = ProblemConfig(preset="lasso", seed=2, max_iters=40, tol=1e-300)
    _, trace = run_experiment(cfg)
    path = tmp_path / "t.csv"
    emit_csv(trace, str(path))
    cols = read_trace_csv(str(path))
    np.testing.assert_array_equal(cols["objective"], trace.objectives)
    np.testing.assert_array_equal(cols["residual"], trace.residuals)


def test_json_report_round_trip(tmp_path):
    report, _ = run_experiment(ProblemConfig(preset="lasso", seed=3, max_iters=500))
    path = tmp_path / "report.json"
    emit_json(report, str(path))
    loaded = load_report(str(path))
    assert loaded == report
    raw = json.loads(path.read_text())
    assert raw["schema_version"] == 1


def test_emit_errors_echo_the_path(tmp_path):
    with pytest.raises(OSError, match="no/such/dir"):
        emit_csv(small_trace(), "no/such/dir/trace.csv")
    with pytest.raises(OSError, match="no/such/dir"):
        emit_json(RunReport(1, {}, {}, 0, True, 0.0, 0.0, None, None, 0.0), "no/such/dir/r.json")


def test_config_file_parsing_and_flag_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\npreset = lasso\nseed = 9\nmax_iters = 123\n")
    values = parse_config_file(str(cfg_file))
    cfg = build_config(values, {"seed": 4})
    assert cfg.preset == "lasso"
    assert cfg.seed == 4  # flag wins
    assert cfg.max_iters == 123
    with pytest.raises(ConfigurationError):
        build_config({"tol": "not-a-float"}, {})
    bad = tmp_path / "bad.cfg"
    bad.write_text("just words\n")
    with pytest.raises(ConfigurationError):
        parse_config_file(str(bad))


def test_bool_coercion_in_config():
    cfg = build_config({"record_subgrad": "false", "fit_kl": "YES"}, {})
    assert cfg.record_subgrad is False
    assert cfg.fit_kl is True
    with pytest.raises(ConfigurationError):
        build_config({"fit_kl": "maybe"}, {})


def test_sweep_threads_env(monkeypatch):
    monkeypatch.setenv("KLPROX_THREADS", "3")
    assert sweep_threads() == 3
    monkeypatch.setenv("KLPROX_THREADS", "zero")
    with pytest.raises(ConfigurationError):
        sweep_threads()
    monkeypatch.delenv("KLPROX_THREADS")
    assert sweep_threads(2) == 2


# ------------------------------------------------------------------ CLI


def test_cli_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli_main(["run", "--preset", "lasso", "--seed", "1", "--out", str(out),
                     "--max-iters", "2000"])
    assert code == 0
    assert (out / "trace.csv").exists()
    assert (out / "report.json").exists()
    text = capsys.readouterr().out
    assert "converged" in text
    report = load_report(str(out / "report.json"))
    assert report.converged


def test_cli_run_set_overrides(tmp_path):
    out = tmp_path / "run2"
    code = cli_main(["run", "--preset", "lasso", "--out", str(out), "--set", "seed=5",
                     "--set", "max_iters=1500"])
    assert code == 0
    report = load_report(str(out / "report.json"))
    assert report.config["seed"] == 5
    assert report.config["max_iters"] == 1500


def test_cli_sweep_cartesian(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("KLPROX_THREADS", "2")
    out = tmp_path / "sweep"
    code = cli_main(["sweep", "--preset", "lasso", "--out", str(out),
                     "--grid", "seed=1,2", "--grid", "solver=pg,ipiano"])
    assert code == 0
    names = sorted(os.listdir(out))
    assert len(names) == 4
    assert all((out / name / "report.json").exists() for name in names)
    assert "4 configurations" in capsys.readouterr().out


def test_cli_report_refits_stored_csv(tmp_path, capsys):
    out = tmp_path / "forreport"
    assert cli_main(["run", "--preset", "lasso", "--seed", "2", "--out", str(out)]) == 0
    capsys.readouterr()  # drop the run verb's output
    code = cli_main(["report", str(out / "trace.csv")])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload[0]["kl"]["alpha_hat"] == pytest.approx(0.5, abs=0.1)
    assert payload[0]["rate"]["rho_hat"] < 1.0


def test_cli_run_from_config_file(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    cfg_file.write_text("preset = mcp-ls\nseed = 6\nmax_iters = 5000\n")
    out = tmp_path / "cfgrun"
    code = cli_main(["run", "--config", str(cfg_file), "--out", str(out)])
    assert code == 0
    report = load_report(str(out / "report.json"))
    assert report.config["preset"] == "mcp-ls"
    assert report.config["seed"] == 6
    assert report.converged


def test_cli_error_exit_code(tmp_path, capsys):
    code = cli_main(["run", "--config", str(tmp_path / "missing.cfg")])
    assert code == 2
    assert "error:" in capsys.readouterr().err
