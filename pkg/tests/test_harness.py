import json
import subprocess
import sys

import numpy as np
import pytest

from priorcut.core import make_rng, mix_seed
from priorcut.harness import (
    ExperimentConfig,
    TrialRecord,
    config_from_dict,
    normalized_correlation,
    prior_to_dict,
    read_records_csv,
    run_experiment,
    run_trial,
)
from priorcut.model import GenerationConfig, generate_instance
from priorcut.priors import CustomPrior, MarkovPrior, UniformPrior, Vm1dPrior
from priorcut.solvers import BcdSettings

FAST_SOLVER = BcdSettings(max_sweeps=150)


def small_config(**overrides):
    base = dict(M=16, K=4, trials=2, sigma_n_sq_grid=(0.1, 0.3),
                prior_spec=Vm1dPrior(1.0), master_seed=77, solver=FAST_SOLVER,
                output_path="records.csv")
    base.update(overrides)
    return ExperimentConfig(**base)


# --- correlation ---------------------------------------------------------------

def test_correlation_identical_vectors():
    rng = make_rng(1)
    x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    assert normalized_correlation(x, x) == pytest.approx(1.0, abs=1e-12)


def test_correlation_global_phase_and_scale_invariance():
    rng = make_rng(2)
    x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    for c in (np.exp(1j * 1.2), 3.0, 0.25 * np.exp(-1j * 0.4)):
        assert normalized_correlation(c * x, x) == pytest.approx(1.0, abs=1e-12)


def test_correlation_orthogonal_vectors():
    x = np.array([1.0, 1j, 0.0])
    y = np.array([0.0, 0.0, 3.0 + 1j])
    assert normalized_correlation(x, y) == pytest.approx(0.0, abs=1e-12)


def test_correlation_rejects_zero_vector():
    with pytest.raises(ValueError):
        normalized_correlation(np.zeros(3), np.ones(3))


# --- trials ----------------------------------------------------------------------

def test_run_trial_deterministic():
    config = small_config()
    a = run_trial(config, 0.3, 1)
    b = run_trial(config, 0.3, 1)
    assert a == b


def test_run_trial_methods_share_instance_seed():
    config = small_config()
    records = run_trial(config, 0.1, 0)
    assert [r.method for r in records] == ["phasecut", "informed_phasecut"]
    assert records[0].seed == records[1].seed == mix_seed(77, 0)
    assert records[0].trial_index == records[1].trial_index == 0
    # the recorded seed regenerates the same instance both methods consumed
    inst = generate_instance(GenerationConfig(M=16, K=4, sigma_n_sq=0.1,
                                              prior_spec=Vm1dPrior(1.0),
                                              seed=records[0].seed))
    assert inst.seed == records[0].seed


def test_run_trial_near_noiseless_phasecut_sanity():
    config = ExperimentConfig(M=32, K=8, trials=50, sigma_n_sq_grid=(1e-8,),
                              prior_spec=UniformPrior(), master_seed=3,
                              solver=FAST_SOLVER, methods=("phasecut",))
    good = 0
    for t in range(50):
        (rec,) = run_trial(config, 1e-8, t)
        good += rec.correlation >= 0.99
    assert good >= 45


def test_run_trial_certain_phases_make_informed_exact():
    # kappa = 1e9 pins the generated phases (and the prior) at zero, so the
    # informed method reduces to least squares on y ~ A x + n; at small noise
    # that is essentially exact, and at larger noise it still cannot lose to
    # the uninformed method
    config = ExperimentConfig(M=16, K=4, trials=1, sigma_n_sq_grid=(0.02, 0.5),
                              prior_spec=Vm1dPrior(kappa=1e9), master_seed=4,
                              solver=FAST_SOLVER)
    for t in range(3):
        records = run_trial(config, 0.02, t)
        informed = [r for r in records if r.method == "informed_phasecut"][0]
        assert informed.correlation >= 0.99
        records = run_trial(config, 0.5, t)
        by_method = {r.method: r for r in records}
        assert (by_method["informed_phasecut"].correlation
                >= by_method["phasecut"].correlation - 1e-6)


def test_run_trial_floors_sigma_for_informed():
    config = small_config(sigma_n_sq_grid=(0.0, 0.1))
    with pytest.warns(UserWarning, match="floored"):
        records = run_trial(config, 0.0, 0)
    assert all(r.sigma_n_sq == 0.0 for r in records)  # record keeps the true value


def test_trial_record_validation():
    with pytest.raises(ValueError):
        TrialRecord(sigma_n_sq=0.1, method="nonsense", correlation=0.5, objective=1.0,
                    sweeps=3, rank1_gap=0.0, converged=True, trial_index=0, seed=1)
    with pytest.raises(ValueError):
        TrialRecord(sigma_n_sq=0.1, method="phasecut", correlation=1.5, objective=1.0,
                    sweeps=3, rank1_gap=0.0, converged=True, trial_index=0, seed=1)


# --- experiment ------------------------------------------------------------------

def test_run_experiment_records_and_summary(tmp_path):
    out = tmp_path / "records.csv"
    config = small_config(output_path=str(out))
    records, summary = run_experiment(config)
    assert len(records) == 2 * 2 * 2  # grid x trials x methods
    assert len(summary) == 4
    # summary means must equal the arithmetic mean of the records exactly
    for row in summary:
        matching = [r.correlation for r in records
                    if r.sigma_n_sq == row["sigma_n_sq"] and r.method == row["method"]]
        assert row["mean_correlation"] == float(np.mean(matching))
        assert row["n_trials"] == len(matching)
    assert out.exists() and (tmp_path / "records.csv.summary.csv").exists()


def test_run_experiment_csv_schema_and_roundtrip(tmp_path):
    out = tmp_path / "r.csv"
    config = small_config(output_path=str(out))
    records, _ = run_experiment(config)
    text = out.read_text().splitlines()
    assert text[0].startswith("#")
    assert text[1] == "sigma_n_sq,method,trial_index,correlation,objective,sweeps,rank1_gap,converged,seed"
    parsed = read_records_csv(str(out))
    assert parsed == records  # 17 significant digits round-trip exactly


def test_run_experiment_reproducible_bytes(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    run_experiment(small_config(output_path=str(out1)))
    run_experiment(small_config(output_path=str(out2)))
    data1 = [l for l in out1.read_text().splitlines() if not l.startswith("#")]
    data2 = [l for l in out2.read_text().splitlines() if not l.startswith("#")]
    assert data1 == data2


def test_run_experiment_parallel_matches_serial(tmp_path):
    out1, out2 = tmp_path / "s.csv", tmp_path / "p.csv"
    run_experiment(small_config(output_path=str(out1)), threads=1)
    run_experiment(small_config(output_path=str(out2)), threads=2)
    data1 = [l for l in out1.read_text().splitlines() if not l.startswith("#")]
    data2 = [l for l in out2.read_text().splitlines() if not l.startswith("#")]
    assert data1 == data2


def test_run_experiment_unwritable_path_fails_before_compute(tmp_path):
    config = small_config(output_path=str(tmp_path / "missing_dir" / "r.csv"))
    with pytest.raises(OSError):
        run_experiment(config)


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        small_config(sigma_n_sq_grid=())
    with pytest.raises(ValueError):
        small_config(sigma_n_sq_grid=(0.3, 0.1))
    with pytest.raises(ValueError):
        small_config(methods=())
    with pytest.raises(ValueError):
        small_config(methods=("phasecut", "prvbem"))
    with pytest.raises(ValueError):
        small_config(trials=0)


# --- config file handling ---------------------------------------------------------

def test_config_from_dict_roundtrip():
    config = config_from_dict({
        "M": 24, "K": 6, "trials": 3,
        "sigma_n_sq_grid": [0.1, 0.2],
        "prior_spec": {"name": "markov", "a": 0.8, "sigma_theta_sq": 0.1},
        "methods": ["phasecut", "informed_phasecut"],
        "solver": {"max_sweeps": 60, "objective_tol": 1e-6, "barrier_nu": 1e-3},
        "master_seed": 5,
        "output_path": "x.csv",
    })
    assert config.M == 24
    assert isinstance(config.prior_spec, MarkovPrior)
    assert config.solver.max_sweeps == 60
    assert prior_to_dict(config.prior_spec) == {"name": "markov", "a": 0.8,
                                                "sigma_theta_sq": 0.1}


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown config keys"):
        config_from_dict({"M": 8, "K": 2, "bogus": 1})
    with pytest.raises(ValueError, match="unknown solver keys"):
        config_from_dict({"M": 8, "K": 2, "solver": {"sweeps": 3}})
    with pytest.raises(ValueError, match="unknown keys in prior_spec"):
        config_from_dict({"M": 8, "K": 2, "prior_spec": {"name": "vm1d", "mu": 0.0}})
    with pytest.raises(ValueError, match="unknown prior"):
        config_from_dict({"M": 8, "K": 2, "prior_spec": {"name": "cauchy"}})


def test_config_custom_prior():
    config = config_from_dict({
        "M": 2, "K": 1,
        "prior_spec": {"name": "custom", "kappa": [1.0, 2.0],
                       "delta": [[0.0, 0.1], [0.1, 0.0]]},
    })
    assert isinstance(config.prior_spec, CustomPrior)
    records = run_trial(config, 0.2, 0)
    assert len(records) == 2


# --- CLI -----------------------------------------------------------------------

def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "priorcut.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


def write_cli_config(tmp_path, **overrides):
    data = {
        "M": 12, "K": 3, "trials": 2,
        "sigma_n_sq_grid": [0.2],
        "prior_spec": {"name": "vm1d", "kappa": 1.0},
        "methods": ["phasecut", "informed_phasecut"],
        "solver": {"max_sweeps": 80},
        "master_seed": 9,
        "output_path": str(tmp_path / "out.csv"),
    }
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def test_cli_run_and_summarize(tmp_path):
    config_path = write_cli_config(tmp_path)
    res = run_cli("run", "--config", str(config_path))
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "out.csv").exists()
    assert (tmp_path / "out.csv.summary.csv").exists()
    res2 = run_cli("summarize", str(tmp_path / "out.csv"))
    assert res2.returncode == 0
    assert "informed_phasecut" in res2.stdout


def test_cli_invalid_config_exits_1(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"M": 4, "K": 2, "bogus": True}))
    res = run_cli("run", "--config", str(path))
    assert res.returncode == 1
    path.write_text("{not json")
    res = run_cli("run", "--config", str(path))
    assert res.returncode == 1


def test_cli_unwritable_output_exits_3(tmp_path):
    config_path = write_cli_config(tmp_path, output_path=str(tmp_path / "no" / "o.csv"))
    res = run_cli("run", "--config", str(config_path))
    assert res.returncode == 3


def test_cli_out_and_seed_overrides(tmp_path):
    config_path = write_cli_config(tmp_path)
    alt = tmp_path / "alt.csv"
    res = run_cli("run", "--config", str(config_path), "--out", str(alt), "--seed", "123")
    assert res.returncode == 0, res.stderr
    recs = read_records_csv(str(alt))
    assert recs[0].seed == mix_seed(123, 0)


def test_cli_missing_csv_summarize_exits_3(tmp_path):
    res = run_cli("summarize", str(tmp_path / "absent.csv"))
    assert res.returncode == 3


def test_cli_verify_passes():
    res = run_cli("verify")
    assert res.returncode == 0, res.stdout + res.stderr
    lines = [l for l in res.stdout.splitlines() if ": PASS" in l or ": FAIL" in l]
    assert len(lines) >= 8
    assert all(": PASS" in l for l in lines)


def test_cli_strict_flags_unconverged_trials(tmp_path):
    # one sweep with a zero tolerance cannot converge; --strict must exit 2
    # (and still write the records first)
    config_path = write_cli_config(tmp_path, solver={"max_sweeps": 1,
                                                     "objective_tol": 0.0})
    res = run_cli("run", "--config", str(config_path), "--strict")
    assert res.returncode == 2
    records = read_records_csv(str(tmp_path / "out.csv"))
    assert records and all(not r.converged for r in records)
    res2 = run_cli("run", "--config", str(config_path))
    assert res2.returncode == 0  # without --strict the same run is a success
