"""Monte-Carlo experiment driver: noise sweeps, paired methods, CSV output.

Each trial generates one instance from a per-trial seed and runs every
requested method on that same instance, so comparisons are paired. Trials
are independent and parallelize across a process pool; records are reduced
in deterministic order, making the output independent of worker count.

The main CSV has one row per (noise level, method, trial); a companion
``<out>.summary.csv`` holds per-(noise level, method) means. Floats are
rendered with 17 significant digits so re-parsing is lossless, and the only
run-dependent content is a commented metadata header line.
"""

from __future__ import annotations

import csv
import datetime
import io
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from priorcut import _kernels
from priorcut.core import RNG_ALGORITHM, as_seed, mix_seed
from priorcut.model import GenerationConfig, generate_instance, pseudo_inverse, recover_signal
from priorcut.priors import (
    CustomPrior,
    MarkovPrior,
    PhasePrecision,
    UniformPrior,
    Vm1dPrior,
    prior_precision,
)
from priorcut.problem import build_lifted_problem, data_misfit_matrix, qcqp_objective
from priorcut.solvers import BcdSettings, SolverFailureError, bcd_lifting_solve, solution_phases

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "normalized_correlation",
    "run_trial",
    "run_experiment",
    "load_config",
    "config_from_dict",
    "write_records_csv",
    "write_summary_csv",
    "summarize_records",
    "read_records_csv",
]

METHODS = ("phasecut", "informed_phasecut")

# Zero noise variance removes the prior block from the lifted matrix; floor
# it for informed runs so "noiseless informed" keeps its prior.
SIGMA_FLOOR = 1e-8

CSV_COLUMNS = ["sigma_n_sq", "method", "trial_index", "correlation", "objective",
               "sweeps", "rank1_gap", "converged", "seed"]
SUMMARY_COLUMNS = ["sigma_n_sq", "method", "mean_correlation", "std_correlation", "n_trials"]


def normalized_correlation(x_hat, x_true) -> float:
    """``|x_hat^H x| / (||x_hat|| ||x||)``: in [0, 1], global-phase invariant."""
    x_hat = np.asarray(x_hat, dtype=complex)
    x_true = np.asarray(x_true, dtype=complex)
    nh = float(np.linalg.norm(x_hat))
    nt = float(np.linalg.norm(x_true))
    if nh == 0.0 or nt == 0.0:
        raise ValueError("normalized correlation is undefined for a zero vector")
    return float(abs(np.vdot(x_hat, x_true))) / (nh * nt)


@dataclass(frozen=True)
class TrialRecord:
    """One method's result on one generated instance."""

    sigma_n_sq: float
    method: str
    correlation: float
    objective: float
    sweeps: int
    rank1_gap: float
    converged: bool
    trial_index: int
    seed: int

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not -1e-9 <= self.correlation <= 1.0 + 1e-9:
            raise ValueError(f"correlation {self.correlation} outside [0, 1]")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a noise sweep experiment."""

    M: int = 256
    K: int = 64
    trials: int = 50
    sigma_n_sq_grid: tuple = tuple(round(0.05 * i, 2) for i in range(13))
    prior_spec: object = Vm1dPrior(kappa=1.0)
    methods: tuple = METHODS
    solver: BcdSettings = BcdSettings()
    master_seed: int = 0
    output_path: str = "priorcut_records.csv"

    def __post_init__(self):
        if not self.M >= self.K >= 1:
            raise ValueError(f"need M >= K >= 1, got M={self.M}, K={self.K}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        grid = tuple(float(s) for s in self.sigma_n_sq_grid)
        if not grid:
            raise ValueError("sigma_n_sq_grid must be nonempty")
        if any(s < 0 for s in grid):
            raise ValueError("sigma_n_sq_grid entries must be nonnegative")
        if list(grid) != sorted(grid):
            raise ValueError("sigma_n_sq_grid must be ascending")
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("methods must be nonempty")
        for m in methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r} (choose from {METHODS})")
        object.__setattr__(self, "sigma_n_sq_grid", grid)
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "master_seed", as_seed(self.master_seed))


def _method_precision(config: ExperimentConfig, method: str) -> PhasePrecision:
    if method == "phasecut":
        return PhasePrecision(np.zeros((config.M, config.M)), np.zeros(config.M))
    return prior_precision(config.prior_spec, config.M)


def run_trial(config: ExperimentConfig, sigma_n_sq: float, trial_index: int) -> list[TrialRecord]:
    """Generate one instance and run every configured method on it.

    The instance seed is derived from the master seed and the trial index
    only, so trials are paired across noise levels as well as methods. A
    solver failure is recorded (``converged=False``) with the correlation of
    the best iterate rather than raised.
    """
    seed = mix_seed(config.master_seed, trial_index)
    gen = GenerationConfig(M=config.M, K=config.K, sigma_n_sq=float(sigma_n_sq),
                           prior_spec=config.prior_spec, seed=seed)
    instance = generate_instance(gen)
    a_pinv = pseudo_inverse(instance.A)
    misfit = data_misfit_matrix(instance.y, instance.A, a_pinv)

    records = []
    for method in config.methods:
        precision = _method_precision(config, method)
        sigma_for_q = float(sigma_n_sq)
        if method == "informed_phasecut" and sigma_for_q < SIGMA_FLOOR and precision.matrix.any():
            warnings.warn(
                f"noise variance {sigma_for_q:g} floored to {SIGMA_FLOOR:g} for the informed "
                "method; a zero variance would erase the prior block", stacklevel=2)
            sigma_for_q = SIGMA_FLOOR
        problem = build_lifted_problem(misfit, precision, sigma_for_q)
        try:
            sol = bcd_lifting_solve(problem, config.solver)
            phi = solution_phases(problem, sol)
            converged = sol.converged
            sweeps = sol.sweeps
            gap = sol.rank1_gap
        except SolverFailureError as exc:
            converged = False
            sweeps = max(0, len(exc.objective_trace) - 1)
            if exc.partial is not None:
                phi = solution_phases(problem, exc.partial)
                gap = exc.partial.rank1_gap
            else:
                phi = np.ones(config.M, dtype=complex)
                gap = 1.0
        u_reprojected = np.append(phi, 1.0)
        objective = qcqp_objective(u_reprojected, problem)
        x_hat = recover_signal(phi, instance.y, a_pinv)
        corr = normalized_correlation(x_hat, instance.x_true)
        records.append(TrialRecord(
            sigma_n_sq=float(sigma_n_sq), method=method, correlation=corr,
            objective=objective, sweeps=sweeps, rank1_gap=gap,
            converged=converged, trial_index=trial_index, seed=seed))
    return records


def _trial_task(args) -> list[TrialRecord]:
    config, sigma, trial = args
    return run_trial(config, sigma, trial)


def run_experiment(config: ExperimentConfig, threads: int = 1,
                   write: bool = True) -> tuple[list[TrialRecord], list[dict]]:
    """Run the full noise sweep and (optionally) write the two CSVs.

    Trials run in a process pool when ``threads > 1``; results are collected
    in task order, so the record list (and any file output) is identical for
    every worker count.

    Returns
    -------
    (records, summary)
        Flat record list sorted by (grid position, trial, method order) and
        the per-(noise level, method) summary rows.
    """
    _validate_experiment_priors(config)
    out_handle = summary_handle = None
    if write:
        # fail on unwritable output before any compute
        out_handle = open(config.output_path, "w", newline="")
        summary_handle = open(_summary_path(config.output_path), "w", newline="")

    try:
        tasks = [(config, sigma, trial)
                 for sigma in config.sigma_n_sq_grid
                 for trial in range(config.trials)]
        if threads > 1:
            chunksize = max(1, len(tasks) // (threads * 4))
            with ProcessPoolExecutor(max_workers=threads) as pool:
                per_trial = list(pool.map(_trial_task, tasks, chunksize=chunksize))
        else:
            per_trial = [_trial_task(t) for t in tasks]
        records = [rec for batch in per_trial for rec in batch]
        summary = summarize_records(records, config)
        if write:
            write_records_csv(out_handle, records)
            write_summary_csv(summary_handle, summary)
    finally:
        if out_handle is not None:
            out_handle.close()
        if summary_handle is not None:
            summary_handle.close()
    return records, summary


def _validate_experiment_priors(config: ExperimentConfig) -> None:
    # The two stock priors must be positive definite; a custom one may be
    # indefinite, which is worth a warning but not an error.
    if isinstance(config.prior_spec, (Vm1dPrior, MarkovPrior)):
        if isinstance(config.prior_spec, Vm1dPrior) and config.prior_spec.kappa == 0.0:
            return
        precision = prior_precision(config.prior_spec, config.M)
        if not precision.is_positive_definite():
            raise ValueError("experimental prior precision is not positive definite")
    elif isinstance(config.prior_spec, CustomPrior):
        precision = prior_precision(config.prior_spec, config.M)
        if not precision.is_positive_definite():
            warnings.warn("custom prior precision is not positive definite", stacklevel=2)


def summarize_records(records: list[TrialRecord], config: ExperimentConfig) -> list[dict]:
    """Mean/std of the correlation per (noise level, method), in grid order."""
    summary = []
    for sigma in config.sigma_n_sq_grid:
        for method in config.methods:
            corrs = np.array([r.correlation for r in records
                              if r.sigma_n_sq == float(sigma) and r.method == method])
            if corrs.size == 0:
                continue
            summary.append({
                "sigma_n_sq": float(sigma),
                "method": method,
                "mean_correlation": float(np.mean(corrs)),
                "std_correlation": float(np.std(corrs)),
                "n_trials": int(corrs.size),
            })
    return summary


# ---------------------------------------------------------------------------
# CSV and config I/O
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _summary_path(output_path: str) -> str:
    return output_path + ".summary.csv"


def _metadata_line() -> str:
    from priorcut import __version__

    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return (f"# priorcut={__version__} rng={RNG_ALGORITHM} kernels={_kernels.BACKEND} "
            f"created={stamp}")


def write_records_csv(handle: io.TextIOBase, records: list[TrialRecord]) -> None:
    handle.write(_metadata_line() + "\n")
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([
            _fmt(r.sigma_n_sq), r.method, r.trial_index, _fmt(r.correlation),
            _fmt(r.objective), r.sweeps, _fmt(r.rank1_gap),
            "true" if r.converged else "false", r.seed,
        ])


def write_summary_csv(handle: io.TextIOBase, summary: list[dict]) -> None:
    handle.write(_metadata_line() + "\n")
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in summary:
        writer.writerow([
            _fmt(row["sigma_n_sq"]), row["method"], _fmt(row["mean_correlation"]),
            _fmt(row["std_correlation"]), row["n_trials"],
        ])


def read_records_csv(path: str) -> list[TrialRecord]:
    """Parse a records CSV back into TrialRecord values."""
    records = []
    with open(path, newline="") as handle:
        rows = [line for line in handle if not line.startswith("#")]
    reader = csv.DictReader(rows)
    for row in reader:
        records.append(TrialRecord(
            sigma_n_sq=float(row["sigma_n_sq"]),
            method=row["method"],
            correlation=float(row["correlation"]),
            objective=float(row["objective"]),
            sweeps=int(row["sweeps"]),
            rank1_gap=float(row["rank1_gap"]),
            converged=row["converged"] == "true",
            trial_index=int(row["trial_index"]),
            seed=int(row["seed"]),
        ))
    return records


_PRIOR_KEYS = {
    "vm1d": {"kappa"},
    "markov": {"a", "sigma_theta_sq"},
    "uniform": set(),
    "custom": {"kappa", "delta", "gibbs_sweeps"},
}


def _prior_from_dict(spec: dict):
    if not isinstance(spec, dict) or "name" not in spec:
        raise ValueError("prior_spec must be an object with a 'name' key")
    name = spec["name"]
    if name not in _PRIOR_KEYS:
        raise ValueError(f"unknown prior {name!r} (choose from {sorted(_PRIOR_KEYS)})")
    extra = set(spec) - _PRIOR_KEYS[name] - {"name"}
    if extra:
        raise ValueError(f"unknown keys in prior_spec: {sorted(extra)}")
    if name == "vm1d":
        return Vm1dPrior(kappa=float(spec.get("kappa", 1.0)))
    if name == "markov":
        return MarkovPrior(a=float(spec.get("a", 0.8)),
                           sigma_theta_sq=float(spec.get("sigma_theta_sq", 0.1)))
    if name == "uniform":
        return UniformPrior()
    if "kappa" not in spec or "delta" not in spec:
        raise ValueError("custom prior requires 'kappa' and 'delta'")
    return CustomPrior(kappa=np.asarray(spec["kappa"], dtype=float),
                       delta=np.asarray(spec["delta"], dtype=float),
                       gibbs_sweeps=int(spec.get("gibbs_sweeps", 100)))


def prior_to_dict(prior) -> dict:
    if isinstance(prior, Vm1dPrior):
        return {"name": "vm1d", "kappa": prior.kappa}
    if isinstance(prior, MarkovPrior):
        return {"name": "markov", "a": prior.a, "sigma_theta_sq": prior.sigma_theta_sq}
    if isinstance(prior, UniformPrior):
        return {"name": "uniform"}
    if isinstance(prior, CustomPrior):
        return {"name": "custom", "kappa": prior.kappa.tolist(),
                "delta": prior.delta.tolist(), "gibbs_sweeps": prior.gibbs_sweeps}
    raise TypeError(f"unknown prior specification: {prior!r}")


_SOLVER_KEYS = {f.name for f in fields(BcdSettings)}
_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a JSON-style dict; unknown keys reject."""
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    extra = set(data) - _CONFIG_KEYS
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    kwargs = dict(data)
    if "prior_spec" in kwargs:
        kwargs["prior_spec"] = _prior_from_dict(kwargs["prior_spec"])
    if "solver" in kwargs:
        solver = kwargs["solver"]
        if not isinstance(solver, dict):
            raise ValueError("solver must be a JSON object")
        extra = set(solver) - _SOLVER_KEYS
        if extra:
            raise ValueError(f"unknown solver keys: {sorted(extra)}")
        kwargs["solver"] = BcdSettings(**solver)
    if "sigma_n_sq_grid" in kwargs:
        kwargs["sigma_n_sq_grid"] = tuple(kwargs["sigma_n_sq_grid"])
    if "methods" in kwargs:
        kwargs["methods"] = tuple(kwargs["methods"])
    return ExperimentConfig(**kwargs)


def load_config(path: str, out: str | None = None, seed: int | None = None) -> ExperimentConfig:
    """Load a JSON config file and apply CLI overrides."""
    with open(path) as handle:
        data = json.load(handle)
    config = config_from_dict(data)
    if out is not None:
        config = replace(config, output_path=out)
    if seed is not None:
        config = replace(config, master_seed=seed)
    return config
