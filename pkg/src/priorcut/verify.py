"""Built-in invariant suite backing ``priorcut verify``.

Quick, deterministic checks of the mathematical identities the solvers
depend on. Each check prints one PASS/FAIL line; the suite returns False if
anything fails. This is a smoke screen, not the test suite: the pytest tree
covers the same ground at full depth.
"""

from __future__ import annotations

import numpy as np

from priorcut.core import make_rng, wrap_angle
from priorcut.harness import ExperimentConfig, run_trial
from priorcut.model import GenerationConfig, generate_instance, pseudo_inverse
from priorcut.priors import (
    MvmParams,
    UniformPrior,
    Vm1dPrior,
    mahalanobis_phase_distance,
    mvm_unnormalized_log_density,
    precision_from_mvm,
    precision_markov,
    MarkovChainParams,
)
from priorcut.problem import build_lifted_problem, data_misfit_matrix, map_objective, qcqp_objective
from priorcut.solvers import (
    BcdSettings,
    bcd_lifting_solve,
    brute_force_oracle,
    extract_phases,
    leading_eigenvector,
    solution_phases,
)


def _random_mvm(rng, m):
    kappa = rng.uniform(0.0, 3.0, m)
    delta = rng.uniform(-0.3, 0.3, (m, m))
    delta = 0.5 * (delta + delta.T)
    np.fill_diagonal(delta, 0.0)
    return MvmParams(kappa, delta, np.zeros(m))


def check_lemma_equivalence(rng, cases: int = 40) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(cases):
        m = int(rng.integers(2, 9))
        params = _random_mvm(rng, m)
        precision = precision_from_mvm(params)
        t1 = rng.uniform(-np.pi, np.pi, m)
        t2 = rng.uniform(-np.pi, np.pi, m)
        dens = (mvm_unnormalized_log_density(t1, params)
                - mvm_unnormalized_log_density(t2, params))
        dist = (mahalanobis_phase_distance(np.exp(1j * t1), precision)
                - mahalanobis_phase_distance(np.exp(1j * t2), precision))
        worst = max(worst, abs(dens + dist))
    return worst <= 1e-9, f"max |density diff + distance diff| = {worst:.3e}"


def check_precision_roundtrip(rng, cases: int = 20) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(cases):
        m = int(rng.integers(2, 9))
        p = rng.standard_normal((m, m))
        p = 0.5 * (p + p.T)
        delta = p.copy()
        np.fill_diagonal(delta, 0.0)
        kappa = 2.0 * (np.diag(p) + delta.sum(axis=1))
        rebuilt = precision_from_mvm(MvmParams(kappa, delta, np.zeros(m))).matrix
        worst = max(worst, float(np.max(np.abs(rebuilt - p))))
    return worst <= 1e-12, f"max reconstruction error = {worst:.3e}"


def check_markov_precision(_rng) -> tuple[bool, str]:
    for m in (2, 3, 8, 64, 256):
        mat = precision_markov(MarkovChainParams(0.8, 0.1, m)).matrix
        band = np.triu(np.abs(mat), 2)
        if band.any():
            return False, f"entries beyond the first off-diagonal at M={m}"
        try:
            np.linalg.cholesky(mat)
        except np.linalg.LinAlgError:
            return False, f"not positive definite at M={m}"
    return True, "tridiagonal and positive definite for M in {2,3,8,64,256}"


def check_wrap_angle(rng) -> tuple[bool, str]:
    xs = rng.uniform(-50.0, 50.0, 200)
    wrapped = wrap_angle(xs)
    ok = (np.all(wrapped > -np.pi) and np.all(wrapped <= np.pi)
          and np.max(np.abs(wrap_angle(wrapped) - wrapped)) == 0.0
          and wrap_angle(-np.pi) == np.pi)
    return bool(ok), "range (-pi, pi], idempotent, wrap(-pi) = pi"


def check_objective_equivalence(rng) -> tuple[bool, str]:
    config = GenerationConfig(M=12, K=4, sigma_n_sq=0.3, prior_spec=Vm1dPrior(1.0),
                              seed=int(rng.integers(0, 2**32)))
    inst = generate_instance(config)
    a_pinv = pseudo_inverse(inst.A)
    misfit = data_misfit_matrix(inst.y, inst.A, a_pinv)
    precision = precision_from_mvm(
        MvmParams(np.ones(12), np.zeros((12, 12)), np.zeros(12)))
    problem = build_lifted_problem(misfit, precision, inst.sigma_n_sq)
    worst = 0.0
    prev = None
    for _ in range(6):
        phi = np.exp(1j * rng.uniform(-np.pi, np.pi, 12))
        full = map_objective(phi, inst, precision, a_pinv)
        lifted = qcqp_objective(np.append(phi, 1.0), problem) / inst.sigma_n_sq
        if prev is not None:
            diff = abs((full - prev[0]) - (lifted - prev[1]))
            worst = max(worst, diff / max(1.0, abs(full - prev[0])))
        prev = (full, lifted)
    return worst <= 1e-8, f"max relative difference mismatch = {worst:.3e}"


def check_bcd_invariants(rng) -> tuple[bool, str]:
    for _ in range(8):
        m = int(rng.integers(3, 13))
        g = (rng.standard_normal((m + 1, m + 1))
             + 1j * rng.standard_normal((m + 1, m + 1)))
        q = g @ g.conj().T / m
        from priorcut.problem import LiftedProblem
        from priorcut.priors import PhasePrecision

        problem = LiftedProblem(matrix=q, n_phases=m, sigma_n_sq=1.0,
                                precision=PhasePrecision(np.zeros((m, m)), np.zeros(m)))
        sol = bcd_lifting_solve(problem, BcdSettings(max_sweeps=80))
        trace = np.array(sol.objective_trace)
        if np.any(np.diff(trace) > 1e-9):
            return False, "objective increased across sweeps"
        if np.max(np.abs(np.diag(sol.U) - 1.0)) > 1e-12:
            return False, "unit diagonal lost"
        if float(np.linalg.eigvalsh(sol.U)[0]) < -1e-8:
            return False, "PSD-ness lost"
    return True, "monotone and feasible on 8 random problems"


def check_greedy_monotone(rng) -> tuple[bool, str]:
    from priorcut.problem import LiftedProblem
    from priorcut.priors import PhasePrecision

    m = 6
    g = rng.standard_normal((m + 1, m + 1)) + 1j * rng.standard_normal((m + 1, m + 1))
    q = g @ g.conj().T / m
    problem = LiftedProblem(matrix=q, n_phases=m, sigma_n_sq=1.0,
                            precision=PhasePrecision(np.zeros((m, m)), np.zeros(m)))
    u = np.exp(1j * rng.uniform(-np.pi, np.pi, m + 1))
    prev = qcqp_objective(u, problem)
    from priorcut import _kernels

    for i in range(m + 1):
        _kernels.greedy_sweep(u, problem.matrix, np.array([i], dtype=np.int64))
        obj = qcqp_objective(u, problem)
        if obj > prev + 1e-9:
            return False, f"update {i} increased the objective"
        prev = obj
    return True, "per-update objective non-increasing"


def check_rank1_roundtrip(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(10):
        m = int(rng.integers(2, 10))
        u = np.exp(1j * rng.uniform(-np.pi, np.pi, m + 1))
        U = np.outer(u, u.conj())
        eig = leading_eigenvector(U)
        phi = extract_phases(eig.vector)
        expected = u[:m] / u[m]
        worst = max(worst, float(np.max(np.abs(phi - expected))))
    return worst <= 1e-8, f"max extraction error = {worst:.3e}"


def check_oracle_dominance(rng) -> tuple[bool, str]:
    worst = -np.inf
    for _ in range(5):
        config = GenerationConfig(M=2, K=1, sigma_n_sq=0.2, prior_spec=Vm1dPrior(1.0),
                                  seed=int(rng.integers(0, 2**32)))
        inst = generate_instance(config)
        a_pinv = pseudo_inverse(inst.A)
        misfit = data_misfit_matrix(inst.y, inst.A, a_pinv)
        precision = precision_from_mvm(MvmParams(np.ones(2), np.zeros((2, 2)), np.zeros(2)))
        problem = build_lifted_problem(misfit, precision, inst.sigma_n_sq)
        sol = bcd_lifting_solve(problem)
        phi = solution_phases(problem, sol)
        ours = qcqp_objective(np.append(phi, 1.0), problem)
        _, oracle = brute_force_oracle(problem, 32)
        worst = max(worst, ours - oracle - 0.05 * (abs(oracle) + 1.0))
    return worst <= 0.0, f"max slack violation = {worst:.3e}"


def check_trial_determinism(_rng) -> tuple[bool, str]:
    config = ExperimentConfig(M=12, K=3, trials=1, sigma_n_sq_grid=(0.2,),
                              prior_spec=UniformPrior(), master_seed=7,
                              solver=BcdSettings(max_sweeps=60))
    a = run_trial(config, 0.2, 0)
    b = run_trial(config, 0.2, 0)
    return a == b, "identical records on repeated runs"


CHECKS = [
    ("lemma-equivalence", check_lemma_equivalence),
    ("precision-roundtrip", check_precision_roundtrip),
    ("markov-precision", check_markov_precision),
    ("wrap-angle", check_wrap_angle),
    ("objective-equivalence", check_objective_equivalence),
    ("bcd-invariants", check_bcd_invariants),
    ("greedy-monotone", check_greedy_monotone),
    ("rank1-roundtrip", check_rank1_roundtrip),
    ("oracle-dominance", check_oracle_dominance),
    ("trial-determinism", check_trial_determinism),
]


def run_all(seed: int = 0, stream=None) -> bool:
    """Run every check; print one line each; True iff all passed."""
    import sys

    stream = stream or sys.stdout
    all_ok = True
    for name, fn in CHECKS:
        rng = make_rng(seed)
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        print(f"{name}: {'PASS' if ok else 'FAIL'} ({detail})", file=stream)
    return all_ok
