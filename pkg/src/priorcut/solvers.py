"""Solvers for the unit-modulus QCQP and its semidefinite lifting.

The lifting relaxation replaces the rank-1 matrix ``u u^H`` with a Hermitian
PSD matrix of unit diagonal and minimizes ``trace(C U)`` by block-coordinate
descent over rows/columns (closed-form update per coordinate, small barrier
to keep iterates strictly feasible). A rank-1 solution is then read off the
leading eigenvector. The greedy solver works on the vector problem directly;
it doubles as the local refinement applied after eigenvector extraction and
as the oracle-comparison baseline.

The per-coordinate inner loops live in ``priorcut._kernels`` (compiled when
available, NumPy otherwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from priorcut import _kernels
from priorcut.core import hermitian_check, make_rng
from priorcut.problem import LiftedProblem, qcqp_objective

__all__ = [
    "BcdSettings",
    "LiftedSolution",
    "PowerIterationResult",
    "SolverFailureError",
    "DegenerateHomogenizationError",
    "bcd_lifting_solve",
    "greedy_coordinate_solve",
    "leading_eigenvector",
    "extract_phases",
    "brute_force_oracle",
    "solution_phases",
]


class SolverFailureError(RuntimeError):
    """Raised when an iterate turns non-finite.

    Carries the objective trace and, when available, the last finite iterate
    packaged as a ``LiftedSolution`` so callers can still extract phases.
    """

    def __init__(self, message: str, objective_trace=None, partial=None):
        super().__init__(message)
        self.objective_trace = list(objective_trace) if objective_trace is not None else []
        self.partial = partial


class DegenerateHomogenizationError(ValueError):
    """Homogenization coordinate too small to divide by during extraction."""


@dataclass(frozen=True)
class BcdSettings:
    """Block-coordinate descent controls.

    ``seed`` only matters when ``shuffle_order`` is set; the default sweep
    order is cyclic for reproducibility. ``debug`` re-checks feasibility
    (unit diagonal, PSD) every 50 sweeps.
    """

    max_sweeps: int = 500
    objective_tol: float = 1e-6
    barrier_nu: float = 1e-3
    seed: int = 0
    shuffle_order: bool = False
    debug: bool = False

    def __post_init__(self):
        if not 0 <= self.barrier_nu < 1:
            raise ValueError("barrier_nu must lie in [0, 1)")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.objective_tol < 0:
            raise ValueError("objective_tol must be nonnegative")


@dataclass(frozen=True)
class LiftedSolution:
    """Feasible lifted iterate with its extracted unit-modulus vector.

    ``u`` is the leading eigenvector renormalized entrywise to unit modulus
    (entries below 1e-12 in magnitude become 1). ``eigvec``/``eigval`` keep
    the raw unit-norm eigenpair, ``rank1_gap`` is ``1 - eigval/trace(U)``.
    """

    U: np.ndarray
    u: np.ndarray
    objective_trace: list = field(repr=False)
    converged: bool
    rank1_gap: float
    eigvec: np.ndarray = field(repr=False)
    eigval: float
    degenerate_spectrum: bool = False

    def __post_init__(self):
        n = self.U.shape[0]
        if self.u.shape != (n,):
            raise ValueError("extracted vector length must match the lifted matrix")
        if np.max(np.abs(np.diag(self.U) - 1.0)) > 1e-9:
            raise ValueError("lifted matrix must have unit diagonal within 1e-9")
        if not hermitian_check(self.U, 1e-9):
            raise ValueError("lifted matrix must be Hermitian within 1e-9")
        if np.max(np.abs(np.abs(self.u) - 1.0)) > 1e-12:
            raise ValueError("extracted vector must be exactly unit-modulus")

    @property
    def sweeps(self) -> int:
        return max(0, len(self.objective_trace) - 1)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


@dataclass(frozen=True)
class PowerIterationResult:
    """Leading eigenpair estimate from power iteration."""

    vector: np.ndarray
    value: float
    converged: bool
    degenerate: bool
    iterations: int
    second_value: float


def _unit_modulus(v: np.ndarray, tiny: float = 1e-12) -> np.ndarray:
    out = np.asarray(v, dtype=complex).copy()
    mags = np.abs(out)
    small = mags < tiny
    out[small] = 1.0
    out[~small] = out[~small] / mags[~small]
    return out


def _sweep_order(n: int, settings: BcdSettings, rng: np.random.Generator | None) -> np.ndarray:
    order = np.arange(n, dtype=np.int64)
    if settings.shuffle_order and rng is not None:
        rng.shuffle(order)
    return order


def bcd_lifting_solve(problem: LiftedProblem, settings: BcdSettings = BcdSettings()) -> LiftedSolution:
    """Solve the lifted SDP by row/column block-coordinate descent.

    Starts from the identity (feasible, deterministic), keeps the unit
    diagonal exactly and positive semidefiniteness up to the barrier, and
    stops when the relative objective change per sweep drops below
    ``settings.objective_tol`` or after ``settings.max_sweeps`` sweeps.

    Returns
    -------
    LiftedSolution
        Final iterate, per-sweep objective trace (initial value included),
        and the extracted unit-modulus vector.

    Raises
    ------
    SolverFailureError
        If an iterate turns non-finite; the trace so far is attached.
    """
    Q = problem.matrix
    if not hermitian_check(Q, 1e-10):
        raise ValueError("coefficient matrix must be Hermitian within 1e-10")
    n = problem.dim
    rng = make_rng(settings.seed) if settings.shuffle_order else None
    U = np.eye(n, dtype=complex)
    trace = [_kernels.lifted_objective(U, Q)]
    converged = False
    for sweep in range(settings.max_sweeps):
        last_good = U.copy()
        order = _sweep_order(n, settings, rng)
        _kernels.bcd_sweep(U, Q, settings.barrier_nu, order)
        obj = _kernels.lifted_objective(U, Q)
        if not math.isfinite(obj) or not np.all(np.isfinite(U)):
            partial = _package_solution(last_good, trace, converged=False)
            raise SolverFailureError(
                f"BCD iterate became non-finite at sweep {sweep + 1}", trace, partial)
        prev = trace[-1]
        trace.append(obj)
        if settings.debug and (sweep + 1) % 50 == 0:
            _check_feasible(U)
        if abs(prev - obj) <= settings.objective_tol * max(1.0, abs(prev)):
            converged = True
            break
    return _package_solution(U, trace, converged)


def _package_solution(U: np.ndarray, trace: list, converged: bool) -> LiftedSolution:
    eig = leading_eigenvector(U)
    total = float(np.real(np.trace(U)))
    gap = 1.0 - eig.value / total if total > 0 else 1.0
    return LiftedSolution(
        U=U,
        u=_unit_modulus(eig.vector),
        objective_trace=trace,
        converged=converged,
        rank1_gap=gap,
        eigvec=eig.vector,
        eigval=eig.value,
        degenerate_spectrum=eig.degenerate,
    )


def _check_feasible(U: np.ndarray) -> None:
    if np.max(np.abs(np.diag(U) - 1.0)) > 1e-12:
        raise SolverFailureError("BCD iterate lost its unit diagonal")
    min_eig = float(np.linalg.eigvalsh(U)[0])
    if min_eig < -1e-8:
        raise SolverFailureError(f"BCD iterate lost PSD-ness (min eigenvalue {min_eig:.3e})")


def greedy_coordinate_solve(problem: LiftedProblem, u0: np.ndarray,
                            max_sweeps: int = 200, tol: float = 1e-10) -> np.ndarray:
    """Minimize ``u^H C u`` over unit-modulus ``u`` one coordinate at a time.

    Each coordinate has a closed-form minimizer, so the objective never
    increases; the method converges to a local minimum that depends on
    ``u0``. Stops when the relative objective change per sweep drops below
    ``tol``.
    """
    u0 = np.asarray(u0, dtype=complex)
    if u0.shape != (problem.dim,):
        raise ValueError(f"u0 has shape {u0.shape}, expected ({problem.dim},)")
    if np.max(np.abs(np.abs(u0) - 1.0)) > 1e-9:
        raise ValueError("u0 entries must have unit modulus within 1e-9")
    Q = problem.matrix
    u = u0.copy()  # untouched coordinates come back bit-identical
    order = np.arange(problem.dim, dtype=np.int64)
    prev = qcqp_objective(u, problem)
    for _ in range(max_sweeps):
        _kernels.greedy_sweep(u, Q, order)
        if not np.all(np.isfinite(u)):
            raise SolverFailureError("greedy iterate became non-finite")
        obj = qcqp_objective(u, problem)
        if abs(prev - obj) <= tol * max(1.0, abs(prev)):
            break
        prev = obj
    return u


_POWER_TOL = 1e-10
_POWER_MAX_ITER = 10_000
_RESIDUAL_FACTOR = 1e-8


def _power_iterate(U: np.ndarray, v0: np.ndarray, tol: float, max_iter: int):
    v = v0 / np.linalg.norm(v0)
    lam_prev = None
    lam = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = U @ v
        lam = float(np.real(v.conj() @ w))
        norm_w = float(np.linalg.norm(w))
        residual = float(np.linalg.norm(w - lam * v))
        if norm_w < 1e-300:
            # v is numerically in the nullspace; eigenvalue estimate is 0
            converged = residual <= _RESIDUAL_FACTOR * max(abs(lam), 1e-30)
            break
        if (lam_prev is not None
                and abs(lam - lam_prev) <= tol * max(1.0, abs(lam))
                and residual <= _RESIDUAL_FACTOR * max(abs(lam), 1e-30)):
            converged = True
            break
        lam_prev = lam
        v = w / norm_w
    return v, lam, converged, it


def leading_eigenvector(U: np.ndarray, tol: float = _POWER_TOL,
                        max_iter: int = _POWER_MAX_ITER) -> PowerIterationResult:
    """Leading eigenpair of a Hermitian PSD matrix by power iteration.

    Deterministic all-ones start. A deflated second pass estimates the next
    eigenvalue, which both flags a (near-)degenerate leading eigenspace and
    catches the unlucky case of a start vector orthogonal to it (the
    iteration is then restarted from the deflated iterate).
    """
    U = np.asarray(U, dtype=complex)
    if not hermitian_check(U, 1e-8):
        raise ValueError("leading_eigenvector requires a Hermitian matrix")
    n = U.shape[0]
    v0 = np.ones(n, dtype=complex)
    v, lam, converged, iters = _power_iterate(U, v0, tol, max_iter)

    # fixed perturbation pattern; deterministic and not axis-aligned
    pattern = np.cos(1.0 + np.arange(n)) + 1j * np.sin(0.5 + 0.25 * np.arange(n))
    v2, lam2 = _deflated_estimate(U, v, lam, pattern)
    if lam2 > lam * (1.0 + 1e-9) and lam2 > 1e-30:
        # start vector was (numerically) orthogonal to the leading eigenspace
        v, lam, converged, more = _power_iterate(U, v2, tol, max_iter)
        iters += more
        v2, lam2 = _deflated_estimate(U, v, lam, pattern)
    scale = max(abs(lam), 1e-30)
    degenerate = lam2 >= lam - 1e-9 * scale if lam > 0 else True
    return PowerIterationResult(vector=v, value=lam, converged=converged,
                                degenerate=degenerate, iterations=iters,
                                second_value=lam2)


def _deflated_estimate(U: np.ndarray, v: np.ndarray, lam: float, start: np.ndarray,
                       iters: int = 200):
    """Crude second-eigenvalue estimate via power iteration on U - lam*v*v^H."""
    w = start - v * (v.conj() @ start)
    norm = np.linalg.norm(w)
    if norm < 1e-12:
        return start, 0.0
    w = w / norm
    lam2 = 0.0
    for _ in range(iters):
        z = U @ w - lam * v * (v.conj() @ w)
        nz = float(np.linalg.norm(z))
        if nz < 1e-300:
            return w, 0.0
        w = z / nz
        new_lam2 = float(np.real(w.conj() @ (U @ w - lam * v * (v.conj() @ w))))
        if abs(new_lam2 - lam2) <= 1e-9 * max(1.0, abs(new_lam2)):
            lam2 = new_lam2
            break
        lam2 = new_lam2
    return w, lam2


def extract_phases(u: np.ndarray) -> np.ndarray:
    """Divide out the homogenization coordinate and renormalize entrywise.

    Returns ``u[:M] * conj(u[M]) / |u[M]|`` with every entry projected to
    unit modulus (entries below 1e-12 in magnitude become 1).

    Raises
    ------
    DegenerateHomogenizationError
        If the homogenization coordinate has magnitude below 1e-12.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 1 or u.shape[0] < 2:
        raise ValueError("u must be a vector of length at least 2")
    last = u[-1]
    if abs(last) < 1e-12:
        raise DegenerateHomogenizationError(
            f"homogenization coordinate has magnitude {abs(last):.3e}")
    return _unit_modulus(u[:-1] * (last.conj() / abs(last)))


def solution_phases(problem: LiftedProblem, solution: LiftedSolution,
                    refine_sweeps: int = 200) -> np.ndarray:
    """Phase vector of a lifted solution.

    The leading eigenvector is projected entrywise onto the unit circle and
    refined by greedy coordinate descent on the same quadratic form (the
    refinement never increases the objective, and it is what repairs the
    rounding loss when the lifted solution is far from rank-1). The
    homogenization coordinate is then divided out.

    A degenerate homogenization coordinate needs no special casing here: the
    entrywise projection maps it to 1, and the greedy pass either leaves it
    there (inert coordinate, as in the uninformed reduction) or moves it to
    its optimal phase before extraction.
    """
    u0 = _unit_modulus(solution.eigvec)
    u = greedy_coordinate_solve(problem, u0, max_sweeps=refine_sweeps)
    return extract_phases(u)


def brute_force_oracle(problem: LiftedProblem, grid_points_per_phase: int):
    """Exhaustive grid minimization of the QCQP over phase angles.

    Fixes the homogenization coordinate to 1 (global-phase invariance) and
    scans ``theta_i in {2*pi*k/G - pi}`` for every phase. Intended as a test
    oracle: refuses more than 4 phases or more than 128 points per phase.

    Returns
    -------
    (np.ndarray, float)
        Best grid vector ``u`` (length M+1, last entry 1) and its objective.
    """
    m = problem.n_phases
    g = int(grid_points_per_phase)
    if m > 4:
        raise ValueError(f"oracle refuses {m} phases (limit 4)")
    if g > 128 or g < 1:
        raise ValueError(f"oracle refuses {g} grid points per phase (limit 128)")
    Q = problem.matrix
    angles = 2.0 * np.pi * np.arange(g) / g - np.pi
    phases = np.exp(1j * angles)

    best_obj = math.inf
    best_u = None
    total = g**m
    block = 1 << 17
    strides = [g ** (m - 1 - j) for j in range(m)]  # last phase varies fastest
    for start in range(0, total, block):
        idx = np.arange(start, min(total, start + block))
        u_block = np.empty((idx.shape[0], m + 1), dtype=complex)
        for j, stride in enumerate(strides):
            u_block[:, j] = phases[(idx // stride) % g]
        u_block[:, m] = 1.0
        vals = np.real(np.einsum("ni,ni->n", u_block.conj(), u_block @ Q.T))
        k = int(np.argmin(vals))
        if vals[k] < best_obj:
            best_obj = float(vals[k])
            best_u = u_block[k].copy()
    return best_u, best_obj
