"""MAP objective assembly: misfit matrix and homogenized quadratic form.

For fixed phases the ML signal estimate has a closed form, and plugging it
back reduces MAP phase estimation to minimizing

    (1/sigma_n^2) * ||(I - A A^+) Diag(y) phi||^2  +  (phi - 1)^H P (phi - 1)

over unit-modulus ``phi``, with ``P`` the phase precision. Appending a unit
homogenization coordinate turns the affine prior term into a pure quadratic
form, giving an (M+1)-dimensional unit-modulus QCQP ``min u^H C u`` whose
coefficient matrix is assembled here (scaled by sigma_n^2, which preserves
the argmin). A zero precision recovers the uninformed phase-retrieval
program exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from priorcut.core import require_hermitian
from priorcut.model import ProblemInstance, recover_signal
from priorcut.priors import PhasePrecision, mahalanobis_phase_distance

__all__ = [
    "LiftedProblem",
    "data_misfit_matrix",
    "build_lifted_problem",
    "qcqp_objective",
    "map_objective",
]

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class LiftedProblem:
    """Homogenized (M+1)-dimensional quadratic form for the phase QCQP.

    ``matrix`` is Hermitian of size (n_phases+1); ``precision`` is retained
    for reporting. Immutable and shareable across solver threads.
    """

    matrix: np.ndarray
    n_phases: int
    sigma_n_sq: float
    precision: PhasePrecision

    def __post_init__(self):
        mat = require_hermitian(self.matrix, HERMITIAN_TOL, name="lifted problem matrix")
        if mat.shape[0] != self.n_phases + 1:
            raise ValueError(
                f"matrix is {mat.shape[0]}x{mat.shape[0]}, expected {self.n_phases + 1}")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.n_phases + 1


def data_misfit_matrix(y: np.ndarray, A: np.ndarray, A_pinv: np.ndarray) -> np.ndarray:
    """Hermitian PSD matrix of the projected-residual quadratic form.

    Returns ``Diag(conj(y)) (I - A A^+) Diag(y)``, so that
    ``phi^H out phi = ||(I - A A^+) Diag(y) phi||^2``. The projector is
    symmetrized before use, making the output exactly Hermitian.
    """
    y = np.asarray(y, dtype=complex)
    A = np.asarray(A, dtype=complex)
    A_pinv = np.asarray(A_pinv, dtype=complex)
    m = y.shape[0]
    if A.shape[0] != m or A_pinv.shape != (A.shape[1], m):
        raise ValueError(
            f"dimension mismatch: y {y.shape}, A {A.shape}, A_pinv {A_pinv.shape}")
    proj = np.eye(m, dtype=complex) - A @ A_pinv
    proj = 0.5 * (proj + proj.conj().T)
    return y.conj()[:, None] * proj * y[None, :]


def build_lifted_problem(misfit: np.ndarray, precision: PhasePrecision,
                         sigma_n_sq: float) -> LiftedProblem:
    """Assemble the homogenized QCQP matrix from misfit and phase prior.

    Block layout (P = precision, s = sigma_n_sq, 1 the all-ones vector):

        [ misfit + s*P   -s*P @ 1      ]
        [ -s*1^T P        s*sum(P)     ]

    With a zero precision or zero noise variance the prior block vanishes and
    the matrix reduces exactly to ``[[misfit, 0], [0, 0]]``. An indefinite
    precision is legal but triggers a warning, since the prior term then
    rewards some phase deviations.
    """
    if sigma_n_sq < 0:
        raise ValueError("sigma_n_sq must be nonnegative")
    misfit = require_hermitian(misfit, HERMITIAN_TOL, name="misfit matrix")
    m = misfit.shape[0]
    if precision.dim != m:
        raise ValueError(f"precision is {precision.dim}-dimensional, expected {m}")
    P = precision.matrix
    if P.any() and sigma_n_sq > 0:
        min_eig = float(np.linalg.eigvalsh(P)[0])
        if min_eig < -1e-10:
            warnings.warn(
                f"phase precision is indefinite (min eigenvalue {min_eig:.3e}); "
                "the prior term is unbounded over relaxations", stacklevel=2)
    q = np.zeros((m + 1, m + 1), dtype=complex)
    q[:m, :m] = misfit + sigma_n_sq * P
    col = -sigma_n_sq * (P @ np.ones(m))
    q[:m, m] = col
    q[m, :m] = col.conj()
    q[m, m] = sigma_n_sq * float(P.sum())
    return LiftedProblem(matrix=q, n_phases=m, sigma_n_sq=sigma_n_sq, precision=precision)


def qcqp_objective(u: np.ndarray, problem: LiftedProblem) -> float:
    """Evaluate ``u^H C u`` for a unit-modulus vector ``u``.

    The value is real for a Hermitian coefficient matrix; an imaginary part
    above 1e-9 in magnitude indicates a corrupted matrix and raises.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (problem.dim,):
        raise ValueError(f"u has shape {u.shape}, expected ({problem.dim},)")
    if np.max(np.abs(np.abs(u) - 1.0)) > 1e-9:
        raise ValueError("u entries must have unit modulus within 1e-9")
    val = complex(u.conj() @ (problem.matrix @ u))
    if abs(val.imag) > 1e-9:
        raise AssertionError(f"objective has imaginary part {val.imag:.3e}")
    return val.real


def map_objective(phi: np.ndarray, instance: ProblemInstance,
                  precision: PhasePrecision, A_pinv: np.ndarray) -> float:
    """Full MAP cost of a phase vector: scaled data misfit plus prior distance.

    Returns ``(1/sigma_n^2) ||y - Diag(conj(phi)) A x_hat||^2 + d(phi)`` with
    ``x_hat`` the ML signal estimate for ``phi`` and ``d`` the Mahalanobis
    phase distance. In the noiseless case the data term becomes a hard
    consistency check: the prior term is returned when the residual is below
    1e-9, +inf otherwise.
    """
    phi = np.asarray(phi, dtype=complex)
    x_hat = recover_signal(phi, instance.y, A_pinv)
    residual = instance.y - phi.conj() * (instance.A @ x_hat)
    misfit = float(np.real(residual.conj() @ residual))
    prior_term = mahalanobis_phase_distance(phi, precision)
    if instance.sigma_n_sq == 0.0:
        if math.sqrt(misfit) <= 1e-9:
            return prior_term
        return math.inf
    return misfit / instance.sigma_n_sq + prior_term
