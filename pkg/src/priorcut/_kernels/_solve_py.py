"""Pure-NumPy solver kernels: reference implementation and import fallback.

Both kernels mutate their first argument in place and assume a Hermitian
coefficient matrix ``Q`` (validated by the caller). Semantics must stay in
lockstep with the compiled twin in ``_solve_cy.pyx``.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def bcd_sweep(U: np.ndarray, Q: np.ndarray, nu: float, order: np.ndarray) -> None:
    """One pass of row/column block-coordinate descent on the lifted SDP.

    For each index i in ``order``, the i-th column of ``U`` (off-diagonal
    part) is replaced by the closed-form minimizer of trace(QU) over the
    positive-semidefinite completions with unit diagonal, shrunk by the
    barrier ``nu`` to keep the iterate strictly feasible:

        c     = U[rest, rest] @ Q[rest, i]
        gamma = Re(c^H Q[rest, i])
        col   = -sqrt((1 - nu) / gamma) * c   (zero when gamma <= 0)

    The matrix-vector product is taken over the full matrix and corrected
    for the i-th entry, which avoids copying the (n-1)^2 submatrix.
    """
    n = U.shape[0]
    for i in order:
        q = Q[:, i]
        w = U @ q
        c = w - U[:, i] * q[i]
        c[i] = 0.0
        gamma = float(np.real(np.vdot(c, q)))
        if gamma > 0.0:
            newcol = (-math.sqrt((1.0 - nu) / gamma)) * c
        else:
            newcol = np.zeros(n, dtype=complex)
        newcol[i] = 1.0
        U[:, i] = newcol
        U[i, :] = newcol.conj()


def greedy_sweep(u: np.ndarray, Q: np.ndarray, order: np.ndarray) -> None:
    """One pass of closed-form coordinate minimization of u^H Q u, |u_i| = 1.

    With the other coordinates fixed, the i-dependent part of the objective
    is 2*Re(conj(u_i) w_i) with w_i = sum_{k != i} Q[i, k] u[k], minimized on
    the unit circle by u_i = -w_i/|w_i|. A zero w_i leaves u_i unchanged.
    """
    for i in order:
        w = Q[i, :] @ u - Q[i, i] * u[i]
        a = abs(w)
        if a > 0.0:
            u[i] = -w / a


def lifted_objective(U: np.ndarray, Q: np.ndarray) -> float:
    """trace(QU) for Hermitian Q and U (real up to roundoff)."""
    return float(np.real(np.sum(Q * U.T)))
