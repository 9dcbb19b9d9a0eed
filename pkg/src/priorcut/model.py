"""Observation model: instance generation, mean absorption, signal recovery.

An instance couples a complex mixing matrix ``A`` (M x K), a source signal
``x``, a phase vector ``theta``, and additive circular complex Gaussian
noise into the observation

    y = Diag(conj(phi)) A x + n,      phi = exp(1j * theta).

Phase priors with nonzero mean angles are handled by rotating the rows of
``A`` once (:func:`absorb_mean_phases`), after which everything downstream
assumes zero-mean phases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from priorcut.core import as_angle_vector, as_seed, complex_gaussian, make_rng
from priorcut.priors import (
    CustomPrior,
    MarkovPrior,
    UniformPrior,
    Vm1dPrior,
    sample_prior_phases,
)

__all__ = [
    "GenerationConfig",
    "ProblemInstance",
    "generate_instance",
    "absorb_mean_phases",
    "pseudo_inverse",
    "recover_signal",
]

_PRIOR_TYPES = (Vm1dPrior, MarkovPrior, UniformPrior, CustomPrior)


@dataclass(frozen=True)
class GenerationConfig:
    """Shape, noise level, phase prior, and seed of a synthetic instance."""

    M: int
    K: int
    sigma_n_sq: float
    prior_spec: object
    seed: int

    def __post_init__(self):
        if not self.M >= self.K >= 1:
            raise ValueError(f"need M >= K >= 1, got M={self.M}, K={self.K}")
        if self.sigma_n_sq < 0:
            raise ValueError("sigma_n_sq must be nonnegative")
        if not isinstance(self.prior_spec, _PRIOR_TYPES):
            raise TypeError(f"unknown prior specification: {self.prior_spec!r}")
        object.__setattr__(self, "seed", as_seed(self.seed))


@dataclass(frozen=True)
class ProblemInstance:
    """Ground truth plus observation; regenerating from ``seed`` is bit-exact."""

    A: np.ndarray
    x_true: np.ndarray
    theta_true: np.ndarray
    y: np.ndarray
    sigma_n_sq: float
    seed: int

    @property
    def M(self) -> int:
        return self.A.shape[0]

    @property
    def K(self) -> int:
        return self.A.shape[1]

    @property
    def phi_true(self) -> np.ndarray:
        return np.exp(1j * self.theta_true)


def generate_instance(config: GenerationConfig, rng: np.random.Generator | None = None) -> ProblemInstance:
    """Draw one synthetic instance.

    Entries of ``A`` are i.i.d. circular complex Gaussian with variance 1/M
    per real component (so E|A_mk|^2 = 2/M), entries of ``x`` with variance 1
    per component; phases come from ``config.prior_spec`` and the noise has
    total energy E|n_m|^2 = ``sigma_n_sq``, which keeps the 1/sigma_n_sq
    likelihood weight exact. The draw order (A, x, theta, n) is fixed so
    instances generated for different noise levels from the same seed share
    everything but the noise scale.

    Parameters
    ----------
    config : GenerationConfig
    rng : np.random.Generator, optional
        Defaults to a fresh generator seeded from ``config.seed``.
    """
    if rng is None:
        rng = make_rng(config.seed)
    m, k = config.M, config.K
    A = complex_gaussian(rng, (m, k), 2.0 / m)
    x = complex_gaussian(rng, k, 2.0)
    theta = sample_prior_phases(config.prior_spec, m, rng)
    noise = complex_gaussian(rng, m, config.sigma_n_sq)
    phi = np.exp(1j * theta)
    y = phi.conj() * (A @ x) + noise
    return ProblemInstance(A=A, x_true=x, theta_true=theta, y=y,
                           sigma_n_sq=config.sigma_n_sq, seed=config.seed)


def absorb_mean_phases(A: np.ndarray, mu) -> np.ndarray:
    """Rotate each row of ``A`` by the corresponding prior mean angle.

    Returns ``Diag(exp(1j*mu)) @ A``; processing the result may then assume
    zero-mean phases. Applying the map twice with ``mu`` and ``-mu`` is the
    identity up to roundoff.
    """
    A = np.asarray(A, dtype=complex)
    mu = as_angle_vector(mu, length=A.shape[0])
    return np.exp(1j * mu)[:, None] * A


def pseudo_inverse(A: np.ndarray, rel_tol: float = 1e-12, return_rank: bool = False):
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values below ``rel_tol`` times the largest are treated as zero.
    With ``return_rank=True`` also returns the numerical rank, so callers can
    detect column-rank deficiency (the pseudo-inverse itself is still valid).
    """
    A = np.asarray(A, dtype=complex)
    u, s, vh = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        rank = 0
        pinv = np.zeros((A.shape[1], A.shape[0]), dtype=complex)
    else:
        keep = s > rel_tol * s[0]
        rank = int(np.count_nonzero(keep))
        inv_s = np.zeros_like(s)
        inv_s[keep] = 1.0 / s[keep]
        pinv = (vh.conj().T * inv_s) @ u.conj().T
    if return_rank:
        return pinv, rank
    return pinv


def recover_signal(phi: np.ndarray, y: np.ndarray, A_pinv: np.ndarray) -> np.ndarray:
    """Maximum-likelihood signal estimate for fixed phases: ``A^+ Diag(phi) y``."""
    phi = np.asarray(phi, dtype=complex)
    y = np.asarray(y, dtype=complex)
    A_pinv = np.asarray(A_pinv, dtype=complex)
    if phi.shape != y.shape or A_pinv.shape[1] != y.shape[0]:
        raise ValueError(
            f"dimension mismatch: phi {phi.shape}, y {y.shape}, A_pinv {A_pinv.shape}")
    if np.max(np.abs(np.abs(phi) - 1.0), initial=0.0) > 1e-9:
        raise ValueError("phi entries must have unit modulus within 1e-9")
    return A_pinv @ (phi * y)
