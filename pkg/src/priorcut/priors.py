"""Multivariate von Mises prior machinery.

Densities, exact rejection samplers, and the construction that turns the
prior parameters (concentrations ``kappa``, coupling matrix ``delta``) into
a real symmetric phase precision matrix. Maximizing the joint circular
density is equivalent to minimizing the Mahalanobis distance of the phasor
vector to the all-ones vector under that precision, which is what lets the
MAP problem downstream become a quadratic form.

The multivariate normalizing constant is intractable and never computed:
joint densities are exposed unnormalized, and every consumer works with
differences or argmins. Only the 1-D density is normalized exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from priorcut.core import as_angle_vector, wrap_angle

__all__ = [
    "MvmParams",
    "PhasePrecision",
    "MarkovChainParams",
    "Vm1dPrior",
    "MarkovPrior",
    "UniformPrior",
    "CustomPrior",
    "bessel_i0",
    "bessel_i1",
    "log_bessel_i0",
    "vm1d_log_density",
    "mvm_unnormalized_log_density",
    "precision_from_mvm",
    "precision_markov",
    "mahalanobis_phase_distance",
    "sample_vm1d",
    "sample_markov_phases",
    "sample_mvm_gibbs",
    "prior_precision",
    "sample_prior_phases",
]

_SYM_TOL = 1e-12

# ---------------------------------------------------------------------------
# Parameter containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MvmParams:
    """Multivariate von Mises parameters (kappa, delta, mu).

    ``kappa`` is the length-M concentration vector, ``delta`` the real
    symmetric M x M coupling matrix with zero diagonal, ``mu`` the length-M
    mean angles.
    """

    kappa: np.ndarray
    delta: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        kappa = np.atleast_1d(np.asarray(self.kappa, dtype=float))
        delta = np.asarray(self.delta, dtype=float)
        mu = as_angle_vector(self.mu, length=kappa.shape[0])
        m = kappa.shape[0]
        if delta.shape != (m, m):
            raise ValueError(f"delta must be {m}x{m}, got {delta.shape}")
        if np.max(np.abs(delta - delta.T), initial=0.0) > _SYM_TOL:
            raise ValueError("delta must be symmetric within 1e-12")
        if np.any(np.diag(delta) != 0.0):
            raise ValueError("delta must have an exactly zero diagonal")
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "mu", mu)

    @property
    def dim(self) -> int:
        return self.kappa.shape[0]


@dataclass(frozen=True)
class PhasePrecision:
    """Real symmetric phase precision matrix with its mean angles.

    The mean angles are carried alongside so the observation model can
    absorb them into the mixing matrix and treat the prior as zero-mean.
    """

    matrix: np.ndarray
    mean_phases: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"precision must be square, got shape {mat.shape}")
        if mat.size and np.max(np.abs(mat - mat.T)) > _SYM_TOL:
            raise ValueError("precision must be symmetric within 1e-12")
        mu = as_angle_vector(self.mean_phases, length=mat.shape[0])
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "mean_phases", mu)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.matrix)
            return True
        except np.linalg.LinAlgError:
            return False


@dataclass(frozen=True)
class MarkovChainParams:
    """AR(1) phase chain: theta_i = a*theta_{i-1} + w_i, w_i ~ N(0, sigma_theta_sq)."""

    a: float
    sigma_theta_sq: float
    length: int

    def __post_init__(self):
        if self.sigma_theta_sq <= 0:
            raise ValueError("sigma_theta_sq must be positive")
        if self.length < 1:
            raise ValueError("length must be at least 1")


# Prior specifications consumed by instance generation and the harness.


@dataclass(frozen=True)
class Vm1dPrior:
    """Independent von Mises phases with common concentration and zero mean."""

    kappa: float = 1.0

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")


@dataclass(frozen=True)
class MarkovPrior:
    """AR(1) chain prior on the phases."""

    a: float = 0.8
    sigma_theta_sq: float = 0.1

    def __post_init__(self):
        if self.sigma_theta_sq <= 0:
            raise ValueError("sigma_theta_sq must be positive")


@dataclass(frozen=True)
class UniformPrior:
    """Uninformative prior: uniform phases, zero precision."""


@dataclass(frozen=True)
class CustomPrior:
    """Fully specified multivariate von Mises prior (zero mean)."""

    kappa: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)
    gibbs_sweeps: int = 100

    def __post_init__(self):
        object.__setattr__(self, "kappa", np.atleast_1d(np.asarray(self.kappa, dtype=float)))
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=float))
        if self.gibbs_sweeps < 1:
            raise ValueError("gibbs_sweeps must be at least 1")

    def params(self) -> MvmParams:
        return MvmParams(self.kappa, self.delta, np.zeros(self.kappa.shape[0]))


# ---------------------------------------------------------------------------
# Modified Bessel functions I0, I1
# ---------------------------------------------------------------------------

_SERIES_CUTOFF = 15.0


def _i_series(x: float, order: int) -> float:
    # Ascending series, all terms positive: no cancellation.
    half = 0.5 * x
    term = half**order / math.factorial(order)
    total = term
    k = 1
    while True:
        term *= half * half / (k * (k + order))
        total += term
        if term < 1e-18 * total or k > 500:
            return total
        k += 1


def _i_asymptotic_factor(x: float, order: int) -> float:
    # Sum of the large-argument expansion, i.e. I_nu(x)*sqrt(2*pi*x)*exp(-x).
    # Terms shrink then diverge; truncate at the smallest term.
    mu = 4.0 * order * order
    term = 1.0
    total = term
    prev = abs(term)
    for k in range(1, 30):
        term *= -(mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(term) >= prev:
            break
        total += term
        prev = abs(term)
        if abs(term) < 1e-18 * abs(total):
            break
    return total


def bessel_i0(x: float) -> float:
    """Modified Bessel function of the first kind, order 0."""
    x = abs(float(x))
    if x < _SERIES_CUTOFF:
        return _i_series(x, 0)
    return math.exp(x) / math.sqrt(2.0 * math.pi * x) * _i_asymptotic_factor(x, 0)


def bessel_i1(x: float) -> float:
    """Modified Bessel function of the first kind, order 1."""
    ax = abs(float(x))
    if ax < _SERIES_CUTOFF:
        val = _i_series(ax, 1)
    else:
        val = math.exp(ax) / math.sqrt(2.0 * math.pi * ax) * _i_asymptotic_factor(ax, 1)
    return math.copysign(val, x)


def log_bessel_i0(x: float) -> float:
    """log(I0(x)), overflow-safe for large arguments."""
    x = abs(float(x))
    if x < _SERIES_CUTOFF:
        return math.log(_i_series(x, 0))
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(_i_asymptotic_factor(x, 0))


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------


def vm1d_log_density(theta: float, mu: float, kappa: float) -> float:
    """Exact normalized log-density of the 1-D von Mises distribution.

    Returns ``kappa*cos(theta - mu) - log(2*pi*I0(kappa))``. ``kappa`` must be
    nonnegative for the density to be a valid normalized distribution.
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    return kappa * math.cos(theta - mu) - math.log(2.0 * math.pi) - log_bessel_i0(kappa)


def mvm_unnormalized_log_density(theta, params: MvmParams) -> float:
    """Exponent of the multivariate von Mises density (normalizer dropped).

    Parameters
    ----------
    theta : array of shape (M,)
        Angles in radians.
    params : MvmParams

    Returns
    -------
    float
        ``kappa . c - s^T delta s - c^T delta c`` where c and s are the
        elementwise cosine and sine of ``theta - mu``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape[0] != params.dim:
        raise ValueError(f"theta has length {theta.shape[0]}, expected {params.dim}")
    d = theta - params.mu
    c = np.cos(d)
    s = np.sin(d)
    return float(params.kappa @ c - s @ params.delta @ s - c @ params.delta @ c)


# ---------------------------------------------------------------------------
# Precision construction and phase distance
# ---------------------------------------------------------------------------


def precision_from_mvm(params: MvmParams) -> PhasePrecision:
    """Phase precision matrix equivalent to a multivariate von Mises prior.

    Off-diagonal entries are the couplings ``delta[i, k]``; the diagonal is
    ``kappa[i]/2 - sum_{l != i} delta[i, l]``. With this matrix, differences
    of the unnormalized log-density equal negated differences of
    :func:`mahalanobis_phase_distance` (zero-mean case).
    """
    m = params.dim
    mat = params.delta.copy()
    off_sums = params.delta.sum(axis=1)  # diagonal of delta is zero
    mat[np.diag_indices(m)] = 0.5 * params.kappa - off_sums
    return PhasePrecision(mat, params.mu)


def precision_markov(params: MarkovChainParams) -> PhasePrecision:
    """Tridiagonal phase precision of the AR(1) chain prior.

    Entries: ``-a/(2*sigma^2)`` on the first off-diagonals,
    ``(1+a^2)/(2*sigma^2)`` on the diagonal except the last entry, which is
    ``1/(2*sigma^2)``. Mean phases are zero.
    """
    m = params.length
    if m < 2:
        raise ValueError("Markov precision needs length >= 2")
    half_inv_var = 0.5 / params.sigma_theta_sq
    mat = np.zeros((m, m))
    idx = np.arange(m)
    mat[idx, idx] = (1.0 + params.a**2) * half_inv_var
    mat[m - 1, m - 1] = half_inv_var
    mat[idx[:-1], idx[:-1] + 1] = -params.a * half_inv_var
    mat[idx[:-1] + 1, idx[:-1]] = -params.a * half_inv_var
    return PhasePrecision(mat, np.zeros(m))


def mahalanobis_phase_distance(phi, precision: PhasePrecision) -> float:
    """Quadratic distance of a unit-modulus phasor vector to the all-ones vector.

    Returns the real value ``(phi - 1)^H P (phi - 1)`` for the precision
    matrix ``P``. Inputs must be unit-modulus within 1e-9.
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=complex))
    if phi.shape[0] != precision.dim:
        raise ValueError(f"phi has length {phi.shape[0]}, expected {precision.dim}")
    if np.max(np.abs(np.abs(phi) - 1.0), initial=0.0) > 1e-9:
        raise ValueError("phi entries must have unit modulus within 1e-9")
    d = phi - 1.0
    return float(np.real(d.conj() @ precision.matrix @ d))


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def _best_fisher_r(kappa: float) -> float:
    if kappa < 1e-5:
        # second-order expansion of the envelope parameter around zero
        return 1.0 / kappa + kappa
    tau = 1.0 + math.sqrt(1.0 + 4.0 * kappa * kappa)
    rho = (tau - math.sqrt(2.0 * tau)) / (2.0 * kappa)
    return (1.0 + rho * rho) / (2.0 * rho)


def sample_vm1d(mu: float, kappa: float, rng: np.random.Generator, size: int | None = None):
    """Draw from the 1-D von Mises distribution.

    Uses the Best-Fisher rejection sampler with a wrapped-Cauchy envelope
    (exact, no tuning). ``kappa = 0`` falls back to the uniform circle.

    Parameters
    ----------
    mu : float
        Mean direction in radians.
    kappa : float
        Concentration, must be nonnegative.
    rng : np.random.Generator
    size : int, optional
        Number of draws; a scalar is returned when omitted.

    Returns
    -------
    float or np.ndarray
        Angle(s) in (-pi, pi].
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    scalar = size is None
    n = 1 if scalar else int(size)
    if n < 0:
        raise ValueError("size must be nonnegative")

    if kappa == 0.0:
        out = wrap_angle(rng.uniform(-np.pi, np.pi, n))
    else:
        r = _best_fisher_r(kappa)
        out = np.empty(n)
        filled = 0
        while filled < n:
            m = n - filled
            u1 = rng.random(m)
            z = np.cos(np.pi * u1)
            f = (1.0 + r * z) / (r + z)
            c = kappa * (r - f)
            u2 = rng.random(m)
            with np.errstate(divide="ignore"):  # u2 == 0 accepts via +inf
                accept = (c * (2.0 - c) - u2 > 0.0) | (np.log(c / u2) + 1.0 - c >= 0.0)
            u3 = rng.random(m)
            sign = np.where(u3 < 0.5, -1.0, 1.0)
            vals = mu + sign * np.arccos(np.clip(f, -1.0, 1.0))
            good = vals[accept]
            out[filled : filled + good.shape[0]] = good
            filled += good.shape[0]
        out = wrap_angle(out)
    return float(out[0]) if scalar else out


def sample_markov_phases(params: MarkovChainParams, rng: np.random.Generator) -> np.ndarray:
    """Sample one AR(1) phase chain, wrapped to (-pi, pi] on output.

    The recursion runs on unwrapped reals (theta_1 ~ N(0, sigma^2), then
    theta_i = a*theta_{i-1} + w_i); wrapping happens only at the end.
    """
    sigma = math.sqrt(params.sigma_theta_sq)
    w = sigma * rng.standard_normal(params.length)
    theta = lfilter([1.0], [1.0, -params.a], w)
    return wrap_angle(theta)


def sample_mvm_gibbs(params: MvmParams, rng: np.random.Generator, sweeps: int = 100) -> np.ndarray:
    """Approximate multivariate von Mises sample via Gibbs sweeps.

    Each full conditional of the joint density is itself a 1-D von Mises
    distribution, so the chain cycles :func:`sample_vm1d` over coordinates.
    The chain starts at the mean angles and runs a fixed number of sweeps;
    used for data generation under fully custom priors, where no exact
    sampler exists.
    """
    m = params.dim
    theta = params.mu.copy()
    for _ in range(sweeps):
        d = theta - params.mu
        c = np.cos(d)
        s = np.sin(d)
        for i in range(m):
            row = params.delta[i]
            coup_c = row @ c - row[i] * c[i]
            coup_s = row @ s - row[i] * s[i]
            a_cos = params.kappa[i] - 2.0 * coup_c
            a_sin = -2.0 * coup_s
            conc = math.hypot(a_cos, a_sin)
            shift = math.atan2(a_sin, a_cos)
            theta[i] = sample_vm1d(params.mu[i] + shift, conc, rng)
            d_i = theta[i] - params.mu[i]
            c[i] = math.cos(d_i)
            s[i] = math.sin(d_i)
    return wrap_angle(theta)


# ---------------------------------------------------------------------------
# Prior-spec dispatch
# ---------------------------------------------------------------------------


def prior_precision(prior, m: int) -> PhasePrecision:
    """Phase precision matrix implied by a prior specification."""
    if isinstance(prior, Vm1dPrior):
        return precision_from_mvm(MvmParams(np.full(m, prior.kappa), np.zeros((m, m)), np.zeros(m)))
    if isinstance(prior, MarkovPrior):
        return precision_markov(MarkovChainParams(prior.a, prior.sigma_theta_sq, m))
    if isinstance(prior, UniformPrior):
        return PhasePrecision(np.zeros((m, m)), np.zeros(m))
    if isinstance(prior, CustomPrior):
        params = prior.params()
        if params.dim != m:
            raise ValueError(f"custom prior has dimension {params.dim}, expected {m}")
        return precision_from_mvm(params)
    raise TypeError(f"unknown prior specification: {prior!r}")


def sample_prior_phases(prior, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a length-m phase vector from a prior specification."""
    if isinstance(prior, Vm1dPrior):
        if prior.kappa == 0.0:
            return wrap_angle(rng.uniform(-np.pi, np.pi, m))
        return sample_vm1d(0.0, prior.kappa, rng, size=m)
    if isinstance(prior, MarkovPrior):
        return sample_markov_phases(MarkovChainParams(prior.a, prior.sigma_theta_sq, m), rng)
    if isinstance(prior, UniformPrior):
        return wrap_angle(rng.uniform(-np.pi, np.pi, m))
    if isinstance(prior, CustomPrior):
        params = prior.params()
        if params.dim != m:
            raise ValueError(f"custom prior has dimension {params.dim}, expected {m}")
        return sample_mvm_gibbs(params, rng, sweeps=prior.gibbs_sweeps)
    raise TypeError(f"unknown prior specification: {prior!r}")
