"""Shared numeric vocabulary: angles, Hermitian checks, seeded randomness.

All vectors and matrices are plain ``numpy`` arrays (``complex128`` for
complex data, ``float64`` for angles and precisions). Everything here treats
its inputs as immutable values; samplers take an explicit ``Generator`` owned
by the caller, so sharing across threads is safe as long as each thread owns
its own generator.
"""

from __future__ import annotations

import numpy as np

# Counter-based generator: fixed, named, portable. The name is recorded in
# experiment output metadata so runs are attributable to a bit stream.
RNG_ALGORITHM = "numpy.random.Philox"

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15

TWO_PI = 2.0 * np.pi


def wrap_angle(x):
    """Wrap angles to the half-open interval (-pi, pi], with -pi mapping to pi.

    Parameters
    ----------
    x : float or array
        Angle(s) in radians. Must be finite.

    Returns
    -------
    float or np.ndarray
        ``x mod 2*pi`` shifted into (-pi, pi].
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("wrap_angle requires finite input")
    wrapped = np.mod(arr, TWO_PI)
    wrapped = np.where(wrapped > np.pi, wrapped - TWO_PI, wrapped)
    if np.isscalar(x) or arr.ndim == 0:
        return float(wrapped)
    return wrapped


def as_angle_vector(x, length: int | None = None) -> np.ndarray:
    """Coerce to a 1-D float array of wrapped angles, optionally checking length."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"angle vector must be 1-D, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"angle vector has length {arr.shape[0]}, expected {length}")
    return wrap_angle(arr)


def hermitian_check(Q, tol: float) -> bool:
    """True iff ``max_{i,k} |Q[i,k] - conj(Q[k,i])| <= tol``.

    Raises
    ------
    ValueError
        If ``Q`` is not a square matrix.
    """
    Q = np.asarray(Q)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"hermitian_check requires a square matrix, got shape {Q.shape}")
    if Q.size == 0:
        return True
    return float(np.max(np.abs(Q - Q.conj().T))) <= tol


def require_hermitian(Q, tol: float, name: str = "matrix") -> np.ndarray:
    """Validate Hermitian-ness within ``tol`` and return ``Q`` as complex128."""
    Q = np.asarray(Q, dtype=complex)
    if not hermitian_check(Q, tol):
        dev = float(np.max(np.abs(Q - Q.conj().T)))
        raise ValueError(f"{name} is not Hermitian within {tol:g} (deviation {dev:.3e})")
    return Q


def as_seed(seed) -> int:
    """Validate and return a 64-bit unsigned seed."""
    s = int(seed)
    if not 0 <= s <= _MASK64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return s


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix_seed(master_seed, index) -> int:
    """Derive an independent 64-bit seed from a master seed and a task index.

    The rule is a fixed splitmix64 finalizer over ``master + (index+1)*golden``
    so parallel trials get decorrelated streams regardless of scheduling.
    """
    master = as_seed(master_seed)
    idx = int(index)
    if idx < 0:
        raise ValueError("index must be nonnegative")
    return _splitmix64((master + ((idx + 1) * _GOLDEN)) & _MASK64)


def make_rng(seed) -> np.random.Generator:
    """Seeded generator backed by the fixed bit stream named in RNG_ALGORITHM."""
    return np.random.Generator(np.random.Philox(key=as_seed(seed)))


def complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Zero-mean circular complex Gaussian draws with E|z|^2 = variance.

    Real and imaginary parts are i.i.d. N(0, variance/2). The real block is
    drawn before the imaginary block, which fixes the stream layout.
    """
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)
