import numpy as np
import pytest

from priorcut.core import (
    RNG_ALGORITHM,
    as_seed,
    complex_gaussian,
    hermitian_check,
    make_rng,
    mix_seed,
    wrap_angle,
)


def test_wrap_angle_basics():
    assert wrap_angle(0.0) == 0.0
    assert wrap_angle(3 * np.pi) == pytest.approx(np.pi, abs=1e-12)
    # half-open convention: -pi maps to pi, pi stays
    assert wrap_angle(-np.pi) == np.pi
    assert wrap_angle(np.pi) == np.pi


def test_wrap_angle_range_and_idempotence():
    rng = make_rng(1)
    x = rng.uniform(-1e3, 1e3, 5000)
    w = wrap_angle(x)
    assert np.all(w > -np.pi) and np.all(w <= np.pi)
    assert np.array_equal(wrap_angle(w), w)


def test_wrap_angle_periodicity_large_k():
    rng = make_rng(2)
    x = rng.uniform(-np.pi, np.pi, 50)
    for k in (1, -1, 17, -123, 10**6, -(10**6)):
        np.testing.assert_allclose(wrap_angle(x + 2 * np.pi * k), wrap_angle(x), atol=1e-9)


def test_wrap_angle_rejects_nonfinite():
    for bad in (np.nan, np.inf, -np.inf):
        with pytest.raises(ValueError):
            wrap_angle(bad)
    with pytest.raises(ValueError):
        wrap_angle(np.array([0.0, np.nan]))


def test_hermitian_check_identity():
    assert hermitian_check(np.eye(2), 1e-12)


def test_hermitian_check_skew_entry():
    q = np.array([[0.0, 1j], [1j, 0.0]])
    assert not hermitian_check(q, 1e-12)


def test_hermitian_check_rejects_nonsquare():
    with pytest.raises(ValueError):
        hermitian_check(np.zeros((2, 3)), 1e-12)


def test_hermitian_check_on_built_problem():
    # a lifted problem assembled from a random instance must pass the check
    from priorcut.model import GenerationConfig, generate_instance, pseudo_inverse
    from priorcut.priors import Vm1dPrior, prior_precision
    from priorcut.problem import build_lifted_problem, data_misfit_matrix

    inst = generate_instance(GenerationConfig(M=10, K=3, sigma_n_sq=0.2,
                                              prior_spec=Vm1dPrior(1.0), seed=77))
    a_pinv = pseudo_inverse(inst.A)
    misfit = data_misfit_matrix(inst.y, inst.A, a_pinv)
    problem = build_lifted_problem(misfit, prior_precision(Vm1dPrior(1.0), 10), 0.2)
    assert hermitian_check(problem.matrix, 1e-10)


def test_seed_validation():
    assert as_seed(0) == 0
    assert as_seed(2**64 - 1) == 2**64 - 1
    with pytest.raises(ValueError):
        as_seed(-1)
    with pytest.raises(ValueError):
        as_seed(2**64)


def test_mix_seed_is_deterministic_and_spread():
    seeds = [mix_seed(42, i) for i in range(100)]
    assert seeds == [mix_seed(42, i) for i in range(100)]
    assert len(set(seeds)) == 100
    assert all(0 <= s < 2**64 for s in seeds)
    assert mix_seed(42, 0) != mix_seed(43, 0)


def test_make_rng_reproducible():
    a = make_rng(123).standard_normal(8)
    b = make_rng(123).standard_normal(8)
    assert np.array_equal(a, b)
    assert RNG_ALGORITHM == "numpy.random.Philox"


def test_complex_gaussian_moments():
    rng = make_rng(9)
    z = complex_gaussian(rng, 200_000, 0.7)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(0.7, rel=0.02)
    # circularity: real/imag parts carry equal halves
    assert np.var(z.real) == pytest.approx(0.35, rel=0.03)
    assert np.var(z.imag) == pytest.approx(0.35, rel=0.03)
