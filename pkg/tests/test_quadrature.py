import math

import numpy as np
import pytest

from simplexmeasure.errors import DomainError, QuadratureError
from simplexmeasure.quadrature import (
    GAUSS_WEIGHTS,
    KRONROD_WEIGHTS,
    NODES,
    QuadratureSpec,
    integrate_Bn,
    integrate_halfline,
    integrate_interval,
    integrate_line,
)


@pytest.mark.parametrize("degree", range(0, 23))
def test_kronrod_rule_exact_through_degree_22(degree):
    exact = 0.0 if degree % 2 else 2.0 / (degree + 1)
    assert np.dot(KRONROD_WEIGHTS, NODES**degree) == pytest.approx(exact, abs=1e-14)


@pytest.mark.parametrize("degree", range(0, 14))
def test_gauss_rule_exact_through_degree_13(degree):
    exact = 0.0 if degree % 2 else 2.0 / (degree + 1)
    assert np.dot(GAUSS_WEIGHTS, NODES**degree) == pytest.approx(exact, abs=1e-14)


def test_weights_sum_to_interval_length():
    assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert np.count_nonzero(GAUSS_WEIGHTS) == 7


def test_known_integrals():
    q = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12)
    assert integrate_interval(np.sin, 0, math.pi, q).value == pytest.approx(2, rel=1e-12)
    assert integrate_halfline(lambda u: 1 / (1 + u * u), q).value == pytest.approx(math.pi / 2, rel=1e-12)
    assert integrate_halfline(lambda u: u * np.exp(-u), q).value == pytest.approx(1, rel=1e-12)
    r = integrate_halfline(lambda u: 1 / (1 + u**4), q)
    assert r.value == pytest.approx(math.pi / (4 * math.sin(math.pi / 4)), rel=1e-12)
    assert integrate_line(lambda t: np.exp(-t * t / 2), q).value == pytest.approx(math.sqrt(2 * math.pi), rel=1e-12)
    assert integrate_line(lambda t: np.exp(2 * t - np.exp(2 * t)), q).value == pytest.approx(0.5, rel=1e-12)


def test_error_estimate_is_honest():
    res = integrate_interval(lambda x: np.sqrt(x), 0, 1, QuadratureSpec(abs_tol=1e-10, rel_tol=1e-10))
    assert abs(res.value - 2 / 3) <= max(res.error_estimate, 1e-15)
    assert res.evaluations > 15


def test_log_substitution_for_halfline():
    q = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, substitution="log")
    assert integrate_halfline(lambda u: np.exp(-u), q).value == pytest.approx(1, rel=1e-11)


def test_subdivision_budget_is_enforced():
    with pytest.raises(QuadratureError):
        integrate_interval(lambda x: np.sin(1 / x), 1e-6, 1, QuadratureSpec(1e-15, 1e-14, 5))


def test_non_finite_integrand_raises():
    with pytest.raises(QuadratureError), np.errstate(divide="ignore"):
        integrate_interval(lambda x: 1 / (x - 0.5), 0, 1)


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(abs_tol=-1)
    with pytest.raises(DomainError):
        QuadratureSpec(substitution="tan")


def test_simplex_volumes(rng):
    for n in (1, 2, 3):
        res = integrate_Bn(lambda x: np.ones(len(x)), n, "grid")
        assert res.value == pytest.approx(1 / math.factorial(n), abs=1e-9)
    mc = integrate_Bn(lambda x: np.ones(len(x)), 3, "montecarlo", rng=rng, samples=10**5)
    assert mc.value == pytest.approx(1 / 6, rel=1e-12)


def test_simplex_integral_of_monomial():
    # Dirichlet normalizer B(2, 2, 1) = 1/24
    res = integrate_Bn(lambda x: x[:, 0] * x[:, 1], 2, "grid")
    assert res.value == pytest.approx(1 / 24, rel=1e-10)


def test_grid_rejects_high_dimension_and_mc_needs_rng():
    with pytest.raises(DomainError):
        integrate_Bn(lambda x: np.ones(len(x)), 4, "grid")
    with pytest.raises(DomainError):
        integrate_Bn(lambda x: np.ones(len(x)), 2, "montecarlo")
