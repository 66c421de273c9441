import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from simplexmeasure import measures as M
from simplexmeasure import pushforward as P
from simplexmeasure.errors import DomainError
from simplexmeasure.geometry import chart_embed
from simplexmeasure.quadrature import QuadratureSpec


def scipy_fiber(f, x):
    """Third route: scipy's QUADPACK on the ray integral."""
    xt = chart_embed(np.asarray(x, dtype=float))
    n = f.n
    val, _ = integrate.quad(lambda u: u**n * M.density_at(f, u * xt), 0, np.inf,
                            epsabs=0, epsrel=1e-11, limit=400)
    return val / math.sqrt(n + 1)


def lognormal_ratio_oracle(x):
    # Y1/Y2 is log-normal with variance 2; map z -> x = z / (1 + z).
    z = x / (1 - x)
    return stats.lognorm.pdf(z, s=math.sqrt(2)) / (1 - x) ** 2 / math.sqrt(2)


def chi_ratio_oracle(x):
    # Ratio of independent half-normals is half-Cauchy.
    z = x / (1 - x)
    return stats.halfcauchy.pdf(z) / (1 - x) ** 2 / math.sqrt(2)


FAMILIES = [
    M.LogNormal([0.2, -0.3], [[1.0, 0.4], [0.4, 0.8]]),
    M.LogNormal([0.0, 0.5, -0.5], [[1.0, 0.3, 0.0], [0.3, 1.5, -0.2], [0.0, -0.2, 0.7]]),
    M.MultiGamma([2, 3], [1, 2]),
    M.MultiGamma([0.6, 1.5, 2.5], [0.5, 2, 1]),
    M.MultiGamma([1.2, 2, 3, 0.8], [1, 3, 0.4, 2]),
    M.MultiChi([1, 3]),
    M.MultiChi([2.5, 1, 4]),
    M.RadialReciprocal(1.5, 3),
]


@pytest.mark.parametrize("x, expected", [
    (0.5, math.sqrt(2 / math.pi)),
    (0.2, None),
    (0.9, None),
])
def test_lognormal_ratio_oracle(x, expected):
    td = P.closed_form(M.LogNormal([0, 0], np.eye(2)))
    assert td([x]) == pytest.approx(lognormal_ratio_oracle(x), rel=1e-12)
    if expected is not None:
        assert td([x]) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("x", [0.1, 0.5, 0.77])
def test_chi_ratio_oracle(x):
    assert P.closed_form(M.MultiChi([1, 1]))([x]) == pytest.approx(chi_ratio_oracle(x), rel=1e-12)


def test_point_examples():
    assert P.fiber_density(M.RadialReciprocal(2, 2), [0.3, 0.3]) == pytest.approx(2 / math.sqrt(3), abs=1e-9)
    assert P.fiber_density(M.LogNormal([0, 0], np.eye(2)), [0.5]) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-9)
    assert P.fiber_density(M.MultiGamma([1, 1], [1, 1]), [0.3]) == pytest.approx(1 / math.sqrt(2), rel=1e-9)
    assert P.closed_form(M.MultiChi([1, 1]))([0.5]) == pytest.approx(2 * math.sqrt(2) / math.pi, abs=1e-10)
    assert P.closed_form(M.MultiGamma([2, 3], [1, 1]))([0.5]) == pytest.approx(1.5 / math.sqrt(2), rel=1e-13)


def test_lebesgue_chart_density_examples():
    assert P.lebesgue_chart_density(P.closed_form(M.RadialReciprocal(2, 2)), [0.1, 0.6]) == pytest.approx(2.0)
    assert P.lebesgue_chart_density(P.closed_form(M.MultiGamma([1, 1], [1, 1])), [0.37]) == pytest.approx(1.0)
    g = P.lebesgue_chart_density(P.closed_form(M.LogNormal([0, 0], np.eye(2))), [0.5])
    assert g == pytest.approx(2 / math.sqrt(math.pi), rel=1e-13)


def test_lognormal_aux_examples():
    v, q, x, y = P.lognormal_aux([0, 0], np.eye(2), [0.5, 0.5])
    ln2 = math.log(2)
    assert (v, q, x, y) == pytest.approx((0.5, math.pi / 2, -2 * ln2, 2 * ln2**2), rel=1e-14)
    _, _, x, y = P.lognormal_aux([math.log(0.5)] * 2, np.eye(2), [0.5, 0.5])
    assert abs(x) < 1e-15 and abs(y) < 1e-15
    v, *_ = P.lognormal_aux([0, 0], np.diag([1.0, 4.0]), [0.3, 0.7])
    assert v == pytest.approx(0.8, rel=1e-14)
    with pytest.raises(DomainError):
        P.lognormal_aux([0, 0], np.eye(2), [1.0, 0.0])


def test_lognormal_diagonal_display_agrees(rng):
    for n in (1, 2, 3):
        var = rng.uniform(0.2, 3, n + 1)
        mu = rng.normal(size=n + 1)
        b = rng.dirichlet(np.ones(n + 1))
        general = P.lognormal_aux(mu, np.diag(var), b)
        diagonal = P.lognormal_aux_diagonal(mu, var, b)
        assert np.allclose(general, diagonal, rtol=1e-12, atol=0)


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f"{M.family_name(f)}-n{f.n}")
def test_three_routes_agree(family, rng):
    td = P.closed_form(family)
    for b in rng.dirichlet(np.full(family.n + 1, 2.0), 5):
        x = b[:-1]
        closed = td(x)
        assert P.fiber_density(family, x) == pytest.approx(closed, rel=1e-9)
        log_route = P.fiber_density(family, x, QuadratureSpec(substitution="log"))
        assert log_route == pytest.approx(closed, rel=1e-9)
        if family.n <= 2:
            assert scipy_fiber(family, x) == pytest.approx(closed, rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.1, 6.0), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_theta_collapse_property(s, n, seed):
    x = np.random.default_rng(seed).dirichlet(np.ones(n + 1))[:n]
    assert P.fiber_density(M.RadialReciprocal(s, n), x) == pytest.approx(
        P.uniform_simplex_constant(n), abs=1e-7)


def test_equal_beta_reduces_to_dirichlet(rng):
    alpha = np.array([0.8, 2.0, 3.3])
    for b in rng.dirichlet(np.ones(3), 20):
        x = b[:2]
        expected = M.dirichlet_chart_density(alpha, x) / math.sqrt(3)
        assert P.closed_form(M.MultiGamma(alpha, [4.2] * 3))(x) == pytest.approx(expected, rel=1e-12)


def test_chi_alternative_form_is_not_the_density():
    corrected = P.closed_form(M.MultiChi([1, 1]))([0.5])
    alternative = P.chi_alternative_form([1, 1], [0.5])
    assert corrected == pytest.approx(0.900316, abs=1e-6)
    assert alternative == pytest.approx(4.5135, abs=1e-4)


def test_dirac_pushes_to_atom():
    td = P.closed_form(M.DiracAt([1.0, 3.0]))
    assert td.is_atom and np.allclose(td.atom, [0.25, 0.75])
    assert np.allclose(P.closed_form(M.DiracAt([10.0, 30.0])).atom, td.atom, atol=1e-15)
    with pytest.raises(DomainError):
        td([0.5])
    with pytest.raises(DomainError):
        P.fiber_density(M.DiracAt([1.0, 3.0]), [0.5])


def test_boundary_and_domain_behaviour():
    td = P.closed_form(M.LogNormal([0, 0], np.eye(2)))
    assert td([0.0]) == 0.0 and td([1.0]) == 0.0
    with pytest.raises(DomainError):
        td([1.2])
    with pytest.raises(DomainError):
        P.fiber_density(M.MultiGamma([1, 1], [1, 1]), [1.0])
    with pytest.raises(DomainError):
        td([0.2, 0.3])


def test_numeric_fiber_matches_closed_form():
    f = M.MultiGamma([2, 1.5, 3], [1, 1, 2])
    x = np.array([[0.2, 0.3], [0.5, 0.1]])
    assert np.allclose(P.numeric_fiber(f)(x), P.closed_form(f)(x), rtol=1e-9)


def test_fiber_integral_reports_error():
    res = P.fiber_integral(M.MultiChi([2, 2]), [0.4])
    assert res.error_estimate < 1e-8 * res.value
