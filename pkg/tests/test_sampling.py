import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from simplexmeasure import measures as M
from simplexmeasure import pushforward as P
from simplexmeasure.errors import DomainError
from simplexmeasure.sampling import (
    BinSpec,
    SeededGenerator,
    bin_probabilities,
    marginal_cdf_table,
    mc_verify,
    radial_reciprocal_radius,
    sample,
)


def test_seeded_generator_is_pcg64_stream():
    a = SeededGenerator(42).generator().random(5)
    b = np.random.Generator(np.random.PCG64(42)).random(5)
    assert np.array_equal(a, b)
    s1, s2 = SeededGenerator(42).spawn(2)
    ref = [np.random.Generator(np.random.PCG64(ss)) for ss in np.random.SeedSequence(42).spawn(2)]
    assert np.array_equal(s1.random(3), ref[0].random(3))
    assert not np.array_equal(s2.random(3), SeededGenerator(42).spawn(2)[0].random(3))


def test_seed_validation():
    with pytest.raises(DomainError):
        SeededGenerator(-1)
    with pytest.raises(DomainError):
        SeededGenerator(1, "MT19937")


def test_sample_shapes_and_determinism():
    f = M.MultiGamma([1, 2, 3], [1, 1, 1])
    a = sample(f, SeededGenerator(3), 100)
    assert a.shape == (100, 3) and np.all(a > 0)
    assert np.array_equal(a, sample(f, 3, 100))
    assert np.all(sample(M.DiracAt([1, 2]), 0, 4) == [1, 2])
    with pytest.raises(DomainError):
        sample(f, 0, 0)


def test_sample_moments():
    n = 200_000
    g = sample(M.MultiGamma([2, 3], [1, 4]), 1, n)
    assert np.allclose(g.mean(axis=0), [2, 0.75], rtol=0.01)
    c = sample(M.MultiChi([1, 4]), 2, n)
    assert np.allclose(c.mean(axis=0), [stats.chi.mean(1), stats.chi.mean(4)], rtol=0.01)
    sigma = np.array([[0.5, 0.2], [0.2, 0.3]])
    ln = np.log(sample(M.LogNormal([0.1, -0.4], sigma), 3, n))
    assert np.allclose(ln.mean(axis=0), [0.1, -0.4], atol=0.01)
    assert np.allclose(np.cov(ln.T), sigma, atol=0.01)


@pytest.mark.parametrize("s, n", [(1.5, 1), (2.0, 2), (4.0, 3)])
def test_radial_radius_law(s, n):
    r = radial_reciprocal_radius(np.random.default_rng(7), s, n, 20_000)
    head = integrate.quad(lambda v: 1 / (1 + v**s), 0, 1)[0]

    def tail(w):
        # int_1^{1/w} dv / (1 + v^s), after v = 1/w
        return integrate.quad(lambda u: u ** (s - 2) / (u**s + 1), w, 1)[0]

    total = head + tail(0.0)

    def mass(v):
        if v <= 1:
            return integrate.quad(lambda z: 1 / (1 + z**s), 0, v)[0]
        return head + tail(1 / v)

    def cdf(rr):
        return np.array([mass(x ** (n + 1)) for x in np.atleast_1d(rr)]) / total

    assert stats.kstest(r[:2000], cdf).pvalue > 1e-3


def test_bin_index_matches_cells():
    for n, bins in ((1, 17), (2, 49)):
        spec = BinSpec.for_target(n, bins)
        cells = spec.cells()
        centroids = cells.mean(axis=1)
        assert np.array_equal(spec.index(centroids), np.arange(spec.bins))


def test_bin_spec_rounds_to_square():
    spec = BinSpec.for_target(2, 50)
    assert spec.per_side == 7 and spec.bins == 49
    with pytest.raises(DomainError):
        BinSpec.for_target(3, 10)


def test_bin_probabilities_sum_to_one():
    for f in (M.MultiGamma([2, 3], [1, 2]), M.LogNormal([0, 0, 0], np.eye(3)), M.RadialReciprocal(2, 2)):
        p = bin_probabilities(P.closed_form(f), BinSpec.for_target(f.n, 36))
        assert p.sum() == pytest.approx(1.0, abs=1e-6)
    uniform = bin_probabilities(P.closed_form(M.RadialReciprocal(2, 2)), BinSpec.for_target(2, 49))
    assert np.allclose(uniform, 1 / 49, rtol=1e-10)


def test_marginal_cdf_is_monotone_and_normalized():
    td = P.closed_form(M.MultiGamma([1.5, 2, 3], [1, 2, 1]))
    for coord in range(3):
        _, cdf = marginal_cdf_table(td, coord, knots=256)
        assert np.all(np.diff(cdf) >= -1e-15)
        assert cdf[-1] == pytest.approx(1.0, abs=1e-6)
    # Beta(2, 3) marginal under equal rates
    edges, cdf = marginal_cdf_table(P.closed_form(M.MultiGamma([2, 3], [1, 1])), 0, knots=64)
    assert np.allclose(cdf, stats.beta.cdf(edges, 2, 3), atol=1e-10)


def test_mc_verify_passes_for_matching_density():
    f = M.MultiGamma([2, 3], [1, 2])
    report = mc_verify(f, P.closed_form(f), SeededGenerator(11), 200_000, 40)
    assert report.verdict == "pass"
    data = json.loads(report.to_json())
    assert data["verdict"] == "pass" and data["bin_spec"]["bins"] == 40
    assert len(data["per_marginal_ks"]) == 2


def test_mc_verify_rejects_wrong_density():
    f = M.MultiGamma([2, 3], [1, 2])
    wrong = P.closed_form(M.MultiGamma([2, 3], [1, 1]))
    assert mc_verify(f, wrong, SeededGenerator(11), 200_000, 40).verdict == "fail"


def test_mc_verify_validation():
    f = M.RadialReciprocal(2, 2)
    with pytest.raises(DomainError, match="insufficient samples for bin floor"):
        mc_verify(f, P.closed_form(f), SeededGenerator(0), 10, 50)
    with pytest.raises(DomainError):
        mc_verify(f, P.closed_form(M.MultiGamma([1, 1], [1, 1])), SeededGenerator(0), 10_000, 10)
    with pytest.raises(DomainError):
        mc_verify(M.DiracAt([1, 1]), P.closed_form(M.DiracAt([1, 1])), SeededGenerator(0), 10_000, 10)
