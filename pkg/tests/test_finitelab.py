from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplexmeasure import finitelab as F
from simplexmeasure.errors import AbsoluteContinuityError, DomainError, MapError, PreconditionError

rationals = st.fractions(min_value=-4, max_value=4, max_denominator=6)
nonneg = st.one_of(st.just(Fraction(0)), st.fractions(min_value=Fraction(1, 6), max_value=5, max_denominator=6))


@st.composite
def instances(draw, kind="any"):
    size = draw(st.integers(1, 6))
    src = tuple(f"p{i}" for i in range(size))
    mu1 = F.FiniteMeasureSpace(src, {p: draw(nonneg) for p in src})
    if kind == "bijective":
        perm = draw(st.permutations(range(size)))
        tgt = tuple(f"q{i}" for i in range(size))
        phi = F.FiniteMap({p: tgt[j] for p, j in zip(src, perm)})
    elif kind == "injective":
        extra = draw(st.integers(0, 2))
        tgt = tuple(f"q{i}" for i in range(size + extra))
        perm = draw(st.permutations(range(size + extra)))[:size]
        phi = F.FiniteMap({p: tgt[j] for p, j in zip(src, perm)})
    else:
        m = draw(st.integers(1, 6))
        tgt = tuple(f"q{i}" for i in range(m))
        phi = F.FiniteMap({p: tgt[draw(st.integers(0, m - 1))] for p in src})
    mu2 = F.FiniteMeasureSpace(tgt, F.pushforward_finite(mu1, phi, tgt))
    lam = {p: draw(rationals) for p in src}
    return mu1, mu2, phi, lam


def test_pushforward_example():
    phi = F.FiniteMap({"a": "c", "b": "c"})
    assert F.pushforward_finite({"a": 1, "b": 2}, phi, ["c"]) == {"c": 3}


def test_decomposition_example():
    lam_a, lam_s = F.lebesgue_decompose({"a": 1, "b": 2}, {"a": 1, "b": 0})
    assert lam_a == {"a": 1, "b": 0} and lam_s == {"a": 0, "b": 2}


def test_counterexample_noninjective():
    ce = F.counterexample_noninjective()
    assert ce["singular_before"] is True and ce["singular_after"] is False
    assert ce["mu_after"] == {"c": 1} and ce["lambda_after"] == {"c": 1}
    inj = F.counterexample_noninjective(injective=True)
    assert inj["singular_before"] and inj["singular_after"]
    scaled = F.counterexample_noninjective(scale=Fraction(7, 3))
    assert scaled["singular_before"] and not scaled["singular_after"]


def test_radon_nikodym():
    h = F.radon_nikodym_finite({"a": Fraction(1, 2), "b": 0}, {"a": Fraction(1, 4), "b": 0})
    assert h == {"a": 2, "b": 0}
    with pytest.raises(AbsoluteContinuityError):
        F.radon_nikodym_finite({"a": 1, "b": 1}, {"a": 1, "b": 0})


def test_errors():
    phi = F.FiniteMap({"a": "c"})
    with pytest.raises(MapError):
        phi("b")
    with pytest.raises(MapError):
        F.pushforward_finite({"a": 1}, phi, ["d"])
    with pytest.raises(DomainError):
        F.lebesgue_decompose({"a": 1}, {"a": -1})
    with pytest.raises(DomainError):
        F.FiniteMeasureSpace(("a", "a"), {})
    mu1 = F.FiniteMeasureSpace(("a", "b"), {"a": 1, "b": 1})
    mu2 = F.FiniteMeasureSpace(("c",), {"c": 2})
    collapse = F.FiniteMap({"a": "c", "b": "c"})
    with pytest.raises(PreconditionError):
        F.check_stability(mu1, mu2, {"a": 1, "b": 0}, collapse)
    with pytest.raises(PreconditionError):
        F.check_density_pushforward(mu1, mu2, {"a": 1, "b": 0}, collapse)
    wrong = F.FiniteMeasureSpace(("c", "d"), {"c": 1, "d": 2})
    with pytest.raises(PreconditionError):
        F.check_stability(mu1, wrong, {"a": 1, "b": 0}, F.FiniteMap({"a": "c", "b": "d"}))


@settings(max_examples=300, deadline=None)
@given(st.dictionaries(st.sampled_from("abcde"), rationals, min_size=1),
       st.dictionaries(st.sampled_from("abcde"), nonneg, min_size=1))
def test_support_tests_match_bruteforce(lam, mu):
    pts = sorted(set(lam) | set(mu))
    assert F.is_absolutely_continuous(lam, mu) == F.is_absolutely_continuous_bruteforce(lam, mu, pts)
    assert F.is_singular(lam, mu) == F.is_singular_bruteforce(lam, mu, pts)


@settings(max_examples=300, deadline=None)
@given(instances())
def test_morphisms_preserve_absolute_continuity(inst):
    mu1, mu2, phi, lam = inst
    assert F.is_morphism(mu1, mu2, phi)
    lam_a, lam_s = F.lebesgue_decompose(lam, mu1.weights)
    assert all(lam_a[p] + lam_s[p] == lam[p] for p in mu1.points)
    pushed = F.pushforward_finite(lam_a, phi, mu2.points)
    assert F.is_absolutely_continuous_bruteforce(pushed, mu2.weights, mu2.points)


@settings(max_examples=300, deadline=None)
@given(instances("injective"))
def test_injective_morphisms_preserve_singularity_and_decomposition(inst):
    mu1, mu2, phi, lam = inst
    _, lam_s = F.lebesgue_decompose(lam, mu1.weights)
    assert F.is_singular_bruteforce(F.pushforward_finite(lam_s, phi, mu2.points), mu2.weights, mu2.points)
    report = F.check_stability(mu1, mu2, lam, phi)
    assert report.passed, report.witnesses


@settings(max_examples=300, deadline=None)
@given(instances("bijective"))
def test_bijective_morphisms(inst):
    mu1, mu2, phi, lam = inst
    assert F.is_morphism(mu2, mu1, phi.inverse(mu1.points))
    lam_a, _ = F.lebesgue_decompose(lam, mu1.weights)
    report = F.check_density_pushforward(mu1, mu2, lam_a, phi)
    assert report.passed, report.witnesses
    assert report.to_dict()["passed"] is True


def test_exact_arithmetic_is_preserved():
    mu1 = F.FiniteMeasureSpace(("a", "b"), {"a": Fraction(1, 3), "b": Fraction(2, 3)})
    pushed = F.pushforward_finite(mu1, F.FiniteMap({"a": "c", "b": "c"}), ["c"])
    assert pushed == {"c": Fraction(1)} and isinstance(pushed["c"], Fraction)
