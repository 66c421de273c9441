"""Exact checks of pushforward, Lebesgue decomposition and density transport
on finite measure spaces.

Measures are mappings ``label -> weight`` over a finite, ordered label set
with the full power set as sigma-algebra.  Weights may be floats or
:class:`fractions.Fraction`; every comparison below is exact, so rationals
give exact verdicts.  Signed weights stand in for complex measures (the
statements hold component-wise).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

from .errors import AbsoluteContinuityError, DomainError, MapError, PreconditionError

Label = Hashable
Weights = Mapping[Label, float]


@dataclass(frozen=True)
class FiniteMeasureSpace:
    points: tuple
    weights: dict = field(hash=False)

    def __post_init__(self):
        pts = tuple(self.points)
        if len(set(pts)) != len(pts):
            raise DomainError("points must be distinct")
        extra = set(self.weights) - set(pts)
        if extra:
            raise DomainError(f"weights given for unknown points {sorted(map(repr, extra))}")
        w = {p: self.weights.get(p, 0) for p in pts}
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def is_positive(self):
        return all(v >= 0 for v in self.weights.values())

    def measure(self, subset: Iterable[Label]):
        return sum((self.weights[p] for p in subset), 0)


@dataclass(frozen=True)
class FiniteMap:
    mapping: dict = field(hash=False)

    def __call__(self, p):
        try:
            return self.mapping[p]
        except KeyError:
            raise MapError(f"point {p!r} has no image") from None

    def is_total_on(self, points):
        return all(p in self.mapping for p in points)

    def is_injective_on(self, points):
        images = [self(p) for p in points]
        return len(set(images)) == len(images)

    def is_bijective_onto(self, source, target):
        return self.is_injective_on(source) and {self(p) for p in source} == set(target)

    def inverse(self, source):
        if not self.is_injective_on(source):
            raise PreconditionError("map is not injective")
        return FiniteMap({self(p): p for p in source})


def _weights(m):
    return m.weights if isinstance(m, FiniteMeasureSpace) else dict(m)


def pushforward_finite(weights: Weights, phi: FiniteMap, target_points) -> dict:
    """Target weight of ``q`` is the total source weight of the preimage of ``q``."""
    w = _weights(weights)
    out = {q: 0 for q in target_points}
    for p, v in w.items():
        q = phi(p)
        if q not in out:
            raise MapError(f"image {q!r} of {p!r} is not a target point")
        out[q] = out[q] + v
    return out


def is_morphism(mu1: FiniteMeasureSpace, mu2: FiniteMeasureSpace, phi: FiniteMap) -> bool:
    """True iff ``phi`` pushes ``mu1`` exactly onto ``mu2``."""
    try:
        pushed = pushforward_finite(mu1, phi, mu2.points)
    except MapError:
        return False
    return all(pushed[q] == mu2.weights[q] for q in mu2.points)


def _require_nonnegative(mu):
    if any(v < 0 for v in mu.values()):
        raise DomainError("reference measure must be nonnegative")


def is_absolutely_continuous(lam: Weights, mu: Weights) -> bool:
    """Support test: ``lam`` vanishes wherever ``mu`` does."""
    lam, mu = _weights(lam), _weights(mu)
    return all(mu.get(p, 0) > 0 for p, v in lam.items() if v != 0)


def is_singular(lam: Weights, mu: Weights) -> bool:
    """Support test: ``lam`` and ``mu`` charge disjoint sets of atoms."""
    lam, mu = _weights(lam), _weights(mu)
    return all(mu.get(p, 0) == 0 for p, v in lam.items() if v != 0)


def _subsets(points):
    points = list(points)
    return itertools.chain.from_iterable(itertools.combinations(points, r) for r in range(len(points) + 1))


def is_absolutely_continuous_bruteforce(lam: Weights, mu: Weights, points) -> bool:
    """Definition check over all subsets: ``mu(E) = 0`` implies ``lam(F) = 0`` for all ``F`` in ``E``."""
    lam, mu = _weights(lam), _weights(mu)
    for e in _subsets(points):
        if sum((mu.get(p, 0) for p in e), 0) == 0:
            if any(sum((lam.get(p, 0) for p in sub), 0) != 0 for sub in _subsets(e)):
                return False
    return True


def is_singular_bruteforce(lam: Weights, mu: Weights, points) -> bool:
    """Definition check: some ``A`` has ``mu(A) = 0`` and ``lam`` null on every subset of its complement."""
    lam, mu = _weights(lam), _weights(mu)
    points = list(points)
    for a in _subsets(points):
        if sum((mu.get(p, 0) for p in a), 0) != 0:
            continue
        rest = [p for p in points if p not in a]
        if all(sum((lam.get(p, 0) for p in sub), 0) == 0 for sub in _subsets(rest)):
            return True
    return False


def lebesgue_decompose(lam: Weights, mu: Weights):
    """Split ``lam`` into ``(lam_a, lam_s)`` with ``lam_a << mu`` and ``lam_s`` singular to ``mu``."""
    lam, mu = _weights(lam), _weights(mu)
    _require_nonnegative(mu)
    points = list(dict.fromkeys([*lam, *mu]))
    lam_a = {p: (lam.get(p, 0) if mu.get(p, 0) > 0 else 0) for p in points}
    lam_s = {p: (lam.get(p, 0) if mu.get(p, 0) == 0 else 0) for p in points}
    return lam_a, lam_s


def radon_nikodym_finite(lam_a: Weights, mu: Weights) -> dict:
    """Density ``h = lam_a / mu`` on the support of ``mu``, zero elsewhere.

    Raises
    ------
    AbsoluteContinuityError
        If ``lam_a`` charges an atom where ``mu`` vanishes.
    """
    lam_a, mu = _weights(lam_a), _weights(mu)
    _require_nonnegative(mu)
    for p, v in lam_a.items():
        if v != 0 and mu.get(p, 0) == 0:
            raise AbsoluteContinuityError(f"measure charges {p!r} where the reference vanishes")
    points = list(dict.fromkeys([*lam_a, *mu]))
    return {p: (lam_a.get(p, 0) / mu[p] if mu.get(p, 0) > 0 else 0) for p in points}


@dataclass(frozen=True)
class CheckReport:
    passed: bool
    witnesses: list = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"passed": self.passed, "witnesses": [repr(w) for w in self.witnesses],
                "detail": {k: _jsonable(v) for k, v in self.detail.items()}}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, int, float, str)) or v is None:
        return v
    return float(v) if hasattr(v, "__float__") else repr(v)


def _first_mismatch(a, b, points):
    for p in points:
        if a.get(p, 0) != b.get(p, 0):
            return p
    return None


def check_stability(mu1: FiniteMeasureSpace, mu2: FiniteMeasureSpace, lam1: Weights,
                    phi: FiniteMap) -> CheckReport:
    """Pushforward commutes with the Lebesgue decomposition for injective morphisms."""
    if not phi.is_total_on(mu1.points) or not phi.is_injective_on(mu1.points):
        raise PreconditionError("map must be total and injective")
    if not is_morphism(mu1, mu2, phi):
        raise PreconditionError("map is not a morphism of measure spaces")
    lam1 = _weights(lam1)
    a1, s1 = lebesgue_decompose(lam1, mu1.weights)
    lam2 = pushforward_finite(lam1, phi, mu2.points)
    a2, s2 = lebesgue_decompose(lam2, mu2.weights)
    pa = pushforward_finite({p: a1.get(p, 0) for p in mu1.points}, phi, mu2.points)
    ps = pushforward_finite({p: s1.get(p, 0) for p in mu1.points}, phi, mu2.points)
    witnesses = []
    for label, lhs, rhs in (("absolutely continuous part", pa, a2), ("singular part", ps, s2)):
        bad = _first_mismatch(lhs, rhs, mu2.points)
        if bad is not None:
            witnesses.append((label, bad, lhs.get(bad, 0), rhs.get(bad, 0)))
    return CheckReport(not witnesses, witnesses,
                       {"singular_mass_transported": sum(ps.values(), 0)})


def counterexample_noninjective(scale=1, injective: bool = False) -> dict:
    """Two atoms collapsed to one: a singular pair stops being singular.

    ``mu1 = {a: 0, b: 1}`` and ``lam1 = {a: 1, b: 0}`` are mutually singular;
    collapsing ``a`` and ``b`` onto ``c`` makes both pushforwards ``{c: 1}``.
    With ``injective=True`` the atoms go to distinct ``c`` and ``d`` instead
    and singularity survives.
    """
    mu1 = {"a": 0 * scale, "b": 1 * scale}
    lam1 = {"a": 1 * scale, "b": 0 * scale}
    if injective:
        phi = FiniteMap({"a": "c", "b": "d"})
        target = ("c", "d")
    else:
        phi = FiniteMap({"a": "c", "b": "c"})
        target = ("c",)
    mu2 = pushforward_finite(mu1, phi, target)
    lam2 = pushforward_finite(lam1, phi, target)
    return {
        "mu_before": mu1,
        "lambda_before": lam1,
        "map": dict(phi.mapping),
        "mu_after": mu2,
        "lambda_after": lam2,
        "singular_before": is_singular(lam1, mu1),
        "singular_after": is_singular(lam2, mu2),
    }


def check_density_pushforward(mu1: FiniteMeasureSpace, mu2: FiniteMeasureSpace, lam1: Weights,
                              phi: FiniteMap) -> CheckReport:
    """For a bijective morphism, the density of ``phi_* lam`` is ``h1 o phi^{-1}``.

    Also checks the finite L1 isometry ``sum |h1| mu1 = sum |h2| mu2``.
    """
    if not phi.is_total_on(mu1.points) or not phi.is_bijective_onto(mu1.points, mu2.points):
        raise PreconditionError("map must be a bijection between the point sets")
    if not is_morphism(mu1, mu2, phi):
        raise PreconditionError("map is not a morphism of measure spaces")
    lam1 = _weights(lam1)
    h1 = radon_nikodym_finite(lam1, mu1.weights)
    lam2 = pushforward_finite(lam1, phi, mu2.points)
    h2 = radon_nikodym_finite(lam2, mu2.weights)
    inv = phi.inverse(mu1.points)
    witnesses = [q for q in mu2.points
                 if mu2.weights[q] > 0 and h2.get(q, 0) != h1.get(inv(q), 0)]
    l1_before = sum((abs(h1.get(p, 0)) * mu1.weights[p] for p in mu1.points), 0)
    l1_after = sum((abs(h2.get(q, 0)) * mu2.weights[q] for q in mu2.points), 0)
    if l1_before != l1_after:
        witnesses.append(("l1_norm", l1_before, l1_after))
    return CheckReport(not witnesses, witnesses, {"l1_norm": l1_before})
