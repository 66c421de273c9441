"""Source measures on the positive orthant and the special functions they use.

Densities are evaluated in log space (log-gamma, Cholesky log-determinant)
and exponentiated only when returned.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Union

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln, xlogy

from .errors import DomainError
from .geometry import check_orthant, check_upper
from .quadrature import QuadratureSpec, integrate_halfline

SYMMETRY_TOL = 1e-12
SCHEMA_VERSION = 1
_LOG_2PI = math.log(2 * math.pi)


def _positive_vector(name, values):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise DomainError(f"{name} must be a vector of length n + 1 >= 2")
    if not np.all(np.isfinite(arr)) or not np.all(arr > 0):
        raise DomainError(f"{name} entries must be finite and > 0")
    arr.setflags(write=False)
    return arr


class CovMatrix:
    """Symmetric positive definite covariance with a cached Cholesky factor."""

    def __init__(self, sigma):
        sigma = np.array(sigma, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise DomainError("covariance must be a square matrix")
        if not np.all(np.isfinite(sigma)):
            raise DomainError("covariance entries must be finite")
        if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_TOL:
            raise DomainError("covariance is not symmetric")
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise DomainError("covariance is not positive definite") from exc
        for arr in (sigma, chol):
            arr.setflags(write=False)
        self.sigma = sigma
        self.chol = chol
        self.logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
        inv = solve_triangular(chol, np.eye(len(sigma)), lower=True)
        inv = inv.T @ inv
        inv.setflags(write=False)
        self.inverse = inv

    @property
    def size(self):
        return self.sigma.shape[0]

    def whiten(self, v):
        """``L^{-1} v`` along the last axis, so that ``|L^{-1} v|^2 = v^T S^{-1} v``."""
        v = np.asarray(v, dtype=float)
        flat = v.reshape(-1, self.size).T
        return solve_triangular(self.chol, flat, lower=True, check_finite=False).T.reshape(v.shape)

    def __repr__(self):
        return f"CovMatrix({self.sigma.tolist()!r})"


@dataclass(frozen=True, eq=False)
class LogNormal:
    mu: np.ndarray
    sigma: CovMatrix

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or mu.size < 2 or not np.all(np.isfinite(mu)):
            raise DomainError("mu must be a finite vector of length n + 1 >= 2")
        sigma = self.sigma if isinstance(self.sigma, CovMatrix) else CovMatrix(self.sigma)
        if sigma.size != mu.size:
            raise DomainError("mu and sigma dimensions differ")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self):
        return self.mu.size - 1


@dataclass(frozen=True, eq=False)
class MultiGamma:
    """Independent Gamma(shape ``alpha_i``, rate ``beta_i``) coordinates."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = _positive_vector("alpha", self.alpha)
        beta = _positive_vector("beta", self.beta)
        if alpha.size != beta.size:
            raise DomainError("alpha and beta lengths differ")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n(self):
        return self.alpha.size - 1


@dataclass(frozen=True, eq=False)
class MultiChi:
    """Independent Chi(``k_i``) coordinates."""

    k: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "k", _positive_vector("k", self.k))

    @property
    def n(self):
        return self.k.size - 1


@dataclass(frozen=True)
class RadialReciprocal:
    """Density ``kappa_s / (1 + (sum y)^{s (n+1)})`` on the orthant of ``R^{n+1}``."""

    s: float
    n: int

    def __post_init__(self):
        s = float(self.s)
        if not (math.isfinite(s) and s > 1):
            raise DomainError("s must be > 1")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True, eq=False)
class DiracAt:
    point: np.ndarray

    def __post_init__(self):
        p = np.array(check_upper(self.point), dtype=float)
        if p.ndim != 1:
            raise DomainError("Dirac point must be a single vector")
        p.setflags(write=False)
        object.__setattr__(self, "point", p)

    @property
    def n(self):
        return self.point.size - 1


DensityFamily = Union[LogNormal, MultiGamma, MultiChi, RadialReciprocal, DiracAt]
PROBABILITY_FAMILIES = (LogNormal, MultiGamma, MultiChi, RadialReciprocal)


# -- special functions -------------------------------------------------------

def multivariate_beta(alpha):
    """``log B(alpha) = sum(lgamma(alpha_i)) - lgamma(sum(alpha))``."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size < 1 or not np.all(alpha > 0):
        raise DomainError("Beta function arguments must be > 0")
    return float(np.sum(gammaln(alpha)) - gammaln(np.sum(alpha)))


def reciprocal_integral_analytic(s):
    """Closed form of the integral of ``1 / (1 + z^s)`` over ``(0, inf)``."""
    return math.pi / (s * math.sin(math.pi / s))


def kappa_s_analytic(s, n):
    return math.factorial(n + 1) * s * math.sin(math.pi / s) / math.pi


KAPPA_SPEC = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=500)


@lru_cache(maxsize=256)
def kappa_s(s, n, q: QuadratureSpec = KAPPA_SPEC):
    """Normalizer ``(n+1)! / int_0^inf dz / (1 + z^s)`` with the integral by quadrature."""
    s = float(s)
    if not s > 1:
        raise DomainError("kappa_s needs s > 1 (the integral diverges otherwise)")
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    res = integrate_halfline(lambda z: 1.0 / (1.0 + z ** s), q)
    return math.factorial(int(n) + 1) / res.value


# -- densities ---------------------------------------------------------------

def _ambient(f, y):
    y = check_orthant(y)
    if y.shape[-1] != f.n + 1:
        raise DomainError(f"point dimension {y.shape[-1]} does not match family dimension {f.n + 1}")
    return y


def log_density_at(f: DensityFamily, y):
    """Natural log of the Lebesgue density of ``f`` at orthant point(s) ``y``."""
    if isinstance(f, DiracAt):
        raise DomainError("a Dirac measure has no Lebesgue density")
    return log_density_unchecked(f, _ambient(f, y))


def log_density_unchecked(f: DensityFamily, y):
    """:func:`log_density_at` without argument validation (hot loops only)."""
    logy = np.log(y)
    if isinstance(f, LogNormal):
        z = f.sigma.whiten(logy - f.mu)
        return (-0.5 * np.sum(z * z, axis=-1) - 0.5 * f.sigma.logdet
                - 0.5 * (f.n + 1) * _LOG_2PI - np.sum(logy, axis=-1))
    if isinstance(f, MultiGamma):
        a, b = f.alpha, f.beta
        return np.sum(a * np.log(b) + (a - 1) * logy - b * y - gammaln(a), axis=-1)
    if isinstance(f, MultiChi):
        k = f.k
        return np.sum((1 - k / 2) * math.log(2) - gammaln(k / 2) + (k - 1) * logy - 0.5 * y * y, axis=-1)
    if isinstance(f, RadialReciprocal):
        r = np.sum(y, axis=-1)
        return math.log(kappa_s(f.s, f.n)) - np.logaddexp(0.0, f.s * (f.n + 1) * np.log(r))
    raise TypeError(f"not a density family: {f!r}")


def density_at(f: DensityFamily, y):
    """Lebesgue density of ``f`` at orthant point(s) ``y``."""
    out = np.exp(log_density_at(f, y))
    return float(out) if np.ndim(out) == 0 else out


def dirichlet_chart_density(alpha, x):
    """Dirichlet density on ``B_n`` (Lebesgue), exponents ``alpha_i - 1``.

    Points on the boundary of ``B_n`` are accepted; there the density is
    the limit of the formula (``0``, finite or ``inf``).
    """
    alpha = _positive_vector("alpha", alpha)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[-1] != alpha.size - 1:
        raise DomainError("chart point dimension must be len(alpha) - 1")
    last = 1.0 - np.sum(x, axis=-1)
    if np.any(x < 0) or np.any(last < -1e-12):
        raise DomainError("chart point(s) outside the closed simplex")
    full = np.concatenate([x, np.maximum(last, 0.0)[..., None]], axis=-1)
    with np.errstate(divide="ignore"):
        logd = np.sum(xlogy(alpha - 1, full), axis=-1) - multivariate_beta(alpha)
    out = np.exp(logd)
    return float(out) if np.ndim(out) == 0 else out


# -- reference measures ------------------------------------------------------

class ReferenceMeasure(enum.Enum):
    LEBESGUE_ORTHANT = "lebesgue"
    MU_U = "mu_U"
    MU_C = "mu_C"


def chart_weight(n):
    """Density of the surface measure on ``P_n`` read through the chart: ``sqrt(n+1)``."""
    return math.sqrt(n + 1)


def reference_density(m: ReferenceMeasure, y):
    """Lebesgue density of an ambient reference measure at ``y``."""
    if m is ReferenceMeasure.MU_C:
        raise DomainError("mu_C lives on the simplex; use chart_weight(n) instead")
    y = check_upper(y)
    if m is ReferenceMeasure.LEBESGUE_ORTHANT:
        out = np.ones(y.shape[:-1])
    else:
        out = np.sum(y, axis=-1) ** (-float(y.shape[-1]))
    return float(out) if np.ndim(out) == 0 else out


# -- JSON description ----------------------------------------------------------

_NAMES = {
    "lognormal": LogNormal,
    "multigamma": MultiGamma,
    "multichi": MultiChi,
    "radialreciprocal": RadialReciprocal,
    "dirac": DiracAt,
}


def family_from_json(obj) -> DensityFamily:
    """Build a family from its canonical JSON description.

    ``obj`` is a mapping, a JSON string, or a path to a JSON file.
    """
    if isinstance(obj, (str, Path)):
        text = str(obj)
        if not text.lstrip().startswith("{") and Path(text).is_file():
            text = Path(text).read_text()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"invalid family JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DomainError("family description must be a JSON object")
    version = obj.get("schema", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise DomainError(f"unsupported schema version {version!r}")
    name = str(obj.get("family", "")).lower()
    try:
        if name == "lognormal":
            return LogNormal(obj["mu"], CovMatrix(obj["sigma"]))
        if name == "multigamma":
            return MultiGamma(obj["alpha"], obj["beta"])
        if name == "multichi":
            return MultiChi(obj["k"])
        if name == "radialreciprocal":
            return RadialReciprocal(obj["s"], obj["n"])
        if name == "dirac":
            return DiracAt(obj["point"])
    except KeyError as exc:
        raise DomainError(f"family {name!r} is missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"invalid parameters for {name!r}: {exc}") from exc
    raise DomainError(f"unknown family {obj.get('family')!r}; expected one of {sorted(_NAMES)}")


def family_name(f: DensityFamily) -> str:
    for name, cls in _NAMES.items():
        if isinstance(f, cls):
            return name
    raise TypeError(f"not a density family: {f!r}")


def family_to_json(f: DensityFamily) -> dict:
    out = {"schema": SCHEMA_VERSION}
    if isinstance(f, LogNormal):
        out.update(family="lognormal", mu=f.mu.tolist(), sigma=f.sigma.sigma.tolist())
    elif isinstance(f, MultiGamma):
        out.update(family="multigamma", alpha=f.alpha.tolist(), beta=f.beta.tolist())
    elif isinstance(f, MultiChi):
        out.update(family="multichi", k=f.k.tolist())
    elif isinstance(f, RadialReciprocal):
        out.update(family="radialreciprocal", s=f.s, n=f.n)
    elif isinstance(f, DiracAt):
        out.update(family="dirac", point=f.point.tolist())
    else:
        raise TypeError(f"not a density family: {f!r}")
    return out
