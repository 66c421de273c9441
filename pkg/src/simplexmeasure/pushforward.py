"""Densities of homogeneous-transform pushforwards on the open simplex.

Every density here is taken with respect to the surface measure ``mu_C`` on
the open probability simplex and read through the chart, i.e. it is a
function of ``x`` in ``B_n``.  Multiplying by ``sqrt(n + 1)`` gives the
Lebesgue density of the pushed-forward law of the first ``n`` barycentric
coordinates.

Two independent routes are provided:

* :func:`fiber_density` integrates the source density along the ray
  ``{u * chart_embed(x) : u > 0}`` with weight ``u^n``;
* :func:`closed_form` evaluates the analytic result for each family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln, xlogy

from . import measures as M
from .errors import DomainError
from .geometry import chart_embed, check_in_Bn, homogeneous_transform
from .quadrature import DEFAULT_SPEC, IntegralResult, QuadratureSpec, integrate_halfline, integrate_line

_LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class Provenance:
    kind: str  # "closed-form" or "numeric-fiber"
    family: str


@dataclass(frozen=True, eq=False)
class TransformedDensity:
    """A pushed-forward law on the open simplex.

    Either ``evaluator`` (a vectorized density w.r.t. ``mu_C`` read through
    the chart) or ``atom`` (barycentric location of a unit point mass) is set.
    """

    n: int
    provenance: Provenance
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None
    atom: Optional[np.ndarray] = None
    mass: float = 1.0

    @property
    def is_atom(self):
        return self.atom is not None

    def __call__(self, x):
        if self.evaluator is None:
            raise DomainError("an atomic transformed measure has no density")
        out = self.evaluator(x)
        return float(out) if np.ndim(out) == 0 else out


def _closed_chart(x, n):
    """Validate chart points against the closed simplex and embed them."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[-1] != n:
        raise DomainError(f"chart points must have {n} coordinates, got {x.shape[-1]}")
    xt = chart_embed(x)
    if np.any(xt < -1e-12):
        raise DomainError("chart point(s) outside the closed simplex")
    return np.maximum(xt, 0.0)


def _squeeze(out):
    return float(out) if np.ndim(out) == 0 else out


# -- log-normal auxiliaries ----------------------------------------------------

def _lognormal_log_aux(mu, sigma: M.CovMatrix, b):
    ones = np.ones(sigma.size)
    prec = sigma.inverse
    v = 1.0 / float(ones @ prec @ ones)
    lb = np.log(b) - mu
    x_ = lb @ (prec @ ones)
    y_ = np.einsum("...i,ij,...j->...", lb, prec, lb)
    log_q = 0.5 * sigma.logdet + 0.5 * sigma.size * _LOG_2PI + np.sum(np.log(b), axis=-1)
    return v, log_q, x_, y_


def lognormal_aux(mu, sigma, b):
    """The four scalars of the log-normal closed form at barycentric ``b``.

    Returns
    -------
    V : float
        ``(1^T S^{-1} 1)^{-1}``, always positive.
    Q : float or ndarray
        ``sqrt(det S) (2 pi)^{(n+1)/2} prod(b)``.
    X, Y : float or ndarray
        ``1^T S^{-1} l`` and ``l^T S^{-1} l`` with ``l = ln(b) - mu``.
    """
    sigma = sigma if isinstance(sigma, M.CovMatrix) else M.CovMatrix(sigma)
    mu = np.asarray(mu, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.shape[-1] != sigma.size or mu.shape != (sigma.size,):
        raise DomainError("dimension mismatch between mu, sigma and b")
    if np.any(b <= 0):
        raise DomainError("lognormal_aux needs a strictly interior simplex point")
    v, log_q, x_, y_ = _lognormal_log_aux(mu, sigma, b)
    return v, _squeeze(np.exp(log_q)), _squeeze(x_), _squeeze(y_)


def lognormal_aux_diagonal(mu, variances, b):
    """Same four scalars for a diagonal covariance, from per-coordinate sums.

    With ``S = diag(sigma_i^2)``: ``V = 1 / sum(1 / sigma_i^2)``,
    ``Q = (2 pi)^{(n+1)/2} prod(b_i sigma_i)``,
    ``X = sum(l_i / sigma_i^2)``, ``Y = sum(l_i^2 / sigma_i^2)``.
    """
    var = np.asarray(variances, dtype=float)
    mu = np.asarray(mu, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(var <= 0):
        raise DomainError("variances must be > 0")
    if np.any(b <= 0):
        raise DomainError("lognormal_aux_diagonal needs a strictly interior simplex point")
    lb = np.log(b) - mu
    v = 1.0 / float(np.sum(1.0 / var))
    q = (2 * math.pi) ** (var.size / 2) * np.prod(b * np.sqrt(var), axis=-1)
    x_ = np.sum(lb / var, axis=-1)
    y_ = np.sum(lb * lb / var, axis=-1)
    return v, _squeeze(q), _squeeze(x_), _squeeze(y_)


def lognormal_density_from_aux(v, q, x_, y_, n):
    """``sqrt(2 pi V) / (Q sqrt(n+1)) * exp(-(Y - V X^2) / 2)``."""
    return np.sqrt(2 * math.pi * v) / (q * math.sqrt(n + 1)) * np.exp(-0.5 * (y_ - v * x_ * x_))


# -- closed forms --------------------------------------------------------------

def _lognormal_evaluator(f: M.LogNormal):
    n = f.n

    def g(x):
        xt = _closed_chart(x, n)
        interior = np.all(xt > 0, axis=-1)
        safe = np.where(interior[..., None], xt, 1.0 / (n + 1))
        v, log_q, x_, y_ = _lognormal_log_aux(f.mu, f.sigma, safe)
        logg = 0.5 * math.log(2 * math.pi * v) - log_q - 0.5 * math.log(n + 1) - 0.5 * (y_ - v * x_ * x_)
        return _squeeze(np.where(interior, np.exp(logg), 0.0))

    return g


def _gamma_evaluator(f: M.MultiGamma):
    n, a, b = f.n, f.alpha, f.beta
    const = -0.5 * math.log(n + 1) - M.multivariate_beta(a) + float(np.sum(a * np.log(b)))
    total = float(np.sum(a))

    def g(x):
        xt = _closed_chart(x, n)
        with np.errstate(divide="ignore"):
            logg = const + np.sum(xlogy(a - 1, xt), axis=-1) - total * np.log(xt @ b)
        return _squeeze(np.exp(logg))

    return g


def _chi_evaluator(f: M.MultiChi):
    n, k = f.n, f.k
    total = float(np.sum(k))
    const = (-0.5 * math.log(n + 1) + gammaln(total / 2) - float(np.sum(gammaln(k / 2)))
             + n * math.log(2))

    def g(x):
        xt = _closed_chart(x, n)
        with np.errstate(divide="ignore"):
            logg = const + np.sum(xlogy(k - 1, xt), axis=-1) - 0.5 * total * np.log(np.sum(xt * xt, axis=-1))
        return _squeeze(np.exp(logg))

    return g


def chi_alternative_form(k, x):
    """An alternative closed form for the Chi pushforward that does not hold.

    It uses ``Gamma(K / 2^{n+1})``, a power of two with exponent
    ``(n+1) - K n / (2 (n+1))`` and divides by ``prod(x~)^{K/(n+1)}``.  Kept
    only so the verification suite can show that it disagrees with fiber
    quadrature; do not use it for computation.
    """
    k = np.asarray(k, dtype=float)
    n = k.size - 1
    total = float(np.sum(k))
    xt = chart_embed(check_in_Bn(x))
    logg = (-0.5 * math.log(n + 1) + gammaln(total / 2 ** (n + 1)) - np.sum(gammaln(k / 2))
            + ((n + 1) - total * n / (2 * (n + 1))) * math.log(2)
            + np.sum((k - 1) * np.log(xt), axis=-1)
            - total / (n + 1) * np.sum(np.log(xt), axis=-1))
    return _squeeze(np.exp(logg))


def uniform_simplex_constant(n):
    """``n! / sqrt(n+1)``: the uniform probability on the open simplex w.r.t. ``mu_C``."""
    return math.factorial(n) / math.sqrt(n + 1)


def closed_form(f: M.DensityFamily) -> TransformedDensity:
    """Analytic pushforward of ``f`` through the homogeneous transform."""
    name = M.family_name(f)
    prov = Provenance("closed-form", name)
    if isinstance(f, M.DiracAt):
        atom = homogeneous_transform(f.point)
        atom.setflags(write=False)
        return TransformedDensity(f.n, prov, atom=atom)
    if isinstance(f, M.RadialReciprocal):
        c = uniform_simplex_constant(f.n)
        n = f.n

        def g(x):
            xt = _closed_chart(x, n)
            return _squeeze(np.full(xt.shape[:-1], c))

        return TransformedDensity(f.n, prov, g)
    if isinstance(f, M.MultiGamma):
        return TransformedDensity(f.n, prov, _gamma_evaluator(f))
    if isinstance(f, M.LogNormal):
        return TransformedDensity(f.n, prov, _lognormal_evaluator(f))
    if isinstance(f, M.MultiChi):
        return TransformedDensity(f.n, prov, _chi_evaluator(f))
    raise TypeError(f"not a density family: {f!r}")


# -- fiber integration -----------------------------------------------------------

def _log_fiber_integrand_t(f, xt, n):
    """``t -> (n+1) t + log f(e^t x~)``, vectorized in ``t``."""

    def h(t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) <= 600.0
        tc = np.where(inside, t, 0.0)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            vals = (n + 1) * tc + M.log_density_unchecked(f, np.exp(tc)[:, None] * xt[None, :])
        # Beyond |t| = 600 every supported source density has negligible mass.
        return np.where(inside & ~np.isnan(vals), vals, -np.inf)

    return h


def _mode(h):
    """Crude maximizer of ``h`` on the fiber: coarse grid, then a local refinement."""
    grid = np.linspace(-60.0, 60.0, 481)
    vals = h(grid)
    i = int(np.argmax(vals))
    if not np.isfinite(vals[i]):
        raise DomainError("source density vanishes along the whole fiber")
    step = grid[1] - grid[0]
    fine = np.linspace(grid[i] - step, grid[i] + step, 201)
    fvals = h(fine)
    j = int(np.argmax(fvals))
    return float(fine[j]), float(fvals[j])


def fiber_integral(f: M.DensityFamily, x, q: QuadratureSpec = DEFAULT_SPEC) -> IntegralResult:
    """Fiber integral with its error estimate; see :func:`fiber_density`."""
    if isinstance(f, M.DiracAt):
        raise DomainError("a Dirac source has no density to integrate")
    x = check_in_Bn(x)
    if x.ndim != 1 or x.size != f.n:
        raise DomainError(f"expected a single chart point with {f.n} coordinates")
    n = f.n
    xt = chart_embed(x)
    h = _log_fiber_integrand_t(f, xt, n)
    t_star, h_star = _mode(h)
    # Scale by the peak so that absolute tolerances act relative to it.
    if q.substitution == "log":
        scale = h_star
        res = integrate_line(lambda t: np.exp(h(t) - scale), q, center=t_star)
    else:
        u_star = math.exp(t_star)
        scale = h_star - t_star

        def integrand(u):
            with np.errstate(divide="ignore"):
                return np.exp(h(np.log(u)) - np.log(u) - scale)

        res = integrate_halfline(integrand, q, split=u_star)
    factor = math.exp(scale) / math.sqrt(n + 1)
    return IntegralResult(res.value * factor, res.error_estimate * factor, res.evaluations + 682)


def fiber_density(f: M.DensityFamily, x, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Density of the pushforward of ``f`` at chart point ``x``, by quadrature.

    Evaluates ``(1 / sqrt(n+1)) * int_0^inf u^n f(u * chart_embed(x)) du``,
    the same quantity as ``(1 / sqrt(n+1)) * int_R e^{(n+1) t} f(e^t x~) dt``.

    Raises
    ------
    DomainError
        If ``x`` is not in the open simplex ``B_n`` or ``f`` is a Dirac measure.
    QuadratureError
        If the adaptive rule cannot meet ``q``.
    """
    return fiber_integral(f, x, q).value


def numeric_fiber(f: M.DensityFamily, q: QuadratureSpec = DEFAULT_SPEC) -> TransformedDensity:
    """Transformed density evaluated pointwise by :func:`fiber_density`."""
    if isinstance(f, M.DiracAt):
        return closed_form(f)

    def g(x):
        x = np.asarray(x, dtype=float)
        pts = x.reshape(-1, f.n)
        out = np.array([fiber_density(f, p, q) for p in pts]).reshape(x.shape[:-1])
        return _squeeze(out)

    return TransformedDensity(f.n, Provenance("numeric-fiber", M.family_name(f)), g)


def lebesgue_chart_density(td: TransformedDensity, x):
    """Lebesgue density on ``B_n``: ``sqrt(n+1)`` times the ``mu_C`` density."""
    if td.is_atom:
        raise DomainError("an atomic transformed measure has no Lebesgue density")
    return _squeeze(M.chart_weight(td.n) * np.asarray(td(x)))
