"""Sampling from source families and Monte Carlo checks of transformed densities.

The project-wide generator is numpy's PCG64.  A :class:`SeededGenerator`
with seed ``s`` always yields the stream of ``Generator(PCG64(s))``;
independent sub-streams for parallel work are ``SeedSequence(s).spawn(k)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np
from scipy import stats

from . import measures as M
from .errors import DomainError
from .geometry import chart_coords, homogeneous_transform
from .pushforward import TransformedDensity, lebesgue_chart_density

ALGORITHM = "PCG64"
EXPECTED_COUNT_FLOOR = 25.0
#: Target diameter of the cells used to integrate the density over a bin.
CELL_DIAMETER = 0.02

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True)
class SeededGenerator:
    seed: int
    algorithm: str = ALGORITHM

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.algorithm != ALGORITHM:
            raise DomainError(f"only {ALGORITHM} is supported")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(int(self.seed)))

    def spawn(self, count) -> list[np.random.Generator]:
        """Independent sub-streams, derived by ``SeedSequence(seed).spawn(count)``."""
        return [np.random.Generator(np.random.PCG64(ss))
                for ss in np.random.SeedSequence(int(self.seed)).spawn(count)]


GeneratorLike = Union[SeededGenerator, np.random.Generator, int]


def _rng(g: GeneratorLike) -> np.random.Generator:
    if isinstance(g, np.random.Generator):
        return g
    if isinstance(g, SeededGenerator):
        return g.generator()
    return SeededGenerator(int(g)).generator()


def radial_reciprocal_radius(rng, s, n, count):
    """Radii with density proportional to ``r^n / (1 + r^{s (n+1)})``.

    ``v = r^{n+1}`` has density proportional to ``1 / (1 + v^s)``, and
    ``v^s / (1 + v^s)`` is Beta(1/s, 1 - 1/s); the odds of that Beta variable
    are a ratio of independent Gamma(1/s) and Gamma(1 - 1/s) draws.
    """
    g1 = rng.standard_gamma(1.0 / s, count)
    g2 = rng.standard_gamma(1.0 - 1.0 / s, count)
    with np.errstate(divide="ignore"):
        log_r = (np.log(g1) - np.log(g2)) / (s * (n + 1))
    return np.exp(log_r)


def sample(f: M.DensityFamily, g: GeneratorLike, count: int) -> np.ndarray:
    """Draw ``count`` points of the orthant from ``f``; returns shape ``(count, n + 1)``."""
    if int(count) != count or count < 1:
        raise DomainError("count must be a positive integer")
    count = int(count)
    if isinstance(f, M.DiracAt):
        return np.tile(f.point, (count, 1))
    rng = _rng(g)
    m = f.n + 1
    if isinstance(f, M.LogNormal):
        z = rng.standard_normal((count, m))
        return np.exp(f.mu + z @ f.sigma.chol.T)
    if isinstance(f, M.MultiGamma):
        return rng.standard_gamma(f.alpha, (count, m)) / f.beta
    if isinstance(f, M.MultiChi):
        return np.sqrt(2.0 * rng.standard_gamma(f.k / 2.0, (count, m)))
    if isinstance(f, M.RadialReciprocal):
        e = rng.standard_exponential((count, m))
        direction = e / e.sum(axis=1, keepdims=True)
        return radial_reciprocal_radius(rng, f.s, f.n, count)[:, None] * direction
    raise TypeError(f"not a density family: {f!r}")


# -- bins on B_n -------------------------------------------------------------------

@dataclass(frozen=True)
class BinSpec:
    """Equal-volume partition of ``B_1`` (intervals) or ``B_2`` (triangles).

    For ``n = 2`` the side of ``B_2`` is cut into ``per_side`` pieces,
    giving ``per_side**2`` triangles.
    """

    n: int
    bins: int
    per_side: int
    scheme: str

    @classmethod
    def for_target(cls, n, bins):
        if bins < 1:
            raise DomainError("bins must be >= 1")
        if n == 1:
            return cls(1, int(bins), int(bins), "interval")
        if n == 2:
            m = max(1, int(round(math.sqrt(bins))))
            return cls(2, m * m, m, "triangular")
        raise DomainError("histogram verification supports n in {1, 2}")

    def index(self, x):
        m = self.per_side
        if self.n == 1:
            return np.clip(np.floor(x[:, 0] * m).astype(np.int64), 0, m - 1)
        s = x * m
        ij = np.floor(s).astype(np.int64)
        i = np.clip(ij[:, 0], 0, m - 1)
        j = np.clip(ij[:, 1], 0, m - 1)
        frac = s - np.stack([i, j], axis=1)
        up = np.sum(frac, axis=1) < 1.0
        # Upward (i, j) with i + j <= m - 1, then downward with i + j <= m - 2.
        j = np.where(i + j > m - 1, m - 1 - i, j)
        down_ok = (~up) & (i + j <= m - 2)
        up_index = _up_index(i, j, m)
        down_index = m * (m + 1) // 2 + _up_index(i, j, m - 1)
        return np.where(down_ok, down_index, up_index)

    def cells(self):
        """Vertices of each bin, in :meth:`index` order."""
        m = self.per_side
        if self.n == 1:
            edges = np.linspace(0.0, 1.0, m + 1)
            return np.stack([edges[:-1], edges[1:]], axis=1)[:, :, None]
        tris = []
        for i in range(m):
            for j in range(m - i):
                tris.append([(i, j), (i + 1, j), (i, j + 1)])
        for i in range(m - 1):
            for j in range(m - 1 - i):
                tris.append([(i + 1, j + 1), (i, j + 1), (i + 1, j)])
        return np.array(tris, dtype=float) / m

    def to_dict(self):
        return asdict(self)


def _up_index(i, j, m):
    # Row-major enumeration of {(i, j): i + j <= m - 1}.
    return i * m - (i * (i - 1)) // 2 + j


def _interval_rule(cells):
    a, b = cells[:, 0, 0], cells[:, 1, 0]
    k = max(1, int(math.ceil(np.max(b - a) / CELL_DIAMETER)))
    sub = np.linspace(0.0, 1.0, k + 1)
    lo = a[:, None] + (b - a)[:, None] * sub[None, :-1]
    width = ((b - a) / k)[:, None, None]
    pts = lo[:, :, None] + width * _GL_NODES[None, None, :]
    w = np.broadcast_to(width * _GL_WEIGHTS[None, None, :], pts.shape)
    return pts.reshape(len(cells), -1, 1), w.reshape(len(cells), -1)


def _cross2(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _triangle_rule(cells):
    """Collapsed Gauss-Legendre product rule on a regular refinement of each triangle."""
    diam = np.max(np.linalg.norm(cells[:, 1] - cells[:, 2], axis=-1))
    diam = max(diam, np.max(np.linalg.norm(cells[:, 0] - cells[:, 1], axis=-1)))
    k = max(1, int(math.ceil(diam / CELL_DIAMETER)))
    sub = BinSpec(2, k * k, k, "triangular").cells()  # reference refinement of B_2
    xi, eta = np.meshgrid(_GL_NODES, _GL_NODES, indexing="ij")
    wxi, weta = np.meshgrid(_GL_WEIGHTS, _GL_WEIGHTS, indexing="ij")
    xi, eta = xi.ravel(), eta.ravel()
    wref = (wxi * weta).ravel() * xi  # Duffy Jacobian, reference triangle area 1/2 times 2
    a0, b0, c0 = sub[:, 0], sub[:, 1], sub[:, 2]
    ref = (a0[:, None, :] + xi[None, :, None] * ((1 - eta)[None, :, None] * (b0 - a0)[:, None, :]
                                                + eta[None, :, None] * (c0 - a0)[:, None, :]))
    ref_area = 0.5 * np.abs(_cross2(b0 - a0, c0 - a0))
    ref = ref.reshape(-1, 2)
    ref_w = (2 * ref_area[:, None] * wref[None, :]).ravel()  # weights on B_2, sum 1/2
    # Map the refined B_2 onto each bin by its affine map.
    A, B, C = cells[:, 0], cells[:, 1], cells[:, 2]
    pts = A[:, None, :] + ref[None, :, 0:1] * (B - A)[:, None, :] + ref[None, :, 1:2] * (C - A)[:, None, :]
    area = 0.5 * np.abs(_cross2(B - A, C - A))
    w = (area / 0.5)[:, None] * ref_w[None, :]
    return pts, w


def bin_probabilities(td: TransformedDensity, spec: BinSpec) -> np.ndarray:
    """Probability of each bin under ``td`` (Lebesgue chart density integrated)."""
    cells = spec.cells()
    pts, w = _interval_rule(cells) if spec.n == 1 else _triangle_rule(cells)
    vals = np.asarray(lebesgue_chart_density(td, pts.reshape(-1, spec.n))).reshape(w.shape)
    return np.sum(vals * w, axis=1)


def marginal_cdf_table(td: TransformedDensity, coord: int, knots: int = 1024):
    """CDF of barycentric coordinate ``coord`` at ``knots + 1`` graded values in [0, 1]."""
    n = td.n
    # Knots graded toward 0 and 1, where marginals may be singular.
    edges = np.linspace(0.0, 1.0, knots + 1)
    edges = edges * edges * (3 - 2 * edges)
    a = (edges[:-1, None] + np.diff(edges)[:, None] * _GL_NODES[None, :]).ravel()
    wa = (np.diff(edges)[:, None] * _GL_WEIGHTS[None, :]).ravel()
    if n == 1:
        x = a if coord == 0 else 1.0 - a
        dens = np.asarray(lebesgue_chart_density(td, x[:, None]))
    elif n == 2:
        # Slice {b_coord = a} parametrized by tau in (0, 1 - a), unit Jacobian.
        nodes, weights = np.polynomial.legendre.leggauss(48)
        nodes, weights = 0.5 * (nodes + 1.0), 0.5 * weights
        # Smoothstep grading toward both ends tames x^(a-1) endpoint behaviour.
        nodes, weights = nodes * nodes * (3 - 2 * nodes), weights * 6 * nodes * (1 - nodes)
        length = 1.0 - a
        tau = length[:, None] * nodes[None, :]
        other = length[:, None] - tau
        aa = np.broadcast_to(a[:, None], tau.shape)
        if coord == 0:
            x = np.stack([aa, tau], axis=-1)
        elif coord == 1:
            x = np.stack([tau, aa], axis=-1)
        else:
            x = np.stack([tau, other], axis=-1)
        vals = np.asarray(lebesgue_chart_density(td, x.reshape(-1, 2))).reshape(tau.shape)
        dens = length * (vals @ weights)
    else:
        raise DomainError("marginal CDFs are tabulated for n in {1, 2}")
    inc = (dens * wa).reshape(knots, -1).sum(axis=1)
    return edges, np.concatenate([[0.0], np.cumsum(inc)])


@dataclass(frozen=True)
class MCThresholds:
    """Pass/fail thresholds of :func:`mc_verify`.

    A bin passes the relative-error check if
    ``|observed - expected| / expected <= max(max_relative_bin_error, relative_error_z / sqrt(expected))``;
    the second term keeps the check at ``relative_error_z`` standard errors for
    bins whose Poisson noise exceeds the fixed tolerance.
    """

    chi_square_alpha: float = 1e-3
    ks_coefficient: float = 1.95
    max_relative_bin_error: float = 0.05
    relative_error_z: float = 5.0


@dataclass(frozen=True)
class MCReport:
    sample_count: int
    bin_spec: dict
    sup_relative_bin_error: float
    chi_square_statistic: float
    chi_square_dof: int
    per_marginal_ks: list
    chi_square_p_value: float
    relative_bin_error_ok: bool
    thresholds: MCThresholds = field(default_factory=MCThresholds)

    @property
    def verdict(self) -> str:
        t = self.thresholds
        ks_limit = t.ks_coefficient / math.sqrt(self.sample_count)
        ok = (self.chi_square_p_value >= t.chi_square_alpha
              and all(d <= ks_limit for d in self.per_marginal_ks)
              and self.relative_bin_error_ok)
        return "pass" if ok else "fail"

    def to_dict(self):
        out = asdict(self)
        out["verdict"] = self.verdict
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def mc_verify(f: M.DensityFamily, td: TransformedDensity, g: GeneratorLike, count: int,
              bins: int, thresholds: MCThresholds = MCThresholds()) -> MCReport:
    """Histogram transformed samples of ``f`` and compare with ``td``.

    Bins with expected count below 25 are pooled into one extra cell, which
    enters the chi-square statistic only if its own expectation reaches 25.
    """
    if isinstance(f, M.DiracAt) or td.is_atom:
        raise DomainError("mc_verify needs a source and target with densities")
    if f.n != td.n:
        raise DomainError(f"family dimension {f.n} differs from density dimension {td.n}")
    spec = BinSpec.for_target(td.n, bins)
    if count < EXPECTED_COUNT_FLOOR * spec.bins:
        raise DomainError("insufficient samples for bin floor")
    y = sample(f, g, count)
    b = homogeneous_transform(y)
    x = chart_coords(b)
    observed = np.bincount(spec.index(x), minlength=spec.bins).astype(float)
    expected = count * bin_probabilities(td, spec)

    big = expected >= EXPECTED_COUNT_FLOOR
    obs_cells = list(observed[big])
    exp_cells = list(expected[big])
    if not np.all(big):
        pooled_e = float(np.sum(expected[~big]))
        if pooled_e >= EXPECTED_COUNT_FLOOR:
            obs_cells.append(float(np.sum(observed[~big])))
            exp_cells.append(pooled_e)
    obs_cells, exp_cells = np.array(obs_cells), np.array(exp_cells)
    chi2 = float(np.sum((obs_cells - exp_cells) ** 2 / exp_cells)) if exp_cells.size else 0.0
    dof = max(int(exp_cells.size) - 1, 0)
    p_value = float(stats.chi2.sf(chi2, dof)) if dof > 0 else 1.0

    rel = np.abs(observed[big] - expected[big]) / expected[big]
    sup_rel = float(np.max(rel)) if rel.size else 0.0
    allowed = np.maximum(thresholds.max_relative_bin_error,
                         thresholds.relative_error_z / np.sqrt(expected[big]))
    rel_ok = bool(np.all(rel <= allowed))

    ks = []
    for coord in range(td.n + 1):
        grid, cdf = marginal_cdf_table(td, coord)
        ks.append(float(stats.kstest(b[:, coord], lambda v: np.interp(v, grid, cdf)).statistic))

    return MCReport(
        sample_count=int(count),
        bin_spec=spec.to_dict(),
        sup_relative_bin_error=sup_rel,
        chi_square_statistic=chi2,
        chi_square_dof=dof,
        per_marginal_ks=ks,
        chi_square_p_value=p_value,
        relative_bin_error_ok=rel_ok,
        thresholds=thresholds,
    )
