"""Charts, trivialization and projections of the homogeneous transform.

Points are plain numpy arrays whose last axis holds the coordinates, so every
function also works on batches of shape ``(..., n + 1)`` or ``(..., n)``.

* ``homogeneous_transform`` maps the half-space ``sum(y) > 0`` onto the
  hyperplane ``P_n = {sum(b) = 1}``.
* ``chart_embed`` parametrizes ``P_n`` by ``R^n`` (append ``1 - sum(x)``);
  ``B_n`` (open standard simplex) is sent onto the open probability simplex.
* ``trivialize`` is the diffeomorphism ``(x, t) -> e^t * chart_embed(x)``,
  which turns the transform into the projection ``(x, t) -> x``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError

#: Max-abs tolerance used when comparing normalized points.
POINT_TOL = 1e-12
#: Tolerance on ``sum(b) == 1`` for simplex membership.
SIMPLEX_SUM_TOL = 1e-9
#: Largest ``|t|`` accepted by ``trivialize`` before ``e^t`` is refused.
MAX_ABS_T = 700.0


class FiberPoint(NamedTuple):
    """Chart coordinates ``x`` together with the log-scale fiber coordinate ``t``."""

    x: np.ndarray
    t: float


def _as_points(y, min_len=2):
    y = np.asarray(y, dtype=float)
    if y.ndim == 0 or y.shape[-1] < min_len:
        raise DomainError(f"expected coordinate vectors of length >= {min_len}, got shape {y.shape}")
    return y


def dim_of(y):
    """Simplex dimension ``n`` of an ambient point ``y`` of length ``n + 1``."""
    return _as_points(y).shape[-1] - 1


def check_upper(y):
    """Validate that every point lies in ``U_{n+1}`` (strictly positive sum)."""
    y = _as_points(y)
    if not np.all(np.sum(y, axis=-1) > 0):
        raise DomainError("point(s) outside U_{n+1}: coordinate sum must be > 0")
    return y


def check_orthant(y):
    """Validate strict positivity of every coordinate."""
    y = _as_points(y)
    if not np.all(y > 0):
        raise DomainError("point(s) outside the open positive orthant")
    return y


def in_open_simplex(x):
    """Boolean mask: chart points lying in the open standard simplex ``B_n``."""
    x = np.asarray(x, dtype=float)
    return np.all(x > 0, axis=-1) & (np.sum(x, axis=-1) < 1)


def check_in_Bn(x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(in_open_simplex(x)):
        raise DomainError("chart point(s) outside the open simplex B_n")
    return x


def homogeneous_transform(y):
    """Normalize ``y`` to unit coordinate sum.

    Parameters
    ----------
    y : array_like, shape (..., n + 1)
        Points of ``U_{n+1}``; negative coordinates are allowed as long as
        the sum is positive.

    Returns
    -------
    ndarray
        Barycentric coordinates ``y / sum(y)``.

    Raises
    ------
    DomainError
        If some point has ``sum(y) <= 0``.
    """
    y = check_upper(y)
    return y / np.sum(y, axis=-1, keepdims=True)


def chart_embed(x):
    """Append ``1 - sum(x)`` to chart coordinates, landing on ``P_n``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    last = 1.0 - np.sum(x, axis=-1, keepdims=True)
    return np.concatenate([x, last], axis=-1)


def chart_coords(b):
    """Inverse of :func:`chart_embed`: drop the last barycentric coordinate."""
    b = _as_points(b)
    if not np.all(np.abs(np.sum(b, axis=-1) - 1.0) <= SIMPLEX_SUM_TOL):
        raise DomainError("point(s) not on P_n: coordinates must sum to 1")
    return b[..., :-1].copy()


def _check_t(t):
    if not np.all(np.abs(t) <= MAX_ABS_T):
        raise OverflowError(f"|t| > {MAX_ABS_T}: e^t is not representable")


def trivialize(p: FiberPoint):
    """Map ``(x, t)`` to ``e^t * chart_embed(x)``."""
    t = np.asarray(p.t, dtype=float)
    _check_t(t)
    return np.exp(t)[..., None] * chart_embed(p.x)


def trivialize_inv(y) -> FiberPoint:
    """Inverse of :func:`trivialize` on ``U_{n+1}``."""
    y = check_upper(y)
    total = np.sum(y, axis=-1)
    x = (y / total[..., None])[..., :-1]
    t = np.log(total)
    return FiberPoint(x, float(t) if np.ndim(t) == 0 else t)


def project(p: FiberPoint):
    """Canonical projection ``(x, t) -> x``."""
    return np.asarray(p.x, dtype=float)


def jacobian_det_T(p: FiberPoint):
    """Determinant of the Jacobian of :func:`trivialize`, ``e^{(n+1) t}``."""
    n = np.atleast_1d(np.asarray(p.x)).shape[-1]
    t = np.asarray(p.t, dtype=float)
    _check_t(t)
    if np.any(np.abs((n + 1) * t) > MAX_ABS_T):
        raise OverflowError("e^{(n+1)t} is not representable")
    out = np.exp((n + 1) * t)
    return float(out) if out.ndim == 0 else out


def fd_jacobian_det(p: FiberPoint, h=1e-6):
    """Central-difference determinant of the Jacobian of :func:`trivialize`.

    Independent of the closed form; used to check :func:`jacobian_det_T`.
    """
    x = np.asarray(p.x, dtype=float)
    n = x.shape[-1]
    z0 = np.append(x, float(p.t))
    jac = np.empty((n + 1, n + 1))
    for j in range(n + 1):
        step = h * max(1.0, abs(z0[j]))
        zp, zm = z0.copy(), z0.copy()
        zp[j] += step
        zm[j] -= step
        fp = trivialize(FiberPoint(zp[:n], zp[n]))
        fm = trivialize(FiberPoint(zm[:n], zm[n]))
        jac[:, j] = (fp - fm) / (2 * step)
    return float(np.linalg.det(jac))


def chart_volume(n):
    """Lebesgue volume of ``B_n``, ``1 / n!``."""
    return 1.0 / math.factorial(n)
