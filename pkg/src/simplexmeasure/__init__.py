"""Probability densities transported to the open simplex by ``y -> y / sum(y)``."""

from .errors import (
    AbsoluteContinuityError,
    DomainError,
    MapError,
    PreconditionError,
    QuadratureError,
    SimplexMeasureError,
)
from .geometry import (
    FiberPoint,
    chart_coords,
    chart_embed,
    chart_volume,
    homogeneous_transform,
    jacobian_det_T,
    project,
    trivialize,
    trivialize_inv,
)
from .measures import (
    CovMatrix,
    DiracAt,
    LogNormal,
    MultiChi,
    MultiGamma,
    RadialReciprocal,
    ReferenceMeasure,
    density_at,
    dirichlet_chart_density,
    family_from_json,
    family_to_json,
    kappa_s,
    kappa_s_analytic,
    multivariate_beta,
)
from .pushforward import (
    TransformedDensity,
    closed_form,
    fiber_density,
    lebesgue_chart_density,
    numeric_fiber,
)
from .quadrature import QuadratureSpec, integrate_Bn, integrate_halfline, integrate_interval
from .sampling import BinSpec, MCReport, SeededGenerator, mc_verify, sample

__version__ = "0.1.0"
