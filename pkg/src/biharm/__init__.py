"""Biharmonic hypersurfaces of conformally flat spaces (R^{m+1}, f^{-2} delta)."""

__version__ = "0.1.0"

from .biharmonic import (  # noqa: E402
    BiharmonicResidual,
    Classification,
    Tolerances,
    Verdict,
    classify,
    hyperplane_case_analysis,
    residual_axis_hyperplane_m4,
    residual_cmc,
    residual_conformal,
    residual_generic,
    residual_minimal_base,
    residual_separable_cmc,
    residual_slanted_fz,
    residual_umbilical,
)
from .expr import CoordinateSystem, Expression, differentiate, evaluate, format_expr, parse, simplify  # noqa: E402
from .geometry import ConformalFactor, DomainBox, PlaneSection, scan_sectional_curvature, sectional_curvature  # noqa: E402
from .hypersurface import AffineHyperplane, ParametrizedPatch, shape_operator  # noqa: E402
