"""Biharmonicity residuals for hypersurfaces of (R^{m+1}, f^{-2} delta).

Every residual is returned as a :class:`BiharmonicResidual`: the left-hand
side of the scalar (normal) equation, the left-hand side of the vector
(tangential) equation in an orthonormal tangent frame, and the largest
magnitude among the summed terms of each, which sets the scale for the
zero test ``|r| <= eps_abs + eps_rel * scale``.

Frame conventions follow :mod:`biharm.hypersurface`: ``shape.frame`` rows are
a Euclidean orthonormal tangent frame e_a; in the conformal metric the
orthonormal frame is ebar_a = f e_a and the unit normal is xibar = f xi.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import DomainError, PreconditionError, RegionExhaustedError
from .geometry import (
    DomainBox,
    RicciData,
    ScalarField,
    _SigmaTerms,
    ricci_normal_normal,
    ricci_tangential,
    sample_stream,
)
from .hypersurface import (
    AffineHyperplane,
    chart_laplacian,
    christoffel_chart,
    conformal_mean_curvature,
    conformal_shape_frame,
    conformal_surface,
    metric_derivative,
    require_minimal,
    shape_operator,
)


@dataclass(frozen=True)
class Tolerances:
    """Zero-test thresholds. ``numeric()`` gives the finite-difference preset."""

    eps_abs: float = 1e-12
    eps_rel: float = 1e-9
    tol_h: float = 1e-9
    noise_floor: float = 1e-12

    def __post_init__(self):
        if not (self.eps_abs > 0 and self.eps_rel > 0 and self.tol_h >= 0 and self.noise_floor >= 0):
            raise ValueError("tolerances must be positive")

    @classmethod
    def numeric(cls):
        return cls(eps_rel=1e-6, tol_h=1e-6)

    @property
    def floor(self):
        # scale below which eps_abs dominates the zero test
        return self.eps_abs / self.eps_rel


SYMBOLIC = Tolerances()


def _term_scale(terms):
    scale = 0.0
    for t in terms:
        a = np.abs(np.asarray(t, dtype=float))
        if a.size:
            scale = max(scale, float(a.max()))
    return scale


@dataclass
class BiharmonicResidual:
    point: np.ndarray
    normal: float
    tangential: np.ndarray
    normal_scale: float
    tangential_scale: float
    equation: str
    u: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @classmethod
    def from_terms(cls, point, normal_terms, tangential_terms, m, equation, u=None, extras=None):
        normal = math.fsum(float(t) for t in normal_terms)
        if tangential_terms:
            tangential = np.sum([np.asarray(t, dtype=float) for t in tangential_terms], axis=0)
        else:
            tangential = np.zeros(m)
        return cls(
            point=np.asarray(point, dtype=float),
            normal=float(normal),
            tangential=np.asarray(tangential, dtype=float).reshape(m),
            normal_scale=_term_scale(normal_terms),
            tangential_scale=_term_scale(tangential_terms),
            equation=equation,
            u=None if u is None else np.asarray(u, dtype=float),
            extras=extras or {},
        )

    @property
    def scale(self):
        return max(self.normal_scale, self.tangential_scale)

    @property
    def tangential_norm(self):
        return float(np.max(np.abs(self.tangential))) if self.tangential.size else 0.0

    def relative(self, tol=SYMBOLIC):
        """max |r| / (eps_abs/eps_rel + scale); the zero test is relative <= eps_rel."""
        rn = abs(self.normal) / (tol.floor + self.normal_scale)
        rt = self.tangential_norm / (tol.floor + self.tangential_scale)
        return max(rn, rt)

    def is_zero(self, tol=SYMBOLIC):
        return (
            abs(self.normal) <= tol.eps_abs + tol.eps_rel * self.normal_scale
            and self.tangential_norm <= tol.eps_abs + tol.eps_rel * self.tangential_scale
        )

    def to_dict(self):
        return {
            "equation": self.equation,
            "point": self.point.tolist(),
            "normal": self.normal,
            "tangential": self.tangential.tolist(),
            "normal_scale": self.normal_scale,
            "tangential_scale": self.tangential_scale,
        }


# ---------------------------------------------------------------------------
# chart calculus in g or in gbar = f^{-2} g


@dataclass
class _ChartMetric:
    g_inv: np.ndarray
    gamma: np.ndarray
    to_frame: np.ndarray  # chart gradient (d_i s) -> orthonormal frame components


def _chart_metric(shape, second, f_jet=None):
    tangents = shape.tangents
    g = shape.metric.g
    dg = metric_derivative(tangents, second)
    R_inv_T = np.linalg.inv(shape.frame_R).T
    if f_jet is None:
        return _ChartMetric(shape.metric.inverse, christoffel_chart(shape.metric.inverse, dg), R_inv_T)
    F, dF = f_jet.value, f_jet.grad
    gbar = g / F**2
    dgbar = -2.0 * np.einsum("k,ij->kij", dF, g) / F**3 + dg / F**2
    gbar_inv = np.linalg.inv(gbar)
    return _ChartMetric(gbar_inv, christoffel_chart(gbar_inv, dgbar), F * R_inv_T)


def _field(h, m):
    if isinstance(h, ScalarField):
        return h
    if isinstance(h, str):
        h = ex.parse(h, ex.ChartCoordinates(m))
    return ScalarField(ex.as_expr(h), m)


def _h_jet(field_, chart, u):
    jet = field_.jet(u, 2)
    lap = chart_laplacian(jet.grad, jet.hess, chart.g_inv, chart.gamma)
    return jet.value, chart.to_frame @ jet.grad, lap


def _general_terms(pieces, A, norm2, ric_nn, ric_tan, m):
    """Terms for H = sum of ``pieces``, each a (value, frame gradient, Laplacian).

    Terms linear in H are kept per piece so cancellation between the
    pieces shows up in the scale.
    """
    ric_tan = np.asarray(ric_tan, dtype=float)
    H = sum(h for h, _, _ in pieces)
    grad_H = sum(g for _, g, _ in pieces)
    normal, tangential = [], []
    for h, g, lap in pieces:
        normal += [lap, -h * norm2, h * ric_nn]
        tangential += [2.0 * A @ g, -2.0 * h * ric_tan]
    tangential.append(m * H * grad_H)
    return normal, tangential


# ---------------------------------------------------------------------------
# general hypersurface equation and its conformally flat form


def residual_generic(h_field, shape, ric, hs, u, cf=None, equation="general"):
    """Normal and tangential parts of the biharmonic hypersurface equation.

    ``h_field`` is a chart field for the mean curvature, or a sequence of
    fields summing to it. Without ``cf`` the
    induced metric is the Euclidean one and ``shape.A_frame`` is used; with
    ``cf`` every quantity is taken in f^{-2} delta (metric f^{-2} g, frame
    f e_a, shape operator f A + xi(f) Id). ``ric`` must carry the
    normal-normal and tangential contractions in the same frame.
    """
    if ric.normal_normal is None or ric.tangential is None:
        raise PreconditionError("RicciData must carry normal_normal and tangential contractions")
    m = shape.m
    _, _, second = hs._raw(u)
    if cf is None:
        chart = _chart_metric(shape, second)
        A = shape.A_frame
    else:
        chart = _chart_metric(shape, second, conformal_surface(cf, hs).f.jet(u, 1))
        A = conformal_shape_frame(cf, shape)
    fields = h_field if isinstance(h_field, (list, tuple)) else [h_field]
    pieces = [_h_jet(_field(h, m), chart, u) for h in fields]
    normal, tangential = _general_terms(
        pieces, A, float(np.sum(A * A)), ric.normal_normal, ric.tangential, m
    )
    return BiharmonicResidual.from_terms(shape.point, normal, tangential, m, equation, u=u)


def conformal_ricci(cf, shape):
    """Ric(xibar, xibar) and [Ric(xibar)]^T for the hypersurface at ``shape``."""
    p = shape.point
    data = RicciData(np.empty((0, 0)), p)
    data.normal_normal = ricci_normal_normal(cf, shape.normal, p)
    data.tangential = ricci_tangential(cf, shape, p)
    return data


def residual_conformal(cf, hs, u):
    """The biharmonic equation with barred quantities in the metric f^{-2} delta."""
    shape = shape_operator(hs, u)
    cs = conformal_surface(cf, hs)
    h = (cs.f_H, cs.xi_f)
    return residual_generic(h, shape, conformal_ricci(cf, shape), hs, u, cf=cf, equation="conformal")


# ---------------------------------------------------------------------------
# minimal Euclidean base


def residual_minimal_base(cf, hs, u, tol_h=SYMBOLIC.tol_h):
    """Biharmonic equation for a Euclidean-minimal hypersurface, in terms of f.

    With W = xi(f):
      normal  f Lap(fW) - m <grad f, grad(fW)> - f^2 W |A|^2 - 2m W^3 + m f W Hess f(xi, xi)
      tangent 2 f A(grad W) - 2(m-1) W A(grad f) + (4-m) W grad W
    All operators use the induced Euclidean metric g.
    """
    shape = shape_operator(hs, u)
    require_minimal(shape, tol_h)
    m = shape.m
    _, _, second = hs._raw(u)
    chart = _chart_metric(shape, second)
    cs = conformal_surface(cf, hs)
    fj = cs.f.jet(u, 1)
    wj = cs.xi_f.jet(u, 1)
    fwj = cs.f_xi_f.jet(u, 2)
    f, W = fj.value, wj.value
    grad_f = chart.to_frame @ fj.grad
    grad_W = chart.to_frame @ wj.grad
    grad_fW = chart.to_frame @ fwj.grad
    lap_fW = chart_laplacian(fwj.grad, fwj.hess, chart.g_inv, chart.gamma)
    hess = cf.jet(shape.point, 2).hess
    xi = shape.normal
    A = shape.A_frame
    normal = [
        f * lap_fW,
        -m * float(grad_f @ grad_fW),
        -(f**2) * W * shape.norm2,
        -2 * m * W**3,
        m * f * W * float(xi @ hess @ xi),
    ]
    tangential = [2 * f * A @ grad_W, -2 * (m - 1) * W * A @ grad_f, (4 - m) * W * grad_W]
    return BiharmonicResidual.from_terms(shape.point, normal, tangential, m, "minimal_base", u=u)


# ---------------------------------------------------------------------------
# hyperplane specializations


def _hyperplane_point(m, c, point):
    point = np.asarray(point, dtype=float)
    if point.size == m:
        return np.append(point, c)
    if point.size != m + 1:
        raise ValueError(f"point must have {m} chart or {m + 1} ambient coordinates")
    if abs(point[-1] - c) > 1e-12 * max(1.0, abs(c)):
        raise PreconditionError(f"point has z = {point[-1]}, expected z = {c}")
    return point


def residual_axis_hyperplane_m4(cf, c, point):
    """Scalar equation of the hyperplane z = c when m = 4, in terms of f.

    sum_i [f^2 f_iiz - 2 f f_i f_iz + f f_z f_ii - 4 f_z f_i^2] + 4 f_z (f f_zz - 2 f_z^2).
    The tangential part (m-4) f_z f_zi vanishes identically; the bare
    factor f_z f_zi is kept in ``extras["tangential_factor"]``.
    """
    m = cf.m
    if m != 4:
        raise PreconditionError(f"this equation needs m = 4, got m = {m}")
    p = _hyperplane_point(m, c, point)
    jet = cf.jet(p, 3)
    f = jet.value
    d1, d2, d3 = jet.grad, jet.hess, jet.third
    z = m
    fz = d1[z]
    terms = []
    for i in range(m):
        terms += [
            f**2 * d3[i, i, z],
            -2 * f * d1[i] * d2[i, z],
            f * fz * d2[i, i],
            -4 * fz * d1[i] ** 2,
        ]
    terms += [4 * fz * f * d2[z, z], -8 * fz**3]
    factor = fz * d2[z, :m]
    return BiharmonicResidual.from_terms(
        p, terms, [(m - 4) * factor], m, "hyperplane_m4", u=p[:m], extras={"tangential_factor": factor.tolist()}
    )


def _separable_terms(p, p_i, p_ii, q, q_z, q_zz, m):
    terms = []
    for i in range(len(p_i)):
        terms += [p * p_ii[i], -m * p_i[i] ** 2, q * p_ii[i]]
    terms += [m * q * q_zz, -2 * m * q_z**2, m * p * q_zz]
    return terms


def residual_separable_cmc(p_field, q_field, point):
    """CMC hyperplane equation for f = p(x) + q(z).

    (p sum p_ii - m sum p_i^2) + m (q q_zz - 2 q_z^2) + (m p q_zz + q sum p_ii).
    ``point`` is an ambient point; m = len(point) - 1.
    """
    point = np.asarray(point, dtype=float)
    n = point.size
    m = n - 1
    p_expr, q_expr = ex.as_expr(p_field), ex.as_expr(q_field)
    if m in ex.variables(p_expr):
        raise PreconditionError("p must not depend on z")
    if ex.variables(q_expr) - {m}:
        raise PreconditionError("q must depend on z only")
    pj = ScalarField(p_expr, n).jet(point, 2)
    qj = ScalarField(q_expr, n).jet(point, 2)
    terms = _separable_terms(
        pj.value, pj.grad[:m], np.diag(pj.hess)[:m], qj.value, qj.grad[m], qj.hess[m, m], m
    )
    return BiharmonicResidual.from_terms(point, terms, [], m, "separable")


def residual_slanted_fz(f_of_z, a, point):
    """Scalar equation for a slanted hyperplane with f = f(z).

    s f^2 f''' + (4 - s) f f' f'' - 4 (2 + s) f'^3, s = sum a_i^2.
    ``point`` is a z value or an ambient point whose last entry is z.
    """
    a = np.asarray(a, dtype=float)
    m = a.size
    expr = ex.as_expr(f_of_z)
    deps = ex.variables(expr)
    if len(deps) > 1:
        raise PreconditionError("f must depend on a single coordinate z")
    one_d = ex.substitute(expr, variables={k: ex.Var(0, "z") for k in deps})
    z = float(np.asarray(point, dtype=float).reshape(-1)[-1])
    jet = ScalarField(one_d, 1).jet(np.array([z]), 3)
    f, f1, f2, f3 = jet.value, jet.grad[0], jet.hess[0, 0], jet.third[0, 0, 0]
    s = float(a @ a)
    terms = [s * f**2 * f3, (4 - s) * f * f1 * f2, -4 * (2 + s) * f1**3]
    return BiharmonicResidual.from_terms(np.array([z]), terms, [], m, "slanted")


# ---------------------------------------------------------------------------
# constant mean curvature and umbilical corollaries


def _ricci_nn_terms(cf, xi_euclid, p):
    s = _SigmaTerms(cf, p)
    xi = s.f * np.asarray(xi_euclid, dtype=float)
    xi_sigma = float(xi @ s.ds)
    c = s.n - 2
    return [s.laplacian, c * float(xi @ s.hess_h @ xi), -c * xi_sigma**2, c * s.grad_norm2], s


def _bracket_terms(cf, shape, abar_or_h):
    """grad(xi sigma), -(xi sigma) grad sigma and the third bracket term."""
    jet = cf.jet(shape.point, 2)
    f = jet.value
    frame, xi = shape.frame, shape.normal
    xi_f = float(xi @ jet.grad)
    e_xif = frame @ jet.hess @ xi - shape.A_frame @ (frame @ jet.grad)
    grad_sigma = frame @ jet.grad
    third = abar_or_h @ grad_sigma if np.ndim(abar_or_h) == 2 else abar_or_h * grad_sigma
    return [f * e_xif, -xi_f * grad_sigma, third], xi_f, grad_sigma


def residual_cmc(cf, hs, u, tol=SYMBOLIC):
    """Conditions for a CMC hypersurface of f^{-2} delta to be biharmonic.

    normal:     |Abar|^2 - Ric(xibar, xibar)
    tangential: grad(xi sigma) - (xi sigma) grad sigma + Abar(grad sigma)
    When xi sigma vanishes at u the reduced pair is stored in ``extras``
    under ``geodesic_normal`` and ``geodesic_tangential``.
    """
    shape = shape_operator(hs, u)
    m = shape.m
    cs = conformal_surface(cf, hs)
    _, _, second = hs._raw(u)
    chart = _chart_metric(shape, second, cs.f.jet(u, 1))
    hj = cs.hbar.jet(u, 1)
    grad_h = chart.to_frame @ hj.grad
    if np.max(np.abs(grad_h), initial=0.0) > tol.eps_abs + tol.eps_rel * max(1.0, abs(hj.value)):
        raise PreconditionError("mean curvature is not constant at this point")
    abar = conformal_shape_frame(cf, shape)
    norm2 = float(np.sum(abar * abar))
    ric_terms, s = _ricci_nn_terms(cf, shape.normal, shape.point)
    normal = [norm2] + [-t for t in ric_terms]
    tangential, xi_f, grad_sigma = _bracket_terms(cf, shape, abar)
    extras = {"hbar": hj.value}
    if abs(xi_f) <= tol.eps_abs:
        xi = s.f * shape.normal
        c4 = norm2 - (s.laplacian + (m - 1) * (float(xi @ s.hess_h @ xi) + s.grad_norm2))
        extras["geodesic_normal"] = c4
        extras["geodesic_tangential"] = (abar @ grad_sigma).tolist()
    return BiharmonicResidual.from_terms(shape.point, normal, tangential, m, "cmc", u=u, extras=extras)


def residual_umbilical(cf, hs, u, h_field=None, tol=SYMBOLIC):
    """Biharmonic equation for a totally umbilical hypersurface of f^{-2} delta.

    normal:     Lap H - m H^3 + H Ric(xibar, xibar)
    tangential: (2+m)/2 grad H^2 - 2(m-1) H [grad(xi sigma) - (xi sigma) grad sigma + H grad sigma]
    When H = xi sigma the tangential part reduces to a multiple of
    (m-4) grad H^2, reported as ``extras["reduced_tangential"]``.
    """
    shape = shape_operator(hs, u)
    m = shape.m
    abar = conformal_shape_frame(cf, shape)
    hbar = float(np.trace(abar)) / m
    norm2 = float(np.sum(abar * abar))
    if abs(norm2 - m * hbar**2) > tol.eps_abs + tol.eps_rel * norm2:
        raise PreconditionError("hypersurface is not umbilic at this point")
    cs = conformal_surface(cf, hs)
    _, _, second = hs._raw(u)
    chart = _chart_metric(shape, second, cs.f.jet(u, 1))
    H, grad_H, lap_H = _h_jet(cs.hbar if h_field is None else _field(h_field, m), chart, u)
    ric_terms, _ = _ricci_nn_terms(cf, shape.normal, shape.point)
    normal = [lap_H, -m * H**3] + [H * t for t in ric_terms]
    bracket, xi_f, _ = _bracket_terms(cf, shape, H)
    grad_h2 = 2 * H * grad_H
    tangential = [(2 + m) / 2 * grad_h2] + [-2 * (m - 1) * H * t for t in bracket]
    extras = {"m_minus_4": m - 4}
    if abs(H - xi_f) <= tol.eps_abs + tol.eps_rel * max(abs(H), abs(xi_f)):
        extras["reduced_tangential"] = ((m - 4) * grad_h2).tolist()
    return BiharmonicResidual.from_terms(shape.point, normal, tangential, m, "umbilical", u=u, extras=extras)


# ---------------------------------------------------------------------------
# classification


class Verdict(str, enum.Enum):
    MINIMAL = "Minimal"
    PROPER_BIHARMONIC = "ProperBiharmonic"
    NOT_BIHARMONIC = "NotBiharmonic"
    INDETERMINATE = "Indeterminate"


@dataclass
class Classification:
    verdict: Verdict
    max_abs_hbar: float
    max_relative_residual: float
    samples: int
    seed: int
    rejected: int
    failing: int
    below_noise: int
    equations: list
    records: list = field(default_factory=list)

    def to_dict(self, include_records=False):
        out = {
            "verdict": self.verdict.value,
            "max_abs_hbar": self.max_abs_hbar,
            "max_relative_residual": self.max_relative_residual,
            "samples": self.samples,
            "seed": self.seed,
            "rejected": self.rejected,
            "failing": self.failing,
            "below_noise": self.below_noise,
            "equations": list(self.equations),
        }
        if include_records:
            out["records"] = self.records
        return out


def _chart_sample(hs, box, rng):
    p = box.sample(rng)
    if box.dim == hs.m:
        return p
    if box.dim == hs.n and isinstance(hs, AffineHyperplane):
        # project the ambient draw onto the hyperplane
        nu = hs.normal
        p = p - (float(nu @ p) - hs.offset) * nu
        return hs.to_chart(p)
    raise ValueError(f"box dimension {box.dim} fits neither chart ({hs.m}) nor ambient ({hs.n})")


def evaluate_at(cf, hs, u, equation="auto", tol=SYMBOLIC):
    """(residual, Hbar) at chart point u using the requested equation."""
    shape = shape_operator(hs, u)
    hbar = conformal_mean_curvature(cf, shape)
    if equation == "auto":
        equation = "minimal_base" if abs(shape.H) <= tol.tol_h else "conformal"
    if equation == "minimal_base":
        res = residual_minimal_base(cf, hs, u, tol.tol_h)
    elif equation == "conformal":
        res = residual_conformal(cf, hs, u)
    elif equation == "hyperplane_m4":
        if not (isinstance(hs, AffineHyperplane) and hs.axis == cf.m):
            raise PreconditionError("hyperplane_m4 needs an axis-aligned hyperplane z = c")
        res = residual_axis_hyperplane_m4(cf, hs.offset * hs.normal[-1], shape.point)
    else:
        raise ValueError(f"unknown equation {equation!r}")
    return res, hbar


def sample_chart_points(cf, hs, box, samples, seed, max_tries=100):
    """Admissible chart points, one independent stream per sample index.

    Returns (points, rejected). ``box`` spans the chart or, for a
    hyperplane, the ambient space (draws are projected onto the plane).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    points = []
    rejected = 0
    for i in range(samples):
        rng = sample_stream(seed, i)
        for _ in range(max_tries):
            u = _chart_sample(hs, box, rng)
            try:
                ok = box_admissible(cf, hs.point(u), box.margin)
            except DomainError:
                ok = False
            if ok:
                points.append(u)
                break
            rejected += 1
        else:
            raise RegionExhaustedError(f"no admissible point for sample {i} after {max_tries} draws")
        if rejected >= 100 and rejected > 0.99 * (rejected + len(points)):
            raise RegionExhaustedError(f"rejection rate above 99% ({rejected} rejected)")
    return points, rejected


def classify(cf, hs, box, samples, seed, tol=SYMBOLIC, equation="auto"):
    """Sample chart points and apply the threshold rules.

    Minimal if every sampled |Hbar| <= tol_h; Indeterminate if more than half
    of the residual scales sit at or below the noise floor; otherwise
    ProperBiharmonic when every sample passes the zero test.
    """
    points, rejected = sample_chart_points(cf, hs, box, samples, seed)
    records = []
    for i, u in enumerate(points):
        res, hbar = evaluate_at(cf, hs, u, equation, tol)
        records.append(
            {
                "index": i,
                "u": np.asarray(u).tolist(),
                "point": res.point.tolist(),
                "equation": res.equation,
                "hbar": hbar,
                "normal": res.normal,
                "scale": res.scale,
                "relative": res.relative(tol),
                "passed": res.is_zero(tol),
            }
        )
    max_h = max(abs(r["hbar"]) for r in records)
    max_rel = max(r["relative"] for r in records)
    failing = sum(not r["passed"] for r in records)
    below = sum(r["scale"] <= tol.noise_floor for r in records)
    if max_h <= tol.tol_h:
        verdict = Verdict.MINIMAL
    elif below > 0.5 * len(records):
        verdict = Verdict.INDETERMINATE
    elif failing == 0:
        verdict = Verdict.PROPER_BIHARMONIC
    else:
        verdict = Verdict.NOT_BIHARMONIC
    return Classification(
        verdict=verdict,
        max_abs_hbar=max_h,
        max_relative_residual=max_rel,
        samples=len(records),
        seed=seed,
        rejected=rejected,
        failing=failing,
        below_noise=below,
        equations=sorted({r["equation"] for r in records}),
        records=records,
    )


def box_admissible(cf, p, margin):
    try:
        value = cf.value(p)
    except DomainError:
        return False
    return math.isfinite(value) and abs(value) > margin


# ---------------------------------------------------------------------------
# hyperplane trichotomy


@dataclass
class CaseReport:
    m: int
    c: float
    case1: bool
    case2: bool
    case3: bool
    samples: int
    seed: int
    max_rel_m4: float | None
    max_rel_separable: float | None
    hbar_range: tuple

    @property
    def cases(self):
        return [k for k, ok in ((1, self.case1), (2, self.case2), (3, self.case3)) if ok]

    @property
    def biharmonic(self):
        return bool(self.cases)

    def to_dict(self):
        return {
            "m": self.m,
            "c": self.c,
            "cases": self.cases,
            "biharmonic": self.biharmonic,
            "samples": self.samples,
            "seed": self.seed,
            "max_rel_m4": self.max_rel_m4,
            "max_rel_separable": self.max_rel_separable,
            "hbar_min": self.hbar_range[0],
            "hbar_max": self.hbar_range[1],
        }


def hyperplane_case_analysis(cf, m, c, box=None, samples=50, seed=0, tol=SYMBOLIC):
    """Which of the three hyperplane cases hold for z = c, decided by sampling.

    (1) f_z = 0; (2) m = 4 and the m = 4 scalar equation vanishes;
    (3) f_zi = 0 for all i and the separable CMC equation vanishes.
    ``box`` covers the chart (m) or ambient (m+1) coordinates; default [0,1]^m.
    """
    if cf.m != m:
        raise ValueError(f"conformal factor has m = {cf.m}, expected {m}")
    if box is None:
        box = DomainBox(np.zeros(m), np.ones(m))
    lo, hi = box.lower[:m], box.upper[:m]
    chart_box = DomainBox(lo, hi, box.margin)
    f_z_zero = True
    fzi_zero = True
    m4_zero = m == 4
    separable_zero = True
    rel19, rel20 = [], []
    hbars = []
    taken = 0
    tries = 0
    while taken < samples:
        rng = sample_stream(seed, tries)
        tries += 1
        if tries > 100 * samples:
            raise RegionExhaustedError("hyperplane sampling rejected too many points")
        p = np.append(chart_box.sample(rng), c)
        if not box_admissible(cf, p, box.margin):
            continue
        try:
            jet = cf.jet(p, 2)
            res19 = residual_axis_hyperplane_m4(cf, c, p) if m == 4 else None
        except DomainError:
            continue
        taken += 1
        fz = jet.grad[m]
        scale = max(abs(jet.value), float(np.max(np.abs(jet.grad))))
        hbars.append(fz)
        f_z_zero &= abs(fz) <= tol.eps_abs + tol.eps_rel * scale
        hscale = max(scale, float(np.max(np.abs(jet.hess))))
        fzi_zero &= bool(np.all(np.abs(jet.hess[m, :m]) <= tol.eps_abs + tol.eps_rel * hscale))
        if res19 is not None:
            rel19.append(res19.relative(tol))
            m4_zero &= res19.is_zero(tol)
        # p = f(., c), q(z) = f(x, z) - f(x, c): all the needed jets come from f
        terms = _separable_terms(
            jet.value, jet.grad[:m], np.diag(jet.hess)[:m], 0.0, fz, jet.hess[m, m], m
        )
        r20 = BiharmonicResidual.from_terms(p, terms, [], m, "separable")
        rel20.append(r20.relative(tol))
        separable_zero &= r20.is_zero(tol)
    return CaseReport(
        m=m,
        c=float(c),
        case1=bool(f_z_zero),
        case2=bool(m4_zero),
        case3=bool(fzi_zero and separable_zero),
        samples=taken,
        seed=seed,
        max_rel_m4=max(rel19) if rel19 else None,
        max_rel_separable=max(rel20),
        hbar_range=(float(min(hbars)), float(max(hbars))),
    )
