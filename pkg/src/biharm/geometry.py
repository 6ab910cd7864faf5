"""Curvature of the conformally flat metric G = f^{-2} delta on R^n.

Conventions used throughout the package:

* ``n = m + 1`` is the ambient dimension; every coefficient written
  ``(m - 1)`` for a hypersurface M^m is ``n - 2`` here.
* ``sigma = ln f``; the flat metric is ``e^{2 sigma} G``.
* ``e_i = f * d/dx_i`` is the G-orthonormal coordinate frame. Plane
  sections are given by their coefficient vectors in that frame.
* Christoffel symbols are stored as ``gamma[k, i, j]`` = Gamma^k_ij.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import DomainError, PreconditionError, RegionExhaustedError


@dataclass
class FieldJet:
    """Value and Euclidean partial derivatives of a scalar field at a point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray | None = None
    third: np.ndarray | None = None


def _multi_indices(n, order):
    return list(itertools.combinations_with_replacement(range(n), order))


class ScalarField:
    """A scalar expression on R^n with cached symbolic partials up to order 3."""

    def __init__(self, expression, n, binding=None):
        self.n = n
        self.binding = dict(binding or {})
        self.expression = ex.bind(expression, self.binding) if self.binding else expression
        unbound = ex.parameters(self.expression)
        if unbound:
            raise ex.UnboundParameterError(f"unbound parameters: {sorted(unbound)}")
        bad = [i for i in ex.variables(self.expression) if i >= n]
        if bad:
            raise ValueError(f"expression uses coordinate index {bad[0]} >= n={n}")
        self._partials = {(): self.expression}
        self._compiled = {}

    def partial_expr(self, indices):
        """Symbolic partial derivative along ``indices`` (order-insensitive)."""
        key = tuple(sorted(indices))
        if key not in self._partials:
            parent = self.partial_expr(key[:-1])
            self._partials[key] = ex.differentiate(parent, key[-1])
        return self._partials[key]

    def _joint(self, order):
        if order not in self._compiled:
            keys = [k for r in range(order + 1) for k in _multi_indices(self.n, r)]
            fns = ex.compile_many([self.partial_expr(k) for k in keys])
            self._compiled[order] = (keys, fns[0].joint)
        return self._compiled[order]

    def value(self, p):
        return self.jet(p, 0).value

    def jet(self, p, order=2):
        """Numeric jet at ``p``; ``order`` in 0..3."""
        keys, joint = self._joint(order)
        p = [float(v) for v in p]
        if len(p) != self.n:
            raise ValueError(f"point has {len(p)} coordinates, expected {self.n}")
        try:
            values = joint(p)
        except (OverflowError, ZeroDivisionError, ValueError) as exc:
            raise DomainError(str(exc)) from None
        table = dict(zip(keys, values))
        n = self.n
        grad = np.array([table[(i,)] for i in range(n)]) if order >= 1 else np.zeros(n)
        hess = third = None
        if order >= 2:
            hess = np.empty((n, n))
            for i, j in itertools.product(range(n), repeat=2):
                hess[i, j] = table[tuple(sorted((i, j)))]
        if order >= 3:
            third = np.empty((n, n, n))
            for i, j, k in itertools.product(range(n), repeat=3):
                third[i, j, k] = table[tuple(sorted((i, j, k)))]
        return FieldJet(table[()], grad, hess, third)


class ConformalFactor(ScalarField):
    """Positive factor f defining the ambient metric G = f^{-2} delta.

    ``sigma`` is materialized as the expression ``ln(f)`` with its own
    symbolic partials. Every evaluation checks ``f(p) > 0``.
    """

    def __init__(self, expression, coords, binding=None, text=None):
        self.coords = coords
        self.text = text if text is not None else ex.format_expr(expression)
        super().__init__(expression, coords.n, binding)
        self.sigma = ScalarField(ex.call("ln", self.expression), self.n)

    @classmethod
    def from_text(cls, text, coords, binding=None):
        return cls(ex.parse(text, coords), coords, binding, text=text)

    @property
    def m(self):
        return self.n - 1

    def jet(self, p, order=2):
        j = super().jet(p, order)
        if not j.value > 0:
            raise DomainError(f"conformal factor f = {j.value} is not positive")
        return j

    def metric(self, p):
        """Coordinate matrix G_ij = f^{-2} delta_ij."""
        return np.eye(self.n) / self.value(p) ** 2

    def scaled(self, k):
        """The factor k*f (a homothety of the ambient metric)."""
        return ConformalFactor(ex.mul(ex.num(k), self.expression), self.coords)


@dataclass
class DomainBox:
    """Axis-aligned sampling box with a margin around the singular set.

    A point is admissible when f evaluates (no domain error, finite) and
    ``|f| > margin``. The default margin is 1e-3 times the box diagonal.
    """

    lower: np.ndarray
    upper: np.ndarray
    margin: float | None = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower/upper must be 1-d of equal length")
        if not np.all(self.lower <= self.upper):
            raise ValueError("box needs lower <= upper componentwise")
        if self.margin is None:
            self.margin = 1e-3 * float(np.linalg.norm(self.upper - self.lower))
        if not self.margin > 0:
            raise ValueError("singular-set margin must be positive")

    @property
    def dim(self):
        return self.lower.size

    def sample(self, rng):
        return self.lower + (self.upper - self.lower) * rng.random(self.dim)

    def admissible(self, cf, p):
        try:
            value = cf.value(p)
        except DomainError:
            return False
        return math.isfinite(value) and abs(value) > self.margin


def sample_stream(seed, index):
    """Independent generator for sample ``index``; schedule-independent."""
    return np.random.default_rng([int(seed), int(index)])


@dataclass
class PlaneSection:
    """2-plane at ``point`` spanned by X = sum a_i e_i, Y = sum b_i e_i."""

    point: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=float)
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        tol = 1e-12
        if abs(self.a @ self.a - 1) > tol or abs(self.b @ self.b - 1) > tol or abs(self.a @ self.b) > tol:
            raise PreconditionError("plane spanners must be orthonormal in the e_i frame")

    @classmethod
    def from_directions(cls, point, u, v, eps=1e-8):
        """Gram-Schmidt two Euclidean directions into frame coefficients.

        Since e_i = f d_i, a Euclidean vector has frame coefficients u/f;
        the common factor drops out on normalization.
        """
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        nu = np.linalg.norm(u)
        if nu < eps:
            raise PreconditionError("degenerate plane: zero first direction")
        a = u / nu
        w = v - (v @ a) * a
        nw = np.linalg.norm(w)
        if nw < eps * max(1.0, np.linalg.norm(v)):
            raise PreconditionError("degenerate plane: directions are parallel")
        b = w / nw
        # second pass keeps orthogonality at the 1e-16 level
        b = b - (b @ a) * a
        b /= np.linalg.norm(b)
        return cls(point, a, b)

    def coordinate_vectors(self, f_value):
        """X, Y as coordinate-basis vectors (components along d/dx_i)."""
        return f_value * self.a, f_value * self.b


@dataclass
class RicciData:
    matrix: np.ndarray
    point: np.ndarray
    normal_normal: float | None = None
    tangential: np.ndarray | None = None


@dataclass
class CurvatureReport:
    samples: int
    seed: int
    min_k: float
    max_k: float
    mean_k: float
    nonnegative_count: int
    rejected: int
    worst: list = field(default_factory=list)

    def to_dict(self):
        return {
            "samples": self.samples,
            "seed": self.seed,
            "min_k": self.min_k,
            "max_k": self.max_k,
            "mean_k": self.mean_k,
            "nonnegative_count": self.nonnegative_count,
            "rejected": self.rejected,
            "worst": self.worst,
        }


# ---------------------------------------------------------------------------
# pointwise curvature


def christoffel_conformal(cf, p):
    """Gamma^k_ij = d_ik psi_j + d_jk psi_i - d_ij psi_k with psi = -ln f."""
    jet = cf.jet(p, 1)
    psi = -jet.grad / jet.value
    n = cf.n
    eye = np.eye(n)
    return (
        np.einsum("ik,j->kij", eye, psi)
        + np.einsum("jk,i->kij", eye, psi)
        - np.einsum("ij,k->kij", eye, psi)
    )


class _SigmaTerms:
    """sigma-derived quantities of G at one point, in coordinate components."""

    def __init__(self, cf, p):
        jet = cf.sigma.jet(p, 2)
        f = cf.value(p)
        gamma = christoffel_conformal(cf, p)
        self.n = cf.n
        self.f = f
        self.ds = jet.grad
        self.hess_h = jet.hess - np.einsum("ljk,l->jk", gamma, jet.grad)
        self.metric = np.eye(cf.n) / f**2
        # G^{jk} = f^2 delta
        self.laplacian = f**2 * np.trace(self.hess_h)
        self.grad_norm2 = f**2 * float(self.ds @ self.ds)


def ricci_coordinates(cf, p):
    """Ricci tensor of G in coordinates.

    Ric_jk = (n-2)[Hess_G(sigma)_jk - sigma_j sigma_k]
             + G_jk [Lap_G sigma + (n-2)|grad_G sigma|^2]
    """
    s = _SigmaTerms(cf, p)
    c = s.n - 2
    ric = c * (s.hess_h - np.outer(s.ds, s.ds)) + s.metric * (s.laplacian + c * s.grad_norm2)
    ric = 0.5 * (ric + ric.T)
    return RicciData(ric, np.asarray(p, dtype=float))


def ricci_normal_normal(cf, xi_euclid, p):
    """Ric(xi, xi) for the G-unit normal xi = f * xi_euclid.

    Lap sigma + (n-2)[Hess sigma(xi, xi) - (xi sigma)^2 + |grad sigma|^2].
    """
    xi_euclid = np.asarray(xi_euclid, dtype=float)
    if abs(np.linalg.norm(xi_euclid) - 1) > 1e-9:
        raise PreconditionError("xi_euclid must be a Euclidean unit vector")
    s = _SigmaTerms(cf, p)
    xi = s.f * xi_euclid
    xi_sigma = float(xi @ s.ds)
    return s.laplacian + (s.n - 2) * (xi @ s.hess_h @ xi - xi_sigma**2 + s.grad_norm2)


def tangential_bracket(cf, shape, p):
    """grad(xi sigma) - (xi sigma) grad sigma + Abar(grad sigma) for M in (R^n, G).

    Components are in the G-orthonormal tangent frame ebar_i = f e_i, where
    e_i are the rows of ``shape.frame`` (Euclidean shape data of M at p).
    With xibar = f xi the barred shape operator in that frame is
    f A + xi(f) Id, and xibar(sigma) = xi(f).
    """
    jet = cf.jet(p, 2)
    f = jet.value
    frame = shape.frame
    xi = shape.normal
    A = shape.A_frame
    m = frame.shape[0]
    xi_f = float(xi @ jet.grad)
    # e_i(xi f) along M, using d_{e_i} xi = -A e_i
    e_xif = frame @ jet.hess @ xi - A @ (frame @ jet.grad)
    grad_xi_sigma = f * e_xif
    grad_sigma = frame @ jet.grad  # ebar_i(sigma) = e_i(f)
    a_bar = f * A + xi_f * np.eye(m)
    return grad_xi_sigma - xi_f * grad_sigma + a_bar @ grad_sigma


def ricci_tangential(cf, shape, p):
    """[Ric(xibar)]^T = (n-2) * :func:`tangential_bracket`, ebar-frame components."""
    return (cf.n - 2) * tangential_bracket(cf, shape, p)


def sectional_curvature(cf, plane):
    """K(P) = sum_ij (a_i a_j + b_i b_j) f f_ij - sum_i f_i^2."""
    jet = cf.jet(plane.point, 2)
    a, b = plane.a, plane.b
    quad = a @ jet.hess @ a + b @ jet.hess @ b
    return float(jet.value * quad - jet.grad @ jet.grad)


# ---------------------------------------------------------------------------
# scanner


def _draw_point(cf, box, rng, max_tries):
    rejected = 0
    for _ in range(max_tries):
        p = box.sample(rng)
        if box.admissible(cf, p):
            try:
                cf.jet(p, 2)
            except DomainError:
                rejected += 1
                continue
            return p, rejected
        rejected += 1
    return None, rejected


def scan_sectional_curvature(cf, box, samples, seed, worst=5, max_tries=100):
    """Sample ``samples`` random plane sections and summarize K.

    Sample i draws from its own stream ``(seed, i)``: a point uniform in
    the box (rejecting the singular margin), then two Gaussian directions
    orthonormalized in the e_i frame (redrawn when degenerate).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if box.dim != cf.n:
        raise ValueError("box dimension must match the ambient dimension")
    ks = []
    records = []
    rejected = 0
    for i in range(samples):
        rng = sample_stream(seed, i)
        p, rej = _draw_point(cf, box, rng, max_tries)
        rejected += rej
        if p is None or rejected > 0.99 * (rejected + i + 1):
            raise RegionExhaustedError(
                f"rejection rate above 99% after {i} accepted samples ({rejected} rejected)"
            )
        while True:
            try:
                plane = PlaneSection.from_directions(p, rng.standard_normal(cf.n), rng.standard_normal(cf.n))
                break
            except PreconditionError:
                continue
        k = sectional_curvature(cf, plane)
        ks.append(k)
        records.append((k, i, plane))
    ks_arr = np.asarray(ks)
    top = sorted(records, key=lambda r: (-r[0], r[1]))[:worst]
    return CurvatureReport(
        samples=samples,
        seed=int(seed),
        min_k=float(ks_arr.min()),
        max_k=float(ks_arr.max()),
        mean_k=math.fsum(ks) / samples,
        nonnegative_count=int(np.sum(ks_arr >= 0)),
        rejected=rejected,
        worst=[
            {"index": i, "point": pl.point.tolist(), "a": pl.a.tolist(), "b": pl.b.tolist(), "k": k}
            for k, i, pl in top
        ],
    )
