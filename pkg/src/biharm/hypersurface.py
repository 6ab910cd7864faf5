"""Codimension-one immersions X: U in R^m -> R^{m+1}.

Both hyperplanes and parametrized patches expose the same chart interface:
``chart_map`` holds n expressions in the chart parameters. Hyperplanes use
an isometric linear chart, so their induced metric is the identity and
every second derivative of X folds to the literal 0, which makes the
shape operator vanish exactly.

Orientation: the Euclidean unit normal xi satisfies
det[X_1, ..., X_m, xi] > 0, except that a hyperplane reports exactly the
normal it was built with (its chart is oriented to match).

Shape conventions: b_ij = X_ij . xi, A = g^{-1} b, H = tr(A)/m. With this
sign, d_{e_i} xi = -A e_i.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import expr as ex
from .errors import DomainError, PreconditionError, RankDeficientError
from .geometry import ScalarField

RANK_TOL = 1e-9


@dataclass
class FirstFundamental:
    g: np.ndarray
    inverse: np.ndarray
    det: float


@dataclass
class ShapeData:
    """Euclidean extrinsic data of the hypersurface at one chart point."""

    u: np.ndarray
    point: np.ndarray
    normal: np.ndarray  # Euclidean unit normal xi
    tangents: np.ndarray  # rows X_i
    metric: FirstFundamental
    b: np.ndarray  # second fundamental form, chart components
    A: np.ndarray  # shape operator A^i_j = g^{ik} b_kj
    frame: np.ndarray  # rows e_a, Euclidean orthonormal tangent frame
    frame_R: np.ndarray  # X_i = sum_a e_a R_ai
    A_frame: np.ndarray  # shape operator in the e_a frame (symmetric)

    @property
    def m(self):
        return self.b.shape[0]

    @property
    def H(self):
        return float(np.trace(self.A)) / self.m

    @property
    def norm2(self):
        """|A|^2 = tr(A A)."""
        return float(np.trace(self.A @ self.A))

    def flipped(self):
        """Same data for the opposite normal xi -> -xi."""
        return replace(self, normal=-self.normal, b=-self.b, A=-self.A, A_frame=-self.A_frame)

    def to_frame(self, chart_vector):
        """Chart components v^i of a tangent vector -> e_a frame components."""
        return self.frame_R @ chart_vector


# ---------------------------------------------------------------------------
# symbolic helpers


def _det(rows):
    """Laplace expansion along the first row (folding constructors)."""
    size = len(rows)
    if size == 1:
        return rows[0][0]
    if size == 2:
        return ex.sub(ex.mul(rows[0][0], rows[1][1]), ex.mul(rows[0][1], rows[1][0]))
    total = ex.ZERO
    for j in range(size):
        entry = rows[0][j]
        if ex.const_value(entry) == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in rows[1:]]
        term = ex.mul(entry, _det(minor))
        total = ex.add(total, term) if j % 2 == 0 else ex.sub(total, term)
    return total


def _dot(u, v):
    total = ex.ZERO
    for a, b in zip(u, v):
        total = ex.add(total, ex.mul(a, b))
    return total


class Hypersurface:
    """Common chart machinery; subclasses provide ``chart_map``."""

    def __init__(self, chart_map, chart):
        self.chart = chart
        self.chart_map = tuple(chart_map)
        self.m = chart.m
        self.n = len(self.chart_map)
        if self.n != self.m + 1:
            raise ValueError("chart map must have m+1 components")
        for e in self.chart_map:
            if ex.parameters(e):
                raise ex.UnboundParameterError(f"unbound parameters in chart map: {ex.parameters(e)}")
        m, n = self.m, self.n
        self.tangent_exprs = [[ex.differentiate(self.chart_map[k], i) for k in range(n)] for i in range(m)]
        self.second_exprs = [
            [[ex.differentiate(self.tangent_exprs[i][k], j) for k in range(n)] for j in range(m)]
            for i in range(m)
        ]
        flat = list(self.chart_map)
        flat += [e for row in self.tangent_exprs for e in row]
        flat += [e for i in range(m) for j in range(m) for e in self.second_exprs[i][j]]
        self._eval = ex.compile_many(flat)[0].joint

    # --- numeric chart data

    def _raw(self, u):
        u = [float(v) for v in u]
        if len(u) != self.m:
            raise ValueError(f"chart point needs {self.m} parameters")
        try:
            vals = np.array(self._eval(u))
        except (OverflowError, ZeroDivisionError, ValueError) as exc:
            raise DomainError(str(exc)) from None
        m, n = self.m, self.n
        point = vals[:n]
        tangents = vals[n:n + m * n].reshape(m, n)
        second = vals[n + m * n:].reshape(m, m, n)
        return point, tangents, second

    def point(self, u):
        return self._raw(u)[0]

    def jacobian(self, u):
        """n x m matrix whose columns are X_i."""
        return self._raw(u)[1].T

    def _check_rank(self, tangents):
        s = np.linalg.svd(tangents, compute_uv=False)
        if s[-1] <= RANK_TOL * max(1.0, s[0]):
            raise RankDeficientError(f"parametrization has rank < {self.m} (singular values {s})")

    def _normal_from_tangents(self, tangents):
        n = self.n
        cols = tangents.T
        normal = np.empty(n)
        for k in range(n):
            mat = np.column_stack([cols, np.eye(n)[:, k]])
            normal[k] = np.linalg.det(mat)
        return normal / np.linalg.norm(normal)

    def unit_normal_at(self, tangents):
        return self._normal_from_tangents(tangents)

    # --- symbolic chart fields

    @property
    def normal_exprs(self):
        """Symbolic Euclidean unit normal (n expressions in the chart)."""
        if not hasattr(self, "_normal_exprs"):
            n = self.n
            rows = [[self.tangent_exprs[i][k] for i in range(self.m)] for k in range(n)]
            cof = []
            for k in range(n):
                minor = rows[:k] + rows[k + 1:]
                d = _det(minor)
                cof.append(d if (k + n - 1) % 2 == 0 else ex.neg(d))
            length = ex.call("sqrt", _dot(cof, cof))
            self._normal_exprs = tuple(ex.div(c, length) for c in cof)
        return self._normal_exprs

    @property
    def mean_curvature_expr(self):
        """Symbolic Euclidean mean curvature H(u)."""
        if not hasattr(self, "_mean_curvature_expr"):
            m = self.m
            xi = self.normal_exprs
            g = [[_dot(self.tangent_exprs[i], self.tangent_exprs[j]) for j in range(m)] for i in range(m)]
            b = [[_dot(self.second_exprs[i][j], xi) for j in range(m)] for i in range(m)]
            det = _det(g)
            total = ex.ZERO
            for i, j in itertools.product(range(m), repeat=2):
                if ex.const_value(b[i][j]) == 0:
                    continue
                # inverse metric entry (i, j) = cofactor(j, i) / det
                minor = [row[:i] + row[i + 1:] for k, row in enumerate(g) if k != j]
                cof = _det(minor) if minor else ex.ONE
                if (i + j) % 2:
                    cof = ex.neg(cof)
                total = ex.add(total, ex.mul(cof, b[i][j]))
            self._mean_curvature_expr = ex.div(total, ex.mul(ex.num(m), det))
        return self._mean_curvature_expr

    def restrict(self, ambient):
        """Compose an ambient expression with the chart map."""
        return ex.substitute(ambient, variables=dict(enumerate(self.chart_map)))

    def default_box(self):
        return None


class AffineHyperplane(Hypersurface):
    """{x : normal . x = offset} with an isometric linear chart.

    An axis-aligned hyperplane ``x_k = c`` uses the remaining ambient
    coordinates as chart parameters (same names), so ``z = c`` is
    charted by ``x1..xm`` exactly.
    """

    def __init__(self, normal, offset, coords=None):
        normal = np.asarray(normal, dtype=float)
        if abs(np.linalg.norm(normal) - 1) > 1e-12:
            raise ValueError("hyperplane normal must be a unit vector")
        self.normal = normal
        self.offset = float(offset)
        n = normal.size
        m = n - 1
        coords = coords or ex.CoordinateSystem(m)
        axis = np.flatnonzero(np.abs(normal) == 1.0)
        if axis.size == 1:
            k = int(axis[0])
            others = [i for i in range(n) if i != k]
            tangents = np.eye(n)[others]
            names = tuple(coords.names[i] for i in others)
        else:
            q, _ = np.linalg.qr(np.column_stack([normal, np.eye(n)]))
            tangents = q[:, 1:n].T.copy()
            names = ()
        if np.linalg.det(np.vstack([tangents, normal])) < 0:
            tangents[0] = -tangents[0]
            names = ()
        self.axis = int(axis[0]) if axis.size == 1 else None
        self.chart_tangents = tangents
        chart = ex.ChartCoordinates(m, names)
        u = [ex.Var(i, chart.names[i]) for i in range(m)]
        chart_map = []
        for k in range(n):
            e = ex.num(self.offset * normal[k])
            for i in range(m):
                e = ex.add(e, ex.mul(ex.num(tangents[i, k]), u[i]))
            chart_map.append(e)
        super().__init__(chart_map, chart)
        self._normal_exprs = tuple(ex.num(v) for v in normal)

    @classmethod
    def axis_aligned(cls, m, c, axis=None):
        """The hyperplane {x_axis = c}; ``axis`` defaults to z."""
        n = m + 1
        axis = n - 1 if axis is None else axis
        return cls(np.eye(n)[axis], c)

    @classmethod
    def graph(cls, a, c):
        """The slanted hyperplane z = sum a_i x_i + c."""
        a = np.asarray(a, dtype=float)
        coeffs = np.append(a, -1.0)
        norm = np.linalg.norm(coeffs)
        return cls(coeffs / norm, -c / norm)

    def to_chart(self, p):
        """Chart parameters of an ambient point (projected onto the plane)."""
        p = np.asarray(p, dtype=float)
        return self.chart_tangents @ (p - self.offset * self.normal)

    def unit_normal_at(self, tangents):
        return self.normal.copy()


class ParametrizedPatch(Hypersurface):
    """X(u) given by n expressions in the chart parameters u1..um."""

    def __init__(self, chart_map, chart, box=None):
        self.box = box
        super().__init__(chart_map, chart)

    @classmethod
    def from_text(cls, texts, chart=None, box=None, binding=None):
        chart = chart or ex.ChartCoordinates(len(texts) - 1)
        exprs = [ex.parse(t, chart) for t in texts]
        if binding:
            exprs = [ex.bind(e, binding) for e in exprs]
        return cls(exprs, chart, box)

    def default_box(self):
        return self.box


# ---------------------------------------------------------------------------
# operations


def induced_metric(hs, u):
    _, tangents, _ = hs._raw(u)
    hs._check_rank(tangents)
    g = tangents @ tangents.T
    return FirstFundamental(g, np.linalg.inv(g), float(np.linalg.det(g)))


def unit_normal(hs, u):
    _, tangents, _ = hs._raw(u)
    hs._check_rank(tangents)
    return hs.unit_normal_at(tangents)


def _frame(tangents):
    q, r = np.linalg.qr(tangents.T)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    r = signs[:, None] * r
    return q.T, r


def shape_operator(hs, u):
    point, tangents, second = hs._raw(u)
    hs._check_rank(tangents)
    xi = hs.unit_normal_at(tangents)
    g = tangents @ tangents.T
    g_inv = np.linalg.inv(g)
    b = second @ xi
    b = 0.5 * (b + b.T)
    A = g_inv @ b
    frame, R = _frame(tangents)
    R_inv = np.linalg.inv(R)
    A_frame = R_inv.T @ b @ R_inv
    A_frame = 0.5 * (A_frame + A_frame.T)
    return ShapeData(
        u=np.asarray(u, dtype=float), point=point, normal=xi, tangents=tangents,
        metric=FirstFundamental(g, g_inv, float(np.linalg.det(g))),
        b=b, A=A, frame=frame, frame_R=R, A_frame=A_frame,
    )


def conformal_mean_curvature(cf, shape, p=None):
    """Mean curvature in the metric f^{-2} delta: f H + xi(f)."""
    p = shape.point if p is None else p
    jet = cf.jet(p, 1)
    return jet.value * shape.H + float(shape.normal @ jet.grad)


def conformal_shape_norm(cf, shape, p=None):
    """|A|^2 in the metric f^{-2} delta: f^2|A|^2 + 2 m f xi(f) H + m xi(f)^2."""
    p = shape.point if p is None else p
    jet = cf.jet(p, 1)
    f = jet.value
    xi_f = float(shape.normal @ jet.grad)
    m = shape.m
    return f**2 * shape.norm2 + 2 * m * f * xi_f * shape.H + m * xi_f**2


def conformal_shape_frame(cf, shape, p=None):
    """Barred shape operator in the frame f e_a: f A + xi(f) Id."""
    p = shape.point if p is None else p
    jet = cf.jet(p, 1)
    return jet.value * shape.A_frame + float(shape.normal @ jet.grad) * np.eye(shape.m)


# --- chart calculus


def metric_derivative(tangents, second):
    """d_k g_ij = X_ik . X_j + X_i . X_jk, indexed [k, i, j]."""
    t = np.einsum("ikn,jn->kij", second, tangents)
    return t + t.transpose(0, 2, 1)


def christoffel_chart(g_inv, dg):
    """Gamma^k_ij of a chart metric from its derivatives dg[l, i, j] = d_l g_ij."""
    lowered = 0.5 * (
        np.einsum("ijl->ijl", dg) + np.einsum("jil->ijl", dg) - np.einsum("lij->ijl", dg)
    )
    return np.einsum("kl,ijl->kij", g_inv, lowered)


def chart_laplacian(grad_u, hess_u, g_inv, gamma):
    """g^{ij}(S_ij - Gamma^k_ij S_k)."""
    return float(np.einsum("ij,ij->", g_inv, hess_u - np.einsum("kij,k->ij", gamma, grad_u)))


def _scalar_jet(s, hs, u, kind):
    if kind == "ambient":
        point, tangents, second = hs._raw(u)
        jet = s.jet(point, 2) if isinstance(s, ScalarField) else ScalarField(s, hs.n).jet(point, 2)
        grad_u = tangents @ jet.grad
        hess_u = tangents @ jet.hess @ tangents.T + second @ jet.grad
        return jet.value, grad_u, hess_u
    if kind == "chart":
        field = s if isinstance(s, ScalarField) else ScalarField(s, hs.m)
        jet = field.jet(u, 2)
        return jet.value, jet.grad, jet.hess
    raise ValueError("kind must be 'ambient' or 'chart'")


def tangent_gradient(s, hs, u, kind="ambient"):
    """grad_g s in the chart tangent basis (components v^i, sum v^i X_i)."""
    _, tangents, _ = hs._raw(u)
    hs._check_rank(tangents)
    _, grad_u, _ = _scalar_jet(s, hs, u, kind)
    g = tangents @ tangents.T
    return np.linalg.solve(g, grad_u)


def laplace_beltrami(s, hs, u, kind="ambient"):
    """Delta_g s = g^{ij}(d_i d_j S - Gamma(g)^k_ij d_k S), S = s o X."""
    _, tangents, second = hs._raw(u)
    hs._check_rank(tangents)
    _, grad_u, hess_u = _scalar_jet(s, hs, u, kind)
    g = tangents @ tangents.T
    g_inv = np.linalg.inv(g)
    gamma = christoffel_chart(g_inv, metric_derivative(tangents, second))
    return chart_laplacian(grad_u, hess_u, g_inv, gamma)


# ---------------------------------------------------------------------------
# chart fields tied to a conformal factor


class ConformalSurface:
    """Chart-level fields of a hypersurface seen in the metric f^{-2} delta.

    Holds symbolic chart expressions for f o X, xi(f) (the Euclidean
    normal derivative), f xi(f), the Euclidean mean curvature H and the
    barred mean curvature Hbar = f H + xi(f), each compiled with partials
    up to second order in the chart.
    """

    def __init__(self, cf, hs):
        if cf.n != hs.n:
            raise ValueError("conformal factor and hypersurface live in different dimensions")
        self.cf = cf
        self.hs = hs
        f_chart = hs.restrict(cf.expression)
        xi = hs.normal_exprs
        grad_chart = [hs.restrict(cf.partial_expr((k,))) for k in range(hs.n)]
        xi_f = ex.ZERO
        for k in range(hs.n):
            xi_f = ex.add(xi_f, ex.mul(xi[k], grad_chart[k]))
        self.f_expr = f_chart
        self.xi_f_expr = xi_f
        self.f_xi_f_expr = ex.mul(f_chart, xi_f)
        self.H_expr = hs.mean_curvature_expr
        self.f_H_expr = ex.mul(f_chart, self.H_expr)
        self.hbar_expr = ex.add(self.f_H_expr, xi_f)
        m = hs.m
        self.f = ScalarField(self.f_expr, m)
        self.xi_f = ScalarField(self.xi_f_expr, m)
        self.f_xi_f = ScalarField(self.f_xi_f_expr, m)
        self.H = ScalarField(self.H_expr, m)
        self.f_H = ScalarField(self.f_H_expr, m)
        self.hbar = ScalarField(self.hbar_expr, m)


@lru_cache(maxsize=128)
def conformal_surface(cf, hs):
    return ConformalSurface(cf, hs)


def require_minimal(shape, tol=1e-9):
    if abs(shape.H) > tol:
        raise PreconditionError(f"base hypersurface is not minimal here (H = {shape.H:.3e})")
