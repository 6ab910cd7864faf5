"""Finite-difference brute force for cross-validating the symbolic engine.

Nothing here touches symbolic derivatives: fields are only *evaluated*
(through :func:`biharm.expr.compile_expr` or plain callables) and all
derivatives come from central-difference stencils.

Curvature sign convention: R(X, Y)Z = [nabla_X, nabla_Y]Z - nabla_[X,Y]Z,
stored as ``riem[k, l, i, j]`` with R(d_i, d_j) d_l = R^k_lij d_k.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class FDScheme:
    """Central differences; step h_i = rel_step * max(1, |p_i|).

    Third-order derivatives use ``rel_step3`` and, when ``richardson`` is
    set, combine steps h and 2h to cancel the O(h^2) term.
    """

    rel_step: float = 1e-4
    rel_step3: float = 1e-3
    richardson: bool = True
    max_order: int = 3

    def __post_init__(self):
        if not (self.rel_step > 0 and self.rel_step3 > 0):
            raise ValueError("step sizes must be positive")
        if not 1 <= self.max_order <= 3:
            raise ValueError("max derivative order is 3")

    def step(self, p, i, order):
        base = self.rel_step3 if order >= 3 else self.rel_step
        return base * max(1.0, abs(float(p[i])))


DEFAULT_SCHEME = FDScheme()


def _central(fn, p, indices, steps):
    """Nested central difference along ``indices`` with per-level steps."""
    if not indices:
        return fn(p)
    i, rest = indices[0], indices[1:]
    h = steps[0]
    plus = p.copy()
    minus = p.copy()
    plus[i] += h
    minus[i] -= h
    return (_central(fn, plus, rest, steps[1:]) - _central(fn, minus, rest, steps[1:])) / (2 * h)


def fd_partial(fn, p, indices, scheme=DEFAULT_SCHEME):
    """Estimate d^k fn / dx_{i1} ... dx_{ik} at ``p`` for k = len(indices) <= 3."""
    order = len(indices)
    if order > scheme.max_order:
        raise ValueError(f"derivative order {order} exceeds scheme maximum")
    p = np.asarray(p, dtype=float)

    def safe(x):
        try:
            return fn(x)
        except DomainError as exc:
            raise DomainError(f"stencil left the domain: {exc}") from None

    steps = [scheme.step(p, i, order) for i in indices]
    coarse = _central(safe, p, list(indices), steps)
    if not (scheme.richardson and order >= 3):
        return coarse
    wide = _central(safe, p, list(indices), [2 * h for h in steps])
    return (4 * coarse - wide) / 3


def fd_gradient(fn, p, scheme=DEFAULT_SCHEME):
    return np.array([fd_partial(fn, p, (i,), scheme) for i in range(len(p))])


def fd_hessian(fn, p, scheme=DEFAULT_SCHEME):
    n = len(p)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = fd_partial(fn, p, (i, j), scheme)
    return out


def _metric_derivatives(metric, p, scheme):
    """G, dG[l, i, j] = d_l G_ij and ddG[l, s, i, j] by central differences."""
    p = np.asarray(p, dtype=float)
    n = p.size
    G = np.asarray(metric(p), dtype=float)
    dG = np.empty((n, n, n))
    ddG = np.empty((n, n, n, n))
    for a in range(n):
        dG[a] = fd_partial(lambda x: np.asarray(metric(x), dtype=float), p, (a,), scheme)
        for b in range(a, n):
            ddG[a, b] = ddG[b, a] = fd_partial(lambda x: np.asarray(metric(x), dtype=float), p, (a, b), scheme)
    return G, dG, ddG


def _christoffel_from(G_inv, dG):
    lowered = 0.5 * (
        np.einsum("ijl->ijl", dG) + np.einsum("jil->ijl", dG) - np.einsum("lij->ijl", dG)
    )
    return np.einsum("kl,ijl->kij", G_inv, lowered)


def christoffel_bruteforce(metric, p, scheme=DEFAULT_SCHEME):
    """Gamma^k_ij = 1/2 G^{kl}(d_i G_jl + d_j G_il - d_l G_ij), [k, i, j]."""
    p = np.asarray(p, dtype=float)
    G = np.asarray(metric(p), dtype=float)
    n = p.size
    dG = np.empty((n, n, n))
    for a in range(n):
        dG[a] = fd_partial(lambda x: np.asarray(metric(x), dtype=float), p, (a,), scheme)
    return _christoffel_from(np.linalg.inv(G), dG)


def riemann_bruteforce(metric, p, scheme=DEFAULT_SCHEME):
    """R^k_lij from Gamma and dGamma, both assembled from FD metric partials."""
    G, dG, ddG = _metric_derivatives(metric, p, scheme)
    G_inv = np.linalg.inv(G)
    gamma = _christoffel_from(G_inv, dG)
    # d_s G^{-1} = -G^{-1} (d_s G) G^{-1}
    dG_inv = -np.einsum("ka,sab,bl->skl", G_inv, dG, G_inv)
    low = 0.5 * (
        np.einsum("sijl->sijl", ddG) + np.einsum("sjil->sijl", ddG) - np.einsum("slij->sijl", ddG)
    )
    low0 = 0.5 * (np.einsum("ijl->ijl", dG) + np.einsum("jil->ijl", dG) - np.einsum("lij->ijl", dG))
    # dgamma[s, k, i, j] = d_s Gamma^k_ij
    dgamma = np.einsum("skl,ijl->skij", dG_inv, low0) + np.einsum("kl,sijl->skij", G_inv, low)
    # R^k_lij = d_i Gamma^k_jl - d_j Gamma^k_il + Gamma^k_ip Gamma^p_jl - Gamma^k_jp Gamma^p_il
    riem = (
        np.einsum("ikjl->klij", dgamma)
        - np.einsum("jkil->klij", dgamma)
        + np.einsum("kip,pjl->klij", gamma, gamma)
        - np.einsum("kjp,pil->klij", gamma, gamma)
    )
    return riem, G


def ricci_bruteforce(metric, p, scheme=DEFAULT_SCHEME):
    """Ric_jl = R^k_{l k j} (trace over the first and third slots)."""
    riem, _ = riemann_bruteforce(metric, p, scheme)
    ric = np.einsum("klkj->jl", riem)
    return 0.5 * (ric + ric.T)


def sectional_bruteforce(metric, p, X, Y, scheme=DEFAULT_SCHEME):
    """K(X, Y) = <R(X, Y)Y, X> / (|X|^2 |Y|^2 - <X, Y>^2) for coordinate vectors."""
    riem, G = riemann_bruteforce(metric, p, scheme)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    rxy_y = np.einsum("klij,i,j,l->k", riem, X, Y, Y)
    num = float(X @ G @ rxy_y)
    den = float((X @ G @ X) * (Y @ G @ Y) - (X @ G @ Y) ** 2)
    return num / den


def conformal_metric(f_fn):
    """Metric evaluator G(p) = f(p)^{-2} I from a scalar evaluator."""

    def metric(p):
        f = f_fn(p)
        if not f > 0:
            raise DomainError(f"conformal factor {f} is not positive")
        return np.eye(len(p)) / f**2

    return metric


# ---------------------------------------------------------------------------
# hypersurfaces


def _patch_derivatives(X_fn, u, scheme):
    u = np.asarray(u, dtype=float)
    m = u.size
    J = np.column_stack([fd_partial(X_fn, u, (i,), scheme) for i in range(m)])
    second = np.empty((m, m, J.shape[0]))
    for i in range(m):
        for j in range(i, m):
            second[i, j] = second[j, i] = fd_partial(X_fn, u, (i, j), scheme)
    return J, second


def _normal(J):
    n, _ = J.shape
    normal = np.array([np.linalg.det(np.column_stack([J, np.eye(n)[:, k]])) for k in range(n)])
    return normal / np.linalg.norm(normal)


def shape_bruteforce(X_fn, u, scheme=DEFAULT_SCHEME):
    """(xi, frame rows e_a, d_{e_a} xi rows) from FD derivatives of X only."""
    J, second = _patch_derivatives(X_fn, u, scheme)
    xi = _normal(J)
    g = J.T @ J
    g_inv = np.linalg.inv(g)
    b = second @ xi
    q, r = np.linalg.qr(J)
    signs = np.sign(np.diag(r))
    q = q * signs
    r = signs[:, None] * r
    # Weingarten: d_{X_i} xi = -b_ij g^{jk} X_k
    dxi_chart = -(b @ g_inv) @ J.T  # rows: d_{X_i} xi
    dxi_frame = np.linalg.inv(r).T @ dxi_chart  # rows: d_{e_a} xi
    return xi, q.T, dxi_frame, J, second


def barred_shape_bruteforce(f_fn, X_fn, u, scheme=DEFAULT_SCHEME, route="connection"):
    """(Hbar, |Abar|^2) of the immersion X inside (R^n, f^{-2} delta).

    ``route="connection"`` uses nabla-bar_{ebar_i} xibar = f^2 nabla_{e_i} xi
    - xi(f) ebar_i with ebar_i = f e_i, xibar = f xi. ``route="christoffel"``
    instead builds bbar_ij = G(X_ij + Gamma(X_i, X_j), xibar) from FD
    Christoffel symbols of G and never uses the connection identity.
    """
    u = np.asarray(u, dtype=float)
    xi, frame, dxi_frame, J, second = shape_bruteforce(X_fn, u, scheme)
    p = X_fn(u)
    f = f_fn(p)
    m = frame.shape[0]
    if route == "connection":
        xi_f = float(xi @ fd_gradient(f_fn, p, scheme))
        rows = []
        for a in range(m):
            vec = f**2 * dxi_frame[a] - xi_f * f * frame[a]  # nabla-bar_{ebar_a} xibar
            # ebar_c component of a coordinate vector V: G(V, f e_c) = V . e_c / f
            rows.append(frame @ vec / f)
        abar = -np.array(rows).T  # column a = Abar(ebar_a) components
    elif route == "christoffel":
        gamma = christoffel_bruteforce(conformal_metric(f_fn), p, scheme)
        acc = second + np.einsum("kij,ai,bj->abk", gamma, J.T, J.T)
        xibar = f * xi
        G = np.eye(len(p)) / f**2
        bbar = np.einsum("abk,kl,l->ab", acc, G, xibar)
        gbar = (J.T @ J) / f**2
        abar_chart = np.linalg.solve(gbar, bbar)
        return float(np.trace(abar_chart)) / m, float(np.trace(abar_chart @ abar_chart))
    else:
        raise ValueError(f"unknown route {route!r}")
    return float(np.trace(abar)) / m, float(np.sum(abar * abar))


def laplace_beltrami_bruteforce(S_fn, X_fn, u, scheme=DEFAULT_SCHEME):
    """Delta_g S for a chart function S, g the metric induced by X.

    g(u) comes from FD Jacobians of X; its Christoffel symbols from FD of
    that numeric metric.
    """
    u = np.asarray(u, dtype=float)

    def induced(v):
        J = np.column_stack([fd_partial(X_fn, v, (i,), scheme) for i in range(v.size)])
        return J.T @ J

    g = induced(u)
    g_inv = np.linalg.inv(g)
    coarse = FDScheme(rel_step=1e-3, rel_step3=scheme.rel_step3, richardson=scheme.richardson)
    gamma = christoffel_bruteforce(induced, u, coarse)
    grad = fd_gradient(S_fn, u, scheme)
    hess = fd_hessian(S_fn, u, scheme)
    return float(np.einsum("ij,ij->", g_inv, hess - np.einsum("kij,k->ij", gamma, grad)))


def all_partials(fn, p, order, scheme=DEFAULT_SCHEME):
    """Map from sorted multi-index to FD estimate, for every index up to ``order``."""
    n = len(p)
    out = {}
    for r in range(1, order + 1):
        for idx in itertools.combinations_with_replacement(range(n), r):
            out[idx] = fd_partial(fn, p, idx, scheme)
    return out
