"""Shared generators: hypothesis strategies and a seeded conformal-factor generator."""

import numpy as np
from hypothesis import strategies as st

from biharm import expr as ex

COORDS3 = ex.CoordinateSystem(3)
PARAM_NAMES = ("A", "B", "t", "k2")


def _leaves(coords):
    return st.one_of(
        st.floats(min_value=0, max_value=1e12, allow_nan=False, allow_infinity=False).map(ex.Num),
        st.integers(min_value=0, max_value=99).map(lambda v: ex.Num(float(v))),
        st.sampled_from(PARAM_NAMES).map(ex.Param),
        st.integers(min_value=0, max_value=coords.n - 1).map(lambda i: ex.Var(i, coords.names[i])),
    )


def expressions(coords=COORDS3, max_leaves=12):
    """Arbitrary well-formed trees (not necessarily evaluable)."""
    return st.recursive(
        _leaves(coords),
        lambda kids: st.one_of(
            st.builds(ex.BinOp, st.sampled_from("+-*/^"), kids, kids),
            st.builds(ex.Neg, kids),
            st.builds(ex.Call, st.sampled_from(sorted(ex.FUNCTIONS)), kids),
        ),
        max_leaves=max_leaves,
    )


def _smooth_leaves(coords):
    return st.one_of(
        st.integers(min_value=0, max_value=coords.n - 1).map(lambda i: ex.Var(i, coords.names[i])),
        st.sampled_from([0.5, 1.0, 2.0, 3.0]).map(ex.Num),
    )


def _positive(u):
    """1 + u^2: positive and smooth."""
    return ex.BinOp("+", ex.Num(1.0), ex.BinOp("^", u, ex.Num(2.0)))


def smooth_expressions(coords=COORDS3, max_leaves=6):
    """Trees that evaluate (and differentiate three times) on all of R^n."""
    return st.recursive(
        _smooth_leaves(coords),
        lambda kids: st.one_of(
            st.builds(ex.BinOp, st.sampled_from("+-*"), kids, kids),
            st.builds(ex.Neg, kids),
            st.builds(lambda u: ex.Call("sin", u), kids),
            st.builds(lambda u: ex.Call("cos", u), kids),
            st.builds(lambda u: ex.Call("exp", ex.Call("sin", u)), kids),
            st.builds(lambda u: ex.Call("sqrt", _positive(u)), kids),
            st.builds(lambda u: ex.Call("ln", _positive(u)), kids),
            st.builds(lambda a, u: ex.BinOp("/", a, _positive(u)), kids, kids),
            st.builds(lambda u, t: ex.BinOp("^", _positive(u), ex.Num(t)), kids, st.sampled_from([0.5, 1.5, 2.5])),
        ),
        max_leaves=max_leaves,
    )


def points(n, lo=0.0, hi=1.0):
    return st.lists(st.floats(min_value=lo, max_value=hi), min_size=n, max_size=n).map(np.array)


# ---------------------------------------------------------------------------
# fixed generator of positive conformal factors on [0, 1]^n


def _lin(rng, names, scale):
    coeffs = rng.uniform(-scale, scale, len(names))
    return "+".join(f"({c:.6f})*{v}" for c, v in zip(coeffs, names)), float(np.abs(coeffs).sum())


def random_factor_text(rng, n):
    """Text of a factor positive on [0,1]^n with O(1) derivatives."""
    names = ex.CoordinateSystem(n - 1).names
    kind = int(rng.integers(0, 5))
    if kind == 0:
        lin, total = _lin(rng, names, 1.0)
        return f"({lin}+{3 + total:.6f})^({rng.uniform(-1.5, 1.5):.6f})"
    if kind == 1:
        lin, _ = _lin(rng, names, 0.5)
        return f"exp({lin})"
    if kind == 2:
        lin, _ = _lin(rng, names, 1.5)
        return f"2+({rng.uniform(-1, 1):.6f})*sin({lin})"
    if kind == 3:
        a = rng.uniform(0.5, 2)
        return f"(1+({a:.6f}*{names[0]})^2)^({rng.uniform(-1, 1):.6f})*({rng.uniform(1, 3):.6f}+{names[-1]})"
    lin, total = _lin(rng, names[:-1], 0.5)
    return f"1/({rng.uniform(0.5, 2):.6f}*{names[-1]}+{1 + total:.6f})+({lin}+{total + 0.5:.6f})^2"
