import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biharm import families as fm
from biharm.biharmonic import Verdict, residual_axis_hyperplane_m4
from biharm.errors import PreconditionError

finite = st.floats(-10, 10, allow_nan=False).filter(lambda v: abs(v) > 1e-3)


def test_solver_example():
    assert fm.solve_power_exponent_quadratic(1, 2) == pytest.approx([-1.0, 0.25])


def test_solver_degenerate():
    with pytest.raises(PreconditionError):
        fm.solve_power_exponent_quadratic(0, 0)


@given(finite, finite)
def test_solver_vieta(A, B):
    a2, b2 = A * A, B * B
    lo, hi = fm.solve_power_exponent_quadratic(A, B)
    lead = 4 * a2 + b2
    assert lo + hi == pytest.approx(-(2 * a2 + b2) / lead, abs=1e-12)
    assert lo * hi == pytest.approx(-2 * a2 / lead, abs=1e-12)
    for t in (lo, hi):
        assert abs(lead * t * t + (2 * a2 + b2) * t - 2 * a2) <= 1e-12 * (1 + lead)


@pytest.mark.parametrize(
    "fam, text",
    [
        (fm.PowerAffine(1, 2, 3, -1), "(1*(x1+x2+x3+x4)+2*z+3)^(-1)"),
        (fm.InverseLinear(1, 2), "1/(1*z+2)"),
    ],
)
def test_factor_strings(fam, text):
    assert fam.text() == text
    assert fm.make_family_factor(fam).m == fam.m


def test_custom_requires_bound_parameters():
    with pytest.raises(PreconditionError):
        fm.make_family_factor(fm.Custom("k*z+1", 2))
    cf = fm.make_family_factor(fm.Custom("k*z+1", 2, {"k": 2}))
    assert cf.text == "2*z+1"


@pytest.mark.parametrize("t", [-1, 0.25])
def test_power_roots_verify(t):
    rep = fm.verify_family(fm.PowerAffine(1, 2, 3, t), samples=40)
    assert rep.passed and rep.classification.verdict is Verdict.PROPER_BIHARMONIC


def test_power_nonroot_detected():
    rep = fm.verify_family(fm.PowerAffine(1, 2, 3, 0.5), samples=40, curvature_samples=200)
    assert rep.classification.verdict is Verdict.NOT_BIHARMONIC
    assert rep.passed  # expectation matches
    names = {c.name for c in rep.checks}
    assert {"hyperplane_m4_residual", "negative_sectional_curvature"} <= names
    assert rep.curvature.max_k < 0


@pytest.mark.parametrize("m", [2, 3, 4, 5])
@pytest.mark.parametrize("c", [0.0, 1.0, 5.0])
def test_inverse_linear_verify(m, c):
    rep = fm.verify_family(fm.InverseLinear(1, 2, m=m), samples=20, offset=c)
    assert rep.passed


def test_product_verify():
    rep = fm.verify_family(fm.ProductExample(1, 2, 3, 4), samples=40)
    assert rep.passed
    by = {c.name: c for c in rep.checks}
    assert by["p_ode"].detail["max_abs"] <= 1e-12 and by["q_ode"].detail["max_abs"] <= 1e-12


@pytest.mark.parametrize("a", [(0.5, -0.25, 1.0, 0.0), (0, 0, 0, 0), (2.0, 1.0, -1.0, 3.0)])
def test_slanted_verify(a):
    rep = fm.verify_family(fm.SlantedInverse(1, 2, a), samples=30)
    assert rep.passed


def test_slanted_other_dimension_not_expected():
    rep = fm.verify_family(fm.SlantedInverse(1, 2, (1.0, 0.5, 0.0)), samples=20)
    assert rep.expected is None
    assert rep.classification.verdict is Verdict.NOT_BIHARMONIC


def test_report_serializes():
    d = fm.verify_family(fm.InverseLinear(1, 2, m=3), samples=5).to_dict()
    assert d["passed"] is True and d["family"] == "InverseLinear"


def test_root_gap():
    assert fm.root_gap(1, 2, 0.25) == 0
    assert fm.root_gap(1, 2, 0.5) == pytest.approx(0.25)


@settings(max_examples=25)
@given(st.floats(0.2, 3), st.floats(0.2, 3), st.floats(-0.9, 1.5))
def test_root_consistency(A, B, t):
    # nonzero residual at most points whenever t is away from the roots
    if fm.root_gap(A, B, t) < 0.05 or abs(t) < 0.05:
        return
    cf = fm.make_family_factor(fm.PowerAffine(A, B, 1.0, t))
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, (50, 4))
    nonzero = sum(not residual_axis_hyperplane_m4(cf, 2.0, p).is_zero() for p in pts)
    assert nonzero >= 45
