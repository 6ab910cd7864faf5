"""Acceptance criteria, one test per criterion.

Each test records a short detail line; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from biharm import biharmonic as bh
from biharm import expr as ex
from biharm import families as fm
from biharm import oracle
from biharm.geometry import (
    ConformalFactor,
    DomainBox,
    PlaneSection,
    christoffel_conformal,
    ricci_coordinates,
    ricci_normal_normal,
    scan_sectional_curvature,
    sectional_curvature,
)
from biharm.hypersurface import (
    AffineHyperplane,
    ParametrizedPatch,
    conformal_mean_curvature,
    conformal_shape_norm,
    shape_operator,
)

from strategies import expressions, random_factor_text

CATENOID = ["(exp(u1)+exp(-u1))/2*cos(u2)", "(exp(u1)+exp(-u1))/2*sin(u2)", "u1"]
TOL = bh.SYMBOLIC


def factor(text, m):
    return ConformalFactor.from_text(text, ex.CoordinateSystem(m))


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / (1 + np.max(np.abs(b))))


def compiled_map(hs):
    joint = ex.compile_many(list(hs.chart_map))[0].joint
    return lambda u: np.array(joint(list(u)))


def test_c01_power_family(record_property):
    """criterion 1: power family roots vanish, non-root does not"""
    pts = np.random.default_rng(2024).uniform(0, 1, (200, 4))
    worst = {}
    for t in (-1, 0.25):
        cf = fm.make_family_factor(fm.PowerAffine(1, 2, 3, t))
        worst[t] = max(bh.residual_axis_hyperplane_m4(cf, 2.0, u).relative(TOL) for u in pts)
    cf = fm.make_family_factor(fm.PowerAffine(1, 2, 3, 0.5))
    loud = np.mean([bh.residual_axis_hyperplane_m4(cf, 2.0, u).relative(TOL) >= 1e-3 for u in pts])
    record_property("detail", f"max rel t=-1 {worst[-1]:.2e}, t=0.25 {worst[0.25]:.2e}; t=0.5 loud at {loud:.0%}")
    assert worst[-1] <= 1e-9 and worst[0.25] <= 1e-9
    assert loud >= 0.9


def test_c02_exponent_solver(record_property):
    """criterion 2: exponent solver closed form and Vieta identities"""
    assert fm.solve_power_exponent_quadratic(1, 2) == [-1.0, 0.25]
    rng = np.random.default_rng(7)
    worst = 0.0
    for A, B in rng.uniform(-5, 5, (100, 2)):
        lead = 4 * A * A + B * B
        lo, hi = fm.solve_power_exponent_quadratic(A, B)
        worst = max(worst, abs(lo + hi + (2 * A * A + B * B) / lead), abs(lo * hi + 2 * A * A / lead))
    record_property("detail", f"roots(1,2) = [-1, 0.25]; max Vieta error {worst:.1e}")
    assert worst <= 1e-12


def test_c03_negative_curvature(record_property):
    """criterion 3: negative sectional curvature and hyperbolic sanity run"""
    # on [0,1]^5 the affine form is >= 3, i.e. distance >= 3/sqrt(8) > 0.5 from its zero set
    box = DomainBox(np.zeros(5), np.ones(5))
    maxima = {}
    for t in (0.2, 0.5, 0.8):
        rep = scan_sectional_curvature(fm.make_family_factor(fm.PowerAffine(1, 2, 3, t)), box, 1000, seed=3)
        maxima[t] = rep.max_k
    m = 4
    hyp = factor("z", m)
    hbox = DomainBox(np.append(np.zeros(m), 0.5), np.append(np.ones(m), 3.0))
    scan = scan_sectional_curvature(hyp, hbox, 1000, seed=3)
    k_err = max(abs(scan.min_k + 1), abs(scan.max_k + 1))
    rng = np.random.default_rng(3)
    ric_err = 0.0
    for _ in range(200):
        p = hbox.sample(rng)
        xi = rng.standard_normal(m + 1)
        ric_err = max(ric_err, abs(ricci_normal_normal(hyp, xi / np.linalg.norm(xi), p) + m))
    record_property(
        "detail",
        "max K " + ", ".join(f"t={t}: {k:.3f}" for t, k in maxima.items())
        + f"; hyperbolic |K+1| {k_err:.1e}, |Ric+m| {ric_err:.1e}",
    )
    assert all(k < 0 for k in maxima.values())
    assert k_err <= 1e-12 and ric_err <= 1e-9


def test_c04_inverse_linear(record_property):
    """criterion 4: inverse-linear family on horizontal hyperplanes"""
    worst_rel = worst_h = 0.0
    verdicts = set()
    for m, c in itertools.product((2, 3, 4, 5), (0.0, 1.0, 5.0)):
        rep = fm.verify_family(fm.InverseLinear(1, 2, m=m), samples=50, offset=c)
        cls = rep.classification
        worst_rel = max(worst_rel, cls.max_relative_residual)
        worst_h = max(worst_h, rep.checks[0].detail["max_abs_error"])
        verdicts.add(cls.verdict.value)
    record_property("detail", f"max rel {worst_rel:.1e}, max |Hbar| error {worst_h:.1e}, verdicts {sorted(verdicts)}")
    assert worst_rel <= 1e-9 and worst_h <= 1e-12
    assert verdicts == {"ProperBiharmonic"}


def test_c05_slanted_equation(record_property):
    """criterion 5: slanted-hyperplane equation examples"""
    C4 = ex.CoordinateSystem(4)
    rng = np.random.default_rng(5)
    zs = rng.uniform(-1, 2, 50)
    inv = ex.parse("1/(1*z+2)", C4)
    flat = max(abs(bh.residual_slanted_fz(inv, np.zeros(4), z).normal) for z in zs)
    f = ex.parse("1/(z+2)", C4)
    any_a = max(abs(bh.residual_slanted_fz(f, rng.normal(size=4), z).normal) for z in zs)
    e = ex.parse("exp(z)", C4)
    exp_rel = max(
        abs(bh.residual_slanted_fz(e, [1, 0, 0, 0], z).normal + 8 * np.exp(3 * z)) / (8 * np.exp(3 * z)) for z in zs
    )
    record_property("detail", f"a=0 {flat:.1e}, any a {any_a:.1e}, exp rel {exp_rel:.1e}")
    assert flat <= 1e-12 and any_a <= 1e-12 and exp_rel <= 1e-9


def test_c06_product_family(record_property):
    """criterion 6: product family and its factor ODEs"""
    rep = fm.verify_family(fm.ProductExample(1, 2, 3, 4), samples=200)
    by = {c.name: c for c in rep.checks}
    hyperplane_m4 = by["hyperplane_m4_residual"].max_relative_residual
    p_ode, q_ode = by["p_ode"].detail["max_abs"], by["q_ode"].detail["max_abs"]
    record_property("detail", f"hyperplane_m4 max rel {hyperplane_m4:.1e}, ODEs {p_ode:.1e} / {q_ode:.1e}")
    assert hyperplane_m4 <= 1e-9 and p_ode <= 1e-12 and q_ode <= 1e-12
    assert rep.passed


def _laws_error(cf, hs, us):
    X = compiled_map(hs)
    f_fn = ex.compile_expr(cf.expression)
    worst = 0.0
    for u in us:
        s = shape_operator(hs, u)
        h, n2 = oracle.barred_shape_bruteforce(f_fn, X, u)
        worst = max(worst, rel_err(conformal_mean_curvature(cf, s), h), rel_err(conformal_shape_norm(cf, s), n2))
    return worst


def test_c07_transformation_laws(record_property):
    """criterion 7: mean curvature and shape norm laws against the oracle"""
    rng = np.random.default_rng(11)
    errs = []
    for m in (2, 3, 4):
        cf = factor("1/(z+2)", m)
        nu = rng.standard_normal(m + 1)
        for hs in (AffineHyperplane.axis_aligned(m, 0.5), AffineHyperplane(nu / np.linalg.norm(nu), 0.2)):
            errs.append(_laws_error(cf, hs, rng.uniform(-0.5, 0.5, (100, m))))
    plane_err = max(errs)
    cat_err = _laws_error(factor("1/(z+5)", 2), ParametrizedPatch.from_text(CATENOID), rng.uniform(-1, 1, (100, 2)))
    record_property("detail", f"hyperplanes {plane_err:.1e}, catenoid {cat_err:.1e}")
    assert plane_err <= 1e-6 and cat_err <= 1e-6


def test_c08_oracle_equivalence(record_property):
    """criterion 8: symbolic geometry against finite-difference brute force"""
    rng = np.random.default_rng(8)
    worst = dict(partials=0.0, christoffel=0.0, ricci=0.0, sectional=0.0)
    for k in range(100):
        n = 3 + k % 3
        cf = factor(random_factor_text(rng, n), n - 1)
        p = rng.uniform(0.1, 0.9, n)
        jet = cf.jet(p, 3)
        fd = oracle.all_partials(ex.compile_expr(cf.expression), p, 3)
        for idx, v in fd.items():
            sym = {1: jet.grad, 2: jet.hess, 3: jet.third}[len(idx)][idx]
            worst["partials"] = max(worst["partials"], rel_err(sym, v))
        worst["christoffel"] = max(
            worst["christoffel"], rel_err(christoffel_conformal(cf, p), oracle.christoffel_bruteforce(cf.metric, p))
        )
        worst["ricci"] = max(
            worst["ricci"], rel_err(ricci_coordinates(cf, p).matrix, oracle.ricci_bruteforce(cf.metric, p))
        )
        plane = PlaneSection.from_directions(p, rng.standard_normal(n), rng.standard_normal(n))
        X, Y = plane.coordinate_vectors(cf.value(p))
        worst["sectional"] = max(
            worst["sectional"], rel_err(sectional_curvature(cf, plane), oracle.sectional_bruteforce(cf.metric, p, X, Y))
        )
    record_property("detail", ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert max(worst.values()) <= 1e-5


def test_c09_cross_equation_consistency(record_property):
    """criterion 9: zero/nonzero agreement of the three hyperplane equations"""
    grid = [0.5, 1.0, 1.5, 2.0, 2.5], [0.5, 1.0, 2.0, 3.0, 4.0]
    hs = AffineHyperplane.axis_aligned(4, 2.0)
    rng = np.random.default_rng(9)
    pts = rng.uniform(0, 1, (20, 4))
    checked = disagree = zeros = 0
    for A, B in itertools.product(*grid):
        for t in fm.solve_power_exponent_quadratic(A, B) + [0.5]:
            cf = fm.make_family_factor(fm.PowerAffine(A, B, 3, t))
            for u in pts:
                s = {
                    bh.residual_minimal_base(cf, hs, u).is_zero(TOL),
                    bh.residual_conformal(cf, hs, u).is_zero(TOL),
                    bh.residual_axis_hyperplane_m4(cf, 2.0, u).is_zero(TOL),
                }
                checked += 1
                disagree += len(s) > 1
                zeros += s == {True}
    record_property("detail", f"{checked} points, {zeros} zero, {disagree} disagreements")
    assert disagree == 0
    assert zeros == 2 * 25 * len(pts)


def test_c10_trichotomy(record_property):
    """criterion 10: hyperplane case analysis with residual confirmation"""
    box = DomainBox(np.zeros(5), np.ones(5))
    # (1) f_z = 0: the hyperplane is minimal in the conformal metric
    r1 = bh.hyperplane_case_analysis(factor("x1+1", 3), 3, 2.0)
    c1 = bh.classify(factor("x1+1", 3), AffineHyperplane.axis_aligned(3, 2.0), DomainBox(np.zeros(4), np.ones(4)), 50, 0)
    # (2) m = 4 scalar equation
    power = fm.make_family_factor(fm.PowerAffine(1, 2, 3, -1))
    r2 = bh.hyperplane_case_analysis(power, 4, 2.0)
    c2 = bh.classify(power, AffineHyperplane.axis_aligned(4, 2.0), box, 50, 0)
    # (3) separable with constant nonzero Hbar
    inv = factor("1/(z+2)", 5)
    r3 = bh.hyperplane_case_analysis(inv, 5, 2.0)
    c3 = bh.classify(inv, AffineHyperplane.axis_aligned(5, 2.0), DomainBox(np.zeros(6), np.ones(6)), 50, 0)
    record_property(
        "detail",
        f"cases {r1.cases} {r2.cases} {r3.cases}; verdicts {c1.verdict.value}, {c2.verdict.value}, {c3.verdict.value}",
    )
    assert r1.cases == [1] and c1.verdict is bh.Verdict.MINIMAL
    assert r2.cases == [2] and r2.max_rel_m4 <= 1e-9 and c2.verdict is bh.Verdict.PROPER_BIHARMONIC
    assert r3.cases == [3] and r3.max_rel_separable <= 1e-9 and c3.verdict is bh.Verdict.PROPER_BIHARMONIC


# --- criterion 11: property suite


def _sphere(R, a, b):
    return ParametrizedPatch.from_text(
        [f"{a}+{R}*cos(u1)*cos(u2)", f"{b}+{R}*cos(u1)*sin(u2)", f"{R}*sin(u1)"]
    )


def _minimal_cases(rng):
    """Pairs (factor, hypersurface, chart point) with Hbar = 0."""
    for k in range(500):
        if k % 2:
            # totally geodesic hemispheres of the half-space model, scaled
            R, a, b = rng.uniform(0.5, 3), rng.uniform(-1, 1), rng.uniform(-1, 1)
            yield factor(f"{rng.uniform(0.2, 5):.6f}*z", 2), _sphere(R, a, b), rng.uniform([0.1, -3], [1.4, 3])
        else:
            # vertical hyperplanes x1 = c with a factor independent of x1
            m = 2 + k % 3
            text = random_factor_text(rng, m + 1)
            c = rng.uniform(0, 1)
            e = ex.substitute(ex.parse(text, ex.CoordinateSystem(m)), variables={0: ex.num(c)})
            cf = ConformalFactor(e, ex.CoordinateSystem(m))
            hs = AffineHyperplane(np.eye(m + 1)[0], c)
            yield cf, hs, hs.to_chart(np.append(c, rng.uniform(0, 1, m)))


def test_c11a_minimal_implies_biharmonic(record_property):
    """criterion 11a: minimal implies biharmonic"""
    rng = np.random.default_rng(110)
    n = nontrivial = 0
    for cf, hs, u in _minimal_cases(rng):
        res, hbar = bh.evaluate_at(cf, hs, u)
        assert abs(hbar) <= TOL.tol_h
        assert res.is_zero(TOL)
        n += 1
        nontrivial += res.scale > TOL.floor
    record_property("detail", f"{n} cases, {nontrivial} with nonzero term scale")
    assert n >= 500


def test_c11b_normal_flip_invariance(record_property):
    """criterion 11b: normal-flip invariance"""
    rng = np.random.default_rng(111)
    n = 0
    worst = 0.0
    for k in range(100):
        m = 2 + k % 3
        cf = factor(random_factor_text(rng, m + 1), m)
        nu = rng.standard_normal(m + 1)
        nu /= np.linalg.norm(nu)
        for p0 in rng.uniform(0.2, 0.8, (5, m + 1)):
            hs, flip = AffineHyperplane(nu, nu @ p0), AffineHyperplane(-nu, -nu @ p0)
            u, v = hs.to_chart(p0), flip.to_chart(p0)
            a, b = bh.residual_conformal(cf, hs, u), bh.residual_conformal(cf, flip, v)
            sa, sb = shape_operator(hs, u), shape_operator(flip, v)
            assert a.is_zero(TOL) == b.is_zero(TOL)
            va = np.append(a.normal * sa.normal, a.tangential @ sa.frame)
            vb = np.append(b.normal * sb.normal, b.tangential @ sb.frame)
            worst = max(worst, float(np.max(np.abs(va - vb))) / (1 + a.scale))
            n += 1
    record_property("detail", f"{n} cases, max difference {worst:.1e}")
    assert n >= 500 and worst <= 1e-9


def test_c11c_scaling_invariance(record_property):
    """criterion 11c: parameter-scaling classification invariance"""
    rng = np.random.default_rng(112)
    hs = AffineHyperplane.axis_aligned(4, 2.0)
    n = zeros = 0
    for _ in range(100):
        A, B = rng.uniform(0.3, 3, 2)
        t = rng.choice(fm.solve_power_exponent_quadratic(A, B) + [rng.uniform(-0.9, 1.2)])
        cf = fm.make_family_factor(fm.PowerAffine(A, B, 3, float(t)))
        for u in rng.uniform(0, 1, (5, 4)):
            base, hb = bh.evaluate_at(cf, hs, u)
            for k in (0.5, 2.0):
                res, hk = bh.evaluate_at(cf.scaled(k), hs, u)
                assert res.is_zero(TOL) == base.is_zero(TOL)
                assert (abs(hk) <= TOL.tol_h) == (abs(hb) <= TOL.tol_h)
                if base.scale > TOL.floor:
                    # the pure ratio |r| / scale is homothety invariant
                    ratio = abs(res.normal) / res.normal_scale
                    assert ratio == pytest.approx(abs(base.normal) / base.normal_scale, rel=1e-6, abs=1e-13)
            n += 1
            zeros += base.is_zero(TOL)
    record_property("detail", f"{n} cases x 2 factors, {zeros} biharmonic")
    assert n >= 500


@settings(max_examples=500)
@given(expressions())
def test_c11d_parser_round_trip(e):
    """criterion 11d: parser round-trip on 500 random trees"""
    assert ex.parse(ex.format_expr(e), ex.CoordinateSystem(3)) == e
