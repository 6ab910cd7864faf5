"""Command-line driver: JSON config in, deterministic JSON report out.

Exit codes: 0 every check passed, 1 some check failed or was
indeterminate, 2 configuration or expression error, 3 numeric failure
(singular evaluation, exhausted sampling region, rank loss).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

import numpy as np

from . import __version__
from . import biharmonic as bh
from . import expr as ex
from . import families as fm
from . import oracle
from .errors import (
    ConfigError,
    DomainError,
    ExprSyntaxError,
    PreconditionError,
    RankDeficientError,
    RegionExhaustedError,
    UnboundParameterError,
)
from .geometry import ConformalFactor, DomainBox, scan_sectional_curvature
from .hypersurface import (
    AffineHyperplane,
    ParametrizedPatch,
    conformal_mean_curvature,
    conformal_shape_norm,
    shape_operator,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

CONFIG_KEYS = {
    "dimension_m", "parameters", "conformal_factor", "hypersurface", "domain_box",
    "samples", "seed", "checks", "tolerances", "family",
}
CHECKS = (
    "classify", "conformal", "minimal_base", "hyperplane_m4", "slanted",
    "cmc", "umbilical", "cases", "curvature",
)


# ---------------------------------------------------------------------------
# JSON with 17 significant digits


def _num(x):
    x = float(x)
    if not math.isfinite(x):
        return "null"
    if x == int(x) and abs(x) < 1e17:
        return str(int(x))
    return format(x, ".17g")


def dumps(obj, indent=2, _level=0):
    """Deterministic JSON; floats carry 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# config


class RunConfig:
    """Validated configuration; see README for the schema."""

    def __init__(self, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        self.raw = raw
        try:
            self.m = int(raw["dimension_m"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("dimension_m is required and must be an integer") from None
        if self.m < 1:
            raise ConfigError("dimension_m must be >= 1")
        self.parameters = {str(k): float(v) for k, v in raw.get("parameters", {}).items()}
        self.samples = int(raw.get("samples", 200))
        self.seed = int(raw.get("seed", 0))
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        self.checks = list(raw.get("checks", ["classify"]))
        if not self.checks:
            raise ConfigError("checks must be non-empty")
        bad = [c for c in self.checks if c not in CHECKS]
        if bad:
            raise ConfigError(f"unknown checks {bad}; choose from {list(CHECKS)}")
        tol = dict(raw.get("tolerances", {}))
        try:
            self.tolerances = bh.Tolerances(**tol)
        except TypeError as exc:
            raise ConfigError(f"bad tolerances: {exc}") from None
        self.coords = ex.CoordinateSystem(self.m)
        self.family = raw.get("family")
        self.factor_text = raw.get("conformal_factor")
        self.hypersurface_raw = raw.get("hypersurface")
        self.box_raw = raw.get("domain_box")

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls(raw)

    def digest(self):
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def with_overrides(self, args):
        if args.samples is not None:
            if args.samples < 1:
                raise ConfigError("--samples must be >= 1")
            self.samples = args.samples
        if args.seed is not None:
            self.seed = args.seed
        if args.tol_rel is not None or args.tol_abs is not None:
            t = self.tolerances
            self.tolerances = bh.Tolerances(
                eps_abs=t.eps_abs if args.tol_abs is None else args.tol_abs,
                eps_rel=t.eps_rel if args.tol_rel is None else args.tol_rel,
                tol_h=t.tol_h,
                noise_floor=t.noise_floor,
            )
        return self

    # --- built objects

    def factor(self):
        if not self.factor_text:
            raise ConfigError("conformal_factor is required")
        e = ex.parse(self.factor_text, self.coords)
        missing = ex.parameters(e) - set(self.parameters)
        if missing:
            raise UnboundParameterError(f"unbound parameters {sorted(missing)}")
        e = ex.bind(e, self.parameters)
        return ConformalFactor(e, self.coords, text=self.factor_text)

    def hypersurface(self):
        raw = self.hypersurface_raw or {"hyperplane": {"normal": [0] * self.m + [1], "offset": 0}}
        if "hyperplane" in raw:
            h = raw["hyperplane"]
            normal = np.asarray(h.get("normal", [0] * self.m + [1]), dtype=float)
            if normal.size != self.m + 1 or not np.linalg.norm(normal) > 0:
                raise ConfigError("hyperplane normal must be a nonzero vector of length m+1")
            scale = np.linalg.norm(normal)
            return AffineHyperplane(normal / scale, float(h.get("offset", 0)) / scale, self.coords)
        if "patch" in raw:
            p = raw["patch"]
            chart = ex.ChartCoordinates(self.m)
            maps = p.get("map")
            if not isinstance(maps, list) or len(maps) != self.m + 1:
                raise ConfigError("patch.map must list m+1 expressions")
            exprs = [ex.bind(ex.parse(t, chart), self.parameters) for t in maps]
            box = p.get("box")
            if box is None:
                raise ConfigError("patch.box is required")
            return ParametrizedPatch(exprs, chart, _box(box, self.m))
        raise ConfigError("hypersurface must be {'hyperplane': ...} or {'patch': ...}")

    def box(self):
        if self.box_raw is None:
            n = self.m + 1
            return DomainBox(np.zeros(n), np.ones(n))
        return _box(self.box_raw, self.m + 1)

    def sampling_box(self, hs):
        if isinstance(hs, ParametrizedPatch):
            return hs.box
        return self.box()


def _box(raw, dim):
    try:
        box = DomainBox(raw["lower"], raw["upper"], raw.get("margin"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad box: {exc}") from None
    if box.dim != dim:
        raise ConfigError(f"box has dimension {box.dim}, expected {dim}")
    return box


# ---------------------------------------------------------------------------
# checks


def _record(name, equation, residuals, tol, seed):
    zero = [r.is_zero(tol) for r in residuals]
    below = sum(r.scale <= tol.noise_floor for r in residuals)
    status = "pass" if all(zero) else "fail"
    if below > 0.5 * len(residuals) and not all(r.normal == 0 and r.tangential_norm == 0 for r in residuals):
        status = "indeterminate"
    return {
        "name": name,
        "equation": equation,
        "status": status,
        "max_relative_residual": max(r.relative(tol) for r in residuals),
        "scale": max(r.scale for r in residuals),
        "sample_count": len(residuals),
        "seed": seed,
    }


def _slant(hs):
    """a with the plane written as z = a.x + c."""
    nu = hs.normal
    if abs(nu[-1]) < 1e-12:
        raise PreconditionError("hyperplane is vertical; it is not a graph over x")
    return -nu[:-1] / nu[-1]


def _oracle_columns(cf, hs, points, limit=20):
    f_fn = ex.compile_expr(cf.expression)
    x_fns = ex.compile_many(list(hs.chart_map))
    joint = x_fns[0].joint

    def X(u):
        return np.array(joint(list(u)))

    dh = dn = 0.0
    for u in points[:limit]:
        shape = shape_operator(hs, u)
        h_fd, n_fd = oracle.barred_shape_bruteforce(f_fn, X, np.asarray(u, dtype=float))
        h = conformal_mean_curvature(cf, shape)
        n2 = conformal_shape_norm(cf, shape)
        dh = max(dh, abs(h - h_fd) / (1 + abs(h)))
        dn = max(dn, abs(n2 - n_fd) / (1 + abs(n2)))
    return {"oracle_points": min(limit, len(points)), "oracle_hbar_rel": dh, "oracle_norm2_rel": dn}


def run_checks(cfg, use_oracle=False):
    cf = cfg.factor()
    hs = cfg.hypersurface()
    tol = cfg.tolerances
    report = {"checks": []}
    box = cfg.sampling_box(hs)
    needs_points = any(c not in ("curvature", "cases", "classify") for c in cfg.checks) or use_oracle
    points, rejected = [], 0
    if needs_points:
        points, rejected = bh.sample_chart_points(cf, hs, box, cfg.samples, cfg.seed)
    oracle_cols = _oracle_columns(cf, hs, points) if use_oracle else None
    for name in cfg.checks:
        if name == "classify":
            cls = bh.classify(cf, hs, box, cfg.samples, cfg.seed, tol)
            report["classification"] = cls.to_dict()
            ok = cls.verdict in (bh.Verdict.PROPER_BIHARMONIC, bh.Verdict.MINIMAL)
            status = "indeterminate" if cls.verdict is bh.Verdict.INDETERMINATE else ("pass" if ok else "fail")
            rec = {
                "name": name, "equation": "+".join(cls.equations), "status": status,
                "max_relative_residual": cls.max_relative_residual,
                "scale": max(r["scale"] for r in cls.records),
                "sample_count": cls.samples, "seed": cfg.seed, "verdict": cls.verdict.value,
            }
        elif name in ("conformal", "minimal_base"):
            fn = bh.residual_conformal if name == "conformal" else bh.residual_minimal_base
            rec = _record(name, name, [fn(cf, hs, u) for u in points], tol, cfg.seed)
        elif name == "hyperplane_m4":
            if not (isinstance(hs, AffineHyperplane) and hs.axis == cfg.m):
                raise PreconditionError("hyperplane_m4 needs an axis-aligned hyperplane z = c")
            c = hs.offset * hs.normal[-1]
            rec = _record(name, name, [bh.residual_axis_hyperplane_m4(cf, c, hs.point(u)) for u in points],
                          tol, cfg.seed)
        elif name == "slanted":
            if not isinstance(hs, AffineHyperplane):
                raise PreconditionError("slanted needs a hyperplane")
            a = _slant(hs)
            rec = _record(name, name, [bh.residual_slanted_fz(cf.expression, a, hs.point(u)) for u in points],
                          tol, cfg.seed)
        elif name == "cmc":
            rec = _record(name, "cmc", [bh.residual_cmc(cf, hs, u, tol) for u in points], tol, cfg.seed)
        elif name == "umbilical":
            rec = _record(name, "umbilical", [bh.residual_umbilical(cf, hs, u, tol=tol) for u in points], tol, cfg.seed)
        elif name == "cases":
            if not (isinstance(hs, AffineHyperplane) and hs.axis == cfg.m):
                raise PreconditionError("case analysis needs an axis-aligned hyperplane z = c")
            cr = bh.hyperplane_case_analysis(cf, cfg.m, hs.offset * hs.normal[-1], cfg.box(),
                                             cfg.samples, cfg.seed, tol)
            report["cases"] = cr.to_dict()
            rec = {"name": name, "equation": "hyperplane_m4+separable", "status": "pass" if cr.biharmonic else "fail",
                   "max_relative_residual": cr.max_rel_separable, "scale": None,
                   "sample_count": cr.samples, "seed": cfg.seed}
        else:  # curvature
            cr = scan_sectional_curvature(cf, cfg.box(), cfg.samples, cfg.seed)
            report["curvature"] = cr.to_dict()
            rec = {"name": name, "equation": "K", "status": "pass" if cr.max_k < 0 else "fail",
                   "max_relative_residual": None, "scale": None,
                   "sample_count": cr.samples, "seed": cfg.seed}
        if oracle_cols is not None and name != "curvature":
            rec.update(oracle_cols)
        report["checks"].append(rec)
    report["rejected"] = rejected
    return report


# ---------------------------------------------------------------------------
# derive


def _sum(terms):
    out = ex.ZERO
    for t in terms:
        out = ex.add(out, t)
    return out


def derive_hyperplane_m4(f, m):
    """Symbolic left-hand side of the m = 4 hyperplane equation."""
    z = m
    d = ex.differentiate
    fz = d(f, z)
    terms = []
    for i in range(m):
        fi = d(f, i)
        terms += [
            ex.mul(ex.power(f, ex.num(2)), d(d(d(f, i), i), z)),
            ex.neg(ex.mul(ex.num(2), ex.mul(f, ex.mul(fi, d(fi, z))))),
            ex.mul(f, ex.mul(fz, d(fi, i))),
            ex.neg(ex.mul(ex.num(4), ex.mul(fz, ex.power(fi, ex.num(2))))),
        ]
    terms.append(ex.mul(ex.num(4), ex.mul(fz, ex.sub(ex.mul(f, d(fz, z)),
                                                      ex.mul(ex.num(2), ex.power(fz, ex.num(2)))))))
    return ex.simplify(_sum(terms))


def derive_slanted(f, a, z_index):
    s = float(np.dot(a, a))
    d1 = ex.differentiate(f, z_index)
    d2 = ex.differentiate(d1, z_index)
    d3 = ex.differentiate(d2, z_index)
    terms = [
        ex.mul(ex.num(s), ex.mul(ex.power(f, ex.num(2)), d3)),
        ex.mul(ex.num(4 - s), ex.mul(f, ex.mul(d1, d2))),
        ex.neg(ex.mul(ex.num(4 * (2 + s)), ex.power(d1, ex.num(3)))),
    ]
    return ex.simplify(_sum(terms))


def derive(cfg):
    """(equation tag, expression text, sampled values) for inspection."""
    cf = cfg.factor()
    hs = cfg.hypersurface()
    m = cfg.m
    f = cf.expression
    if ex.variables(f) <= {m} and isinstance(hs, AffineHyperplane) and abs(hs.normal[-1]) > 1e-12:
        tag, e = "slanted", derive_slanted(f, _slant(hs), m)
    elif m == 4:
        tag, e = "hyperplane_m4", derive_hyperplane_m4(f, m)
    else:
        raise PreconditionError("derive needs f = f(z) on a graph hyperplane, or m = 4")
    points, _ = bh.sample_chart_points(cf, hs, cfg.sampling_box(hs), min(cfg.samples, 5), cfg.seed)
    fn = ex.compile_expr(e)
    values = [fn(hs.point(u)) for u in points]
    return tag, ex.format_expr(e), values


# ---------------------------------------------------------------------------
# families subcommand

DEFAULT_FAMILIES = (
    fm.PowerAffine(1, 2, 3, -1),
    fm.PowerAffine(1, 2, 3, 0.25),
    fm.InverseLinear(1, 2, m=3),
    fm.ProductExample(1, 2, 3, 4),
    fm.SlantedInverse(1, 2, (0.5, -0.25, 1.0, 0.0)),
)

_FAMILY_KINDS = {
    "PowerAffine": fm.PowerAffine,
    "InverseLinear": fm.InverseLinear,
    "ProductExample": fm.ProductExample,
    "SlantedInverse": fm.SlantedInverse,
    "Custom": fm.Custom,
}


def _family_from(raw):
    raw = dict(raw)
    kind = raw.pop("kind", None)
    offset = raw.pop("offset", None)
    if kind not in _FAMILY_KINDS:
        raise ConfigError(f"family.kind must be one of {sorted(_FAMILY_KINDS)}")
    try:
        return _FAMILY_KINDS[kind](**raw), offset
    except TypeError as exc:
        raise ConfigError(f"bad family parameters: {exc}") from None


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(prog="biharm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, metavar="PATH")
        p.add_argument("--samples", type=int, metavar="N")
        p.add_argument("--seed", type=int, metavar="N")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--oracle", action="store_true", help="add finite-difference cross-check columns")
        p.add_argument("--tol-rel", type=float, metavar="X")
        p.add_argument("--tol-abs", type=float, metavar="X")

    common(sub.add_parser("check", help="evaluate the configured checks"))
    common(sub.add_parser("scan-curvature", help="sample sectional curvatures in the domain box"))
    common(sub.add_parser("families", help="verify closed-form families"), config_required=False)
    common(sub.add_parser("derive", help="print the expanded residual expression"))
    return parser


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _base_report(cfg, command):
    return {
        "tool_version": __version__,
        "command": command,
        "config_hash": None if cfg is None else cfg.digest(),
    }


def _execute(args):
    cfg = RunConfig.load(args.config).with_overrides(args) if args.config else None
    report = _base_report(cfg, args.command)
    if args.command == "check":
        report.update(run_checks(cfg, args.oracle))
        report["passed"] = all(c["status"] == "pass" for c in report["checks"])
    elif args.command == "scan-curvature":
        cr = scan_sectional_curvature(cfg.factor(), cfg.box(), cfg.samples, cfg.seed)
        report["curvature"] = cr.to_dict()
        report["passed"] = True
    elif args.command == "families":
        if cfg is not None and cfg.family is not None:
            fams = [_family_from(cfg.family)]
        else:
            fams = [(f, None) for f in DEFAULT_FAMILIES]
        samples = cfg.samples if cfg else (args.samples or 200)
        seed = cfg.seed if cfg else (args.seed or 0)
        tol = cfg.tolerances if cfg else bh.SYMBOLIC
        box = cfg.box() if cfg and cfg.box_raw is not None else None
        results = [fm.verify_family(f, box, samples, seed, off, tol).to_dict() for f, off in fams]
        report["families"] = results
        report["passed"] = all(r["passed"] for r in results)
    else:  # derive
        tag, text, values = derive(cfg)
        report.update({"equation": tag, "expression": text, "sample_values": values})
        report["passed"] = True
    return report


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        report = _execute(args)
    except ExprSyntaxError as exc:
        sys.stderr.write(f"expression error: {exc}\n{exc.diagnostic()}\n")
        return EXIT_CONFIG
    except (ConfigError, UnboundParameterError, PreconditionError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except (DomainError, RegionExhaustedError, RankDeficientError) as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return EXIT_NUMERIC
    if args.command == "derive" and not args.out:
        sys.stdout.write(report["expression"] + "\n")
    else:
        _emit(dumps(report), args.out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
