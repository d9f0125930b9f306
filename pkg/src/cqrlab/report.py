"""Per-point battery of checks and report documents.

A report is a plain dict ready for json::

    {"metric": ..., "points": [{"point", "checks", "classifications"}],
     "worst": ..., "config": ...}

Every check carries ``raw`` (the un-normalized defect, or the measured value
for catalog expectations), ``normalized`` (the number compared against the
threshold) and ``pass``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import analysis, curvature, petrov
from .catalog import CatalogEntry, Expectation
from .errors import CQRLabError, ConformallyFlat, InputError, MissingField
from .exprdsl import evaluate, parse_expression
from .tensor import max_abs

# identity name -> default threshold (None: use the configured tol)
IDENTITIES = {
    "riemann_symmetry": None,
    "bianchi": None,
    "weyl_traces": None,
    "lovelock4": 1e-10,
    "conformal_gradient": None,
    "divergence_cyclic": 1e-8,
    "avez": None,
}
# short names accepted on the command line
ALIASES = {"eq5": "conformal_gradient", "eq6": "divergence_cyclic"}


@dataclass(frozen=True)
class AnalysisConfig:
    tol: float = analysis.DEFAULT_TOL
    order: int = 3
    points: tuple | None = None  # explicit points; overrides the grid
    grid: int = 5
    checks: frozenset | None = None  # None selects everything
    fmt: str = "text"
    seed: int = 0
    fd: bool = False
    sigma: str | None = None  # overrides the metric's own conformal factor

    def __post_init__(self):
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise InputError(f"tol must be positive, got {self.tol}")
        if self.order not in (3, 4):
            raise InputError(f"order must be 3 or 4, got {self.order}")
        if self.grid < 1:
            raise InputError(f"grid count must be >= 1, got {self.grid}")
        if self.fmt not in ("text", "json"):
            raise InputError(f"format must be text or json, got {self.fmt!r}")

    def selected(self, name):
        return self.checks is None or name in self.checks

    def as_dict(self):
        return {
            "tol": self.tol,
            "order": self.order,
            "grid": None if self.points is not None else self.grid,
            "points": None if self.points is None else [list(p) for p in self.points],
            "checks": None if self.checks is None else sorted(self.checks),
            "seed": self.seed,
            "fd": self.fd,
            "sigma": self.sigma,
        }


# -- sample points ------------------------------------------------------------------------


def _kronecker_alpha(n):
    # reciprocal powers of the unique positive root of x^(n+1) = x + 1
    phi = 2.0
    for _ in range(64):
        phi = (1.0 + phi) ** (1.0 / (n + 1))
    return np.array([phi ** -(k + 1) for k in range(n)])


def grid_points(spec, count, seed=0):
    """``count`` quasi-random points (additive Kronecker sequence) in the sample box."""
    if not spec.sample_box:
        raise MissingField(f"metric {spec.name!r} has no sample_box; pass explicit points")
    box = np.array(spec.sample_box, dtype=float)
    n = spec.dimension
    start = np.random.default_rng(seed).uniform(size=n) if seed else np.full(n, 0.5)
    alpha = _kronecker_alpha(n)
    frac = np.mod(start + np.outer(np.arange(count), alpha), 1.0)
    return [tuple(float(v) for v in box[:, 0] + f * (box[:, 1] - box[:, 0])) for f in frac]


def parse_point(text, spec):
    """``"u=0.3,v=0,x=0.5,y=-0.2"`` (all coordinates, any order) to a tuple."""
    values = {}
    for part in text.split(","):
        name, eq, value = part.partition("=")
        name = name.strip()
        if not eq or name not in spec.coordinates:
            raise InputError(f"bad point component {part.strip()!r}; expected coordinate=value")
        if name in values:
            raise InputError(f"coordinate {name!r} given twice")
        expr = parse_expression(value.strip(), (), spec.parameters)
        values[name] = evaluate(expr, (), spec.parameters)
    missing = [c for c in spec.coordinates if c not in values]
    if missing:
        raise InputError(f"point lacks coordinates: {', '.join(missing)}")
    return tuple(values[c] for c in spec.coordinates)


# -- per-point battery -------------------------------------------------------------------


def _check(raw, normalized, threshold):
    return {"raw": float(raw), "normalized": float(normalized), "pass": bool(normalized <= threshold)}


def identity_check(name, spec, pack, config):
    """One universal identity at a point, as a check dict."""
    tol = IDENTITIES[name] if IDENTITIES[name] is not None else config.tol
    if name == "riemann_symmetry":
        raw, mag = curvature.riemann_symmetry_defect(pack.riemann_0_4)
    elif name == "bianchi":
        r1, m1 = curvature.first_bianchi_defect(pack.riemann_0_4)
        r2, m2 = curvature.second_bianchi_defect(pack)
        raw, mag = (r1, m1) if r1 / (1 + m1) >= r2 / (1 + m2) else (r2, m2)
    elif name == "weyl_traces":
        raw, mag = curvature.weyl_trace_defect(pack)
    elif name == "lovelock4":
        raw, mag = petrov.lovelock4_defect(pack)
    elif name == "conformal_gradient":
        sigma = config.sigma if config.sigma is not None else spec.sigma
        if sigma is None:
            raise MissingField(f"metric {spec.name!r} has no sigma; pass --sigma")
        rep = curvature.conformal_check(spec, sigma, pack.point, config.order)
        return _check(rep.raw, rep.residual, tol)
    elif name == "divergence_cyclic":
        nabla_div = None
        if pack.nabla_div_weyl is None or config.fd:
            nabla_div = curvature.nabla_div_weyl_fd(spec, pack)
        raw, mag = curvature.divergence_identity_defect(pack, nabla_div)
    elif name == "avez":
        w = petrov.pontryagin_form(pack, "weyl")
        r = petrov.pontryagin_form(pack, "riemann")
        raw, mag = max_abs(w - r), max_abs(w)
    else:
        raise InputError(f"unknown identity {name!r}; known: {', '.join(IDENTITIES)}")
    return _check(raw, raw / (1.0 + mag), tol)


def _applicable_identities(spec, pack, config):
    names = ["riemann_symmetry", "bianchi", "weyl_traces"]
    if pack.n == 4:
        names += ["lovelock4", "avez"]
    if config.sigma is not None or spec.sigma is not None:
        names.append("conformal_gradient")
    if config.order >= 4 or config.fd:
        names.append("divergence_cyclic")
    return names


def _null_vector(entry, pack, fv, tol):
    opt = entry.options.get("null_vector")
    if opt is not None:
        return np.array([evaluate(entry.spec.parse(str(t)), pack.point, entry.spec.parameters) for t in opt])
    if fv is not None and fv.status == "cqr":
        return fv.A
    return None


def point_quantities(entry, pack, config):
    """Every applicable analysis quantity at one point (labels and floats)."""
    spec = entry.spec
    tol = config.tol
    q = {
        "riemann_max": max_abs(pack.riemann_0_4),
        "ricci_max": max_abs(pack.ricci),
        "weyl_max": max_abs(pack.weyl_0_4),
        "nabla_weyl_max": max_abs(pack.nabla_weyl),
        "weyl_divergence_max": max_abs(pack.weyl_divergence),
        "christoffel_u_max": max_abs(pack.christoffel.c[0]),
        "scalar": pack.scalar,
        "scalar_abs": abs(pack.scalar),
        "kretschmann": curvature.kretschmann(pack),
        "weyl_trace": curvature.weyl_trace_residual(pack),
        "bianchi1": curvature.first_bianchi_residual(pack.riemann_0_4),
        "compat_ricci_riemann": analysis.compatibility_residual(pack.ricci, pack.riemann_0_4, pack),
        "compat_ricci_weyl": analysis.compatibility_residual(pack.ricci, pack.weyl_0_4, pack),
    }
    if pack.n == 4:
        q["lovelock4"] = petrov.lovelock4_check(pack)

    try:
        fv = analysis.solve_fundamental_vector(pack, tol)
    except ConformallyFlat as exc:
        fv = exc.report
    q.update(
        fv_status=fv.status,
        fv_A=[float(a) for a in fv.A],
        recurrence_residual=fv.recurrence_residual,
        annihilation_residual=fv.annihilation_residual,
        nullity=fv.nullity,
        kernel_dimension=fv.kernel_dimension,
    )
    expected_A = entry.options.get("fundamental_vector")
    if expected_A is not None:
        q["fv_A_error"] = max_abs(fv.A - np.asarray(expected_A, dtype=float))
    if fv.status in ("cqr", "conformally_symmetric"):
        q["antisym_residual"] = analysis.antisym_condition_residual(pack, fv.A)
        q["conf_recurrent_residual"] = analysis.conformally_recurrent_residual(pack, fv.A)
        try:
            el = analysis.electric_decompose(pack, fv.A, tol)
            q["electric_representation"] = el.representation_residual
            q["electric_compat"] = el.compatibility_residual
        except CQRLabError:
            pass
        tg = analysis.theta_gamma_suite(pack, fv.A, tol)
        q["theta_gamma_vacuous"] = tg.vacuous
        for key in ("annihilation", "theta_recurrence", "tgg", "nabla_gamma", "coda", "codazzi", "love"):
            value = getattr(tg, key)
            if value is not None:
                q[f"theta_gamma_{key}"] = value

    qe = analysis.quasi_einstein_decompose(pack)
    q.update(
        qe_residual=qe.residual,
        qe_multiplicities=tuple(qe.eigen_multiplicities),
        is_quasi_einstein=qe.is_quasi_einstein,
        ricci_rank=qe.ricci_rank,
        ricci_codazzi=qe.codazzi_residual,
    )

    if spec.vector_A is not None:
        cc = analysis.concircular_fit(spec, pack, samples=0)
        q.update(
            concircular_gamma=cc.gamma,
            concircular_gamma_abs=abs(cc.gamma),
            concircular_fit=cc.fit_residual,
        )
        ga = analysis.gradient_A_checks(spec, pack, tol=tol)
        q.update(gradA_contraction=ga.contraction_residual, gradA_square=ga.square_residual, gradA_compat=ga.compat_residual)
        dz = analysis.deszcz_residuals(pack, cc.gamma)
        q.update(deszcz_weyl=dz.weyl, deszcz_ricci=dz.ricci, deszcz_gamma=dz.gamma_tensor)

    if pack.n == 4 and pack.metric.is_lorentzian:
        I, J, gap = petrov.weyl_invariants(pack)
        q.update(invariant_I_abs=abs(I), invariant_J_abs=abs(J), special_gap=gap)
        q["omega1"] = abs(petrov.pontryagin_omega1(pack))
        q["weyl_pair_trace"] = petrov.weyl_pair_trace_norm(pack)
        q["omega2_contraction"] = petrov.pontryagin_omega2_contraction(pack)
        k = _null_vector(entry, pack, fv, tol)
        if q["weyl_max"] <= tol:
            q["petrov_class"] = "O"
        elif k is not None:
            try:
                q["petrov_class"] = petrov.bel_debever_classify(pack, k, tol).petrov_class
            except CQRLabError:
                pass
        if spec.vector_A is not None:
            l4 = petrov.lorentzian4_suite(spec, pack)
            q.update(
                l4_nullity=l4.nullity,
                l4_ricci_eigen=l4.ricci_eigen_residual,
                l4_geodesic=l4.geodesic_residual,
                l4_closedness=l4.closedness,
                l4_divergence=l4.divergence,
                l4_special_riemann=l4.special_riemann_residual,
            )
    return q


CLASSIFICATION_KEYS = (
    "fv_status",
    "fv_A",
    "kernel_dimension",
    "petrov_class",
    "qe_multiplicities",
    "is_quasi_einstein",
    "ricci_rank",
    "theta_gamma_vacuous",
)


def _expectation_check(exp: Expectation, spec, point, value):
    if exp.kind == "equals":
        actual = list(value) if isinstance(value, tuple) else value
        return {"raw": actual, "normalized": None, "pass": exp.check(spec, point, value)}
    if value is None:
        return {"raw": None, "normalized": None, "pass": False}
    if exp.kind == "value":
        target = float(exp.evaluate_target(spec, point))
        err = abs(float(value) - target)
        if exp.relative:
            err /= max(abs(target), 1e-300)
        return {"raw": float(value), "normalized": err, "pass": exp.check(spec, point, value)}
    return {"raw": float(value), "normalized": float(value), "pass": exp.check(spec, point, value)}


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def evaluate_point(entry, point, config):
    """Checks and classifications at one point, as a report fragment."""
    spec = entry.spec
    pack = curvature.curvature_pack(spec, point, config.order)
    checks = {}
    for name in _applicable_identities(spec, pack, config):
        if config.selected(name):
            checks[name] = identity_check(name, spec, pack, config)
    q = point_quantities(entry, pack, config)
    for name, chk in checks.items():
        q[f"{name}_residual"] = chk["normalized"]
    for exp in entry.expected:
        if config.selected(exp.quantity):
            checks[exp.quantity] = _expectation_check(exp, spec, pack.point, q.get(exp.quantity))
    classifications = {k: _jsonable(q[k]) for k in CLASSIFICATION_KEYS if k in q}
    return {
        "point": dict(zip(spec.coordinates, pack.point)),
        "checks": checks,
        "classifications": classifications,
    }


def _worst(points):
    worst = {}
    failed = set()
    for p in points:
        for name, chk in p["checks"].items():
            if not chk["pass"]:
                failed.add(name)
            v = chk["normalized"]
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                worst[name] = max(worst.get(name, 0.0), float(v))
    return {"normalized": dict(sorted(worst.items())), "failed": sorted(failed), "pass": not failed}


def resolve_points(spec, config):
    if config.points is not None:
        return [tuple(float(x) for x in p) for p in config.points]
    return grid_points(spec, config.grid, config.seed)


def analyze(entry, config):
    """Full battery over the configured points; returns the report dict."""
    if not isinstance(entry, CatalogEntry):
        entry = CatalogEntry(entry)
    points = sorted(resolve_points(entry.spec, config))
    results = [evaluate_point(entry, p, config) for p in points]
    return {
        "metric": entry.spec.name,
        "points": results,
        "worst": _worst(results),
        "config": config.as_dict(),
    }


def identity_report(name, entry, config):
    """A single named identity at every configured point."""
    name = ALIASES.get(name, name)
    if name not in IDENTITIES:
        raise InputError(f"unknown identity {name!r}; known: {', '.join(IDENTITIES)}")
    if not isinstance(entry, CatalogEntry):
        entry = CatalogEntry(entry)
    spec = entry.spec
    results = []
    for p in sorted(resolve_points(spec, config)):
        order = 4 if name == "divergence_cyclic" and not config.fd else config.order
        pack = curvature.curvature_pack(spec, p, order)
        results.append(
            {
                "point": dict(zip(spec.coordinates, pack.point)),
                "checks": {name: identity_check(name, spec, pack, config)},
                "classifications": {},
            }
        )
    return {
        "metric": spec.name,
        "points": results,
        "worst": _worst(results),
        "config": config.as_dict(),
    }


# -- rendering -----------------------------------------------------------------------------


def to_json(report):
    return json.dumps(report, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _fmt(v):
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def to_text(report):
    lines = [f"metric: {report['metric']}"]
    for k, p in enumerate(report["points"]):
        coords = ", ".join(f"{c}={v:.6g}" for c, v in p["point"].items())
        lines.append(f"point {k}: {coords}")
        for name, chk in p["checks"].items():
            flag = "PASS" if chk["pass"] else "FAIL"
            lines.append(f"  {name:<28} raw={_fmt(chk['raw']):<12} norm={_fmt(chk['normalized']):<12} {flag}")
        if p["classifications"]:
            parts = ", ".join(f"{k}={_fmt(v)}" for k, v in p["classifications"].items())
            lines.append(f"  classifications: {parts}")
    worst = report["worst"]
    lines.append("worst:")
    for name, v in worst["normalized"].items():
        lines.append(f"  {name:<28} {v:.3e}")
    if worst["failed"]:
        lines.append(f"failed: {', '.join(worst['failed'])}")
    lines.append("result: " + ("PASS" if worst["pass"] else "FAIL"))
    return "\n".join(lines) + "\n"
