"""Built-in metrics with expected-result blocks.

Every expectation carries a provenance tag: ``derived`` (hand computation
noted in the entry), ``closed-form`` (textbook value) or ``trivial``.
Expected values may be expressions in the chart's coordinates and
parameters, evaluated at each sample point.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, UnknownName
from .exprdsl import MetricSpec, evaluate, parse_expression


@dataclass(frozen=True)
class Expectation:
    """One assertion on a named quantity of the per-point battery.

    kind ``"max"``: quantity <= tol; ``"value"``: |quantity - target| <= tol
    (relative when ``relative``); ``"equals"``: exact match of a label or
    integer.
    """

    quantity: str
    kind: str
    tol: float = 0.0
    target: object = None
    relative: bool = False
    provenance: str = "derived"

    def evaluate_target(self, spec, point):
        if isinstance(self.target, str) and self.kind == "value":
            expr = parse_expression(self.target, spec.coordinates, spec.parameters)
            return evaluate(expr, point, spec.parameters)
        return self.target

    def check(self, spec, point, actual):
        if actual is None:
            return False
        if self.kind == "max":
            return float(actual) <= self.tol
        if self.kind == "value":
            target = float(self.evaluate_target(spec, point))
            err = abs(float(actual) - target)
            if self.relative:
                err /= max(abs(target), 1e-300)
            return err <= self.tol
        if self.kind == "equals":
            return actual == self.target
        raise ValueError(f"unknown expectation kind {self.kind!r}")


@dataclass(frozen=True)
class CatalogEntry:
    spec: MetricSpec
    expected: tuple = ()
    note: str = ""
    options: dict = field(default_factory=dict)  # e.g. {"null_vector": [...]}


# -- metric constructors ---------------------------------------------------------------


def minkowski4():
    spec = MetricSpec.from_strings(
        "minkowski4",
        ("t", "x", "y", "z"),
        {(0, 0): "-1", (1, 1): "1", (2, 2): "1", (3, 3): "1"},
        sample_box=[(-1, 1)] * 4,
        vector_A=("1", "1", "0", "0"),
    )
    flat = ("riemann_max", "ricci_max", "weyl_max", "nabla_weyl_max", "scalar_abs")
    expected = tuple(Expectation(q, "max", 1e-13, provenance="trivial") for q in flat)
    expected += (
        Expectation("fv_status", "equals", target="conformally_flat", provenance="trivial"),
        Expectation("petrov_class", "equals", target="O", provenance="trivial"),
        Expectation("omega1", "max", 1e-13, provenance="trivial"),
    )
    return CatalogEntry(spec, expected, "Flat space: every curvature quantity vanishes.")


def schwarzschild(M=1.0):
    spec = MetricSpec.from_strings(
        "schwarzschild",
        ("t", "r", "theta", "phi"),
        {
            (0, 0): "-(1 - 2*M/r)",
            (1, 1): "1/(1 - 2*M/r)",
            (2, 2): "r^2",
            (3, 3): "r^2*sin(theta)^2",
        },
        parameters={"M": M},
        sample_box=[(0, 1), (2.5, 10), (0.5, 2.5), (0, 6)],
        sigma="0.1*r",
    )
    expected = (
        Expectation("kretschmann", "value", 1e-9, "48*M^2/r^6", relative=True, provenance="closed-form"),
        Expectation("ricci_max", "max", 1e-10, provenance="closed-form"),
        Expectation("special_gap", "max", 1e-9, provenance="derived"),
        Expectation("fv_status", "equals", target="not_cqr", provenance="derived"),
        Expectation("petrov_class", "equals", target="II_or_D", provenance="derived"),
    )
    note = (
        "Static vacuum solution.  Kretschmann scalar 48 M^2 / r^6; Ricci-flat, so "
        "C = Riemann.  Type D: the radial null direction k = (-1, 1/f, 0, 0) with "
        "f = 1 - 2M/r passes the II/D Bel-Debever level only."
    )
    return CatalogEntry(spec, expected, note, {"null_vector": ["-1", "1/(1 - 2*M/r)", "0", "0"]})


def s3_sphere(a=1.0):
    spec = MetricSpec.from_strings(
        "s3_sphere",
        ("chi", "theta", "phi"),
        {
            (0, 0): "a^2",
            (1, 1): "a^2*sin(chi)^2",
            (2, 2): "a^2*sin(chi)^2*sin(theta)^2",
        },
        parameters={"a": a},
        sample_box=[(0.3, 2.8), (0.3, 2.8), (0, 6)],
    )
    expected = (
        Expectation("scalar", "value", 1e-10, "6/a^2", provenance="closed-form"),
        Expectation("weyl_max", "max", 1e-11, provenance="closed-form"),
    )
    return CatalogEntry(spec, expected, "Constant curvature 1/a^2: R = n(n-1)/a^2 = 6/a^2, C = 0.")


def frw_flat(q=1.0):
    spec = MetricSpec.from_strings(
        "frw_flat",
        ("t", "x", "y", "z"),
        {(0, 0): "-1", (1, 1): "t^(2*q)", (2, 2): "t^(2*q)", (3, 3): "t^(2*q)"},
        parameters={"q": q},
        sample_box=[(1, 3), (-1, 1), (-1, 1), (-1, 1)],
    )
    expected = (
        Expectation("weyl_max", "max", 1e-10, provenance="closed-form"),
        Expectation("qe_residual", "max", 1e-9, provenance="derived"),
        Expectation("qe_multiplicities", "equals", target=(1, 3), provenance="derived"),
    )
    note = "Perfect-fluid Ricci tensor: eigenvalues split (1, 3) along dt; conformally flat."
    return CatalogEntry(spec, expected, note)


def desitter(H=1.0):
    spec = MetricSpec.from_strings(
        "desitter",
        ("t", "x", "y", "z"),
        {(0, 0): "-1", (1, 1): "exp(2*H*t)", (2, 2): "exp(2*H*t)", (3, 3): "exp(2*H*t)"},
        parameters={"H": H},
        sample_box=[(0, 1), (-1, 1), (-1, 1), (-1, 1)],
    )
    expected = (
        Expectation("weyl_max", "max", 1e-10, provenance="closed-form"),
        Expectation("scalar", "value", 1e-9, "12*H^2", provenance="closed-form"),
        Expectation("qe_multiplicities", "equals", target=(4,), provenance="closed-form"),
    )
    return CatalogEntry(spec, expected, "Maximally symmetric: Einstein with R = 12 H^2.")


def godel(a=1.0):
    spec = MetricSpec.from_strings(
        "godel",
        ("t", "x", "y", "z"),
        {
            (0, 0): "-a^2",
            (0, 3): "-a^2*exp(x)",
            (1, 1): "a^2",
            (2, 2): "a^2",
            (3, 3): "-a^2*exp(2*x)/2",
        },
        parameters={"a": a},
        sample_box=[(-1, 1), (-1, 1), (-1, 1), (-1, 1)],
    )
    expected = (
        Expectation("compat_ricci_weyl", "max", 1e-9, provenance="derived"),
        Expectation("scalar", "value", 1e-10, "-1/a^2", provenance="closed-form"),
    )
    note = "Goedel universe; its Ricci tensor is Weyl compatible.  R = -1/a^2 in this signature."
    return CatalogEntry(spec, expected, note)


def ppwave(a_expr="0", b_expr="0", c_expr="0", name="ppwave", **kw):
    H = f"({a_expr})*(x^2 - y^2) + 2*({b_expr})*x*y + ({c_expr})*(x^2 + y^2)"
    spec = MetricSpec.from_strings(
        name,
        ("u", "v", "x", "y"),
        {(0, 0): H, (0, 1): "1", (2, 2): "-1", (3, 3): "-1"},
        sample_box=kw.pop("sample_box", [(-0.5, 0.5), (-1, 1), (-1, 1), (-1, 1)]),
        **kw,
    )
    return spec


def ppwave_entry(a_expr="0", b_expr="0", c_expr="0"):
    spec = ppwave(a_expr, b_expr, c_expr)
    expected = (
        Expectation("christoffel_u_max", "max", 1e-13, provenance="derived"),
        Expectation("weyl_divergence_max", "max", 1e-10, provenance="derived"),
    )
    return CatalogEntry(spec, expected, "Generic pp-wave; G^u_ij vanishes identically.")


def ppwave_cqr():
    spec = ppwave("exp(4*u)", "0", "0", name="ppwave_cqr", vector_A=("1", "0", "0", "0"))
    expected = (
        Expectation("fv_status", "equals", target="cqr"),
        Expectation("fv_A_error", "max", 1e-9),
        Expectation("recurrence_residual", "max", 1e-9),
        Expectation("annihilation_residual", "max", 1e-10),
        Expectation("weyl_divergence_max", "max", 1e-10),
        Expectation("antisym_residual", "max", 1e-10),
        Expectation("conf_recurrent_residual", "max", 1e-9),
        Expectation("nullity", "max", 1e-12),
        Expectation("kernel_dimension", "equals", target=1),
        Expectation("petrov_class", "equals", target="N"),
        Expectation("omega1", "max", 1e-11),
        Expectation("christoffel_u_max", "max", 1e-13),
    )
    note = (
        "pp-wave with a(u) = exp(4u), b = c = 0.  G^u_ij = 0, so nabla C has only its "
        "u-slot, equal to (a'/a) C = 4 C.  Hence nabla C = 4 A (x) C with A = du "
        "(A_u = a'/(4a) = 1).  The type-N form satisfies A_i C_jklm + cyclic = 0, so "
        "the five-term recurrence holds with the same A."
    )
    return CatalogEntry(spec, expected, note, {"fundamental_vector": [1.0, 0.0, 0.0, 0.0]})


def ppwave_concircular():
    spec = ppwave(
        "u^-4",
        "0",
        "u^2",
        name="ppwave_concircular",
        vector_A=("-1/u", "0", "0", "0"),
        sample_box=[(1, 3), (-1, 1), (-1, 1), (-1, 1)],
    )
    expected = (
        Expectation("fv_status", "equals", target="cqr"),
        Expectation("recurrence_residual", "max", 1e-9),
        Expectation("concircular_gamma_abs", "max", 1e-11),
        Expectation("concircular_fit", "max", 1e-10),
        Expectation("scalar_abs", "max", 1e-10),
        Expectation("ricci_codazzi", "max", 1e-10),
        Expectation("ricci_rank", "equals", target=1),
        Expectation("deszcz_weyl", "max", 1e-10),
        Expectation("deszcz_ricci", "max", 1e-10),
        Expectation("deszcz_gamma", "max", 1e-10),
        Expectation("petrov_class", "equals", target="N"),
    )
    note = (
        "pp-wave with a = u^-4, b = 0, c = u^2.  A_u = a'/(4a) = -1/u.  Since G^u_ij = 0, "
        "nabla_u A_u = d_u(-1/u) = 1/u^2 = A_u A_u and all other components vanish: "
        "A is concircular with gamma = 0.  c(u) makes Ricci = 2c du (x) du (rank 1) "
        "without touching the Weyl tensor."
    )
    return CatalogEntry(spec, expected, note)


def random_poly(seed=0, n=4, terms=6, amplitude=0.05):
    """Diagonal (-1, 1, ..., 1) plus seeded degree <= 3 polynomial perturbations."""
    if n < 3:
        raise InputError("random_poly needs n >= 3")
    rng = np.random.default_rng(seed)
    coords = tuple(f"x{i}" for i in range(n))
    monomials = []
    for d in (1, 2, 3):
        monomials.extend(_monomials(n, d))
    grid = {}
    for i in range(n):
        for j in range(i, n):
            base = (-1.0 if i == 0 else 1.0) if i == j else 0.0
            picks = rng.choice(len(monomials), size=terms, replace=False)
            parts = [_fmt(base)] if base else []
            for k in sorted(picks):
                coeff = round(float(rng.uniform(-amplitude, amplitude)), 4)
                parts.append(f"{_fmt(coeff)}*{monomials[k]}")
            grid[(i, j)] = " + ".join(parts) if parts else "0"
    spec = MetricSpec.from_strings(
        f"random_poly_{seed}" if n == 4 else f"random_poly_{seed}_n{n}",
        coords,
        grid,
        sample_box=[(-0.5, 0.5)] * n,
    )
    expected = (
        Expectation("weyl_trace", "max", 1e-10, provenance="trivial"),
        Expectation("bianchi1", "max", 1e-10, provenance="trivial"),
    )
    if n == 4:
        expected += (Expectation("lovelock4", "max", 1e-10, provenance="derived"),)
    return CatalogEntry(spec, expected, "Generic metric for universal identities.")


def _monomials(n, degree):
    out = []
    for tup in itertools.combinations_with_replacement(range(n), degree):
        out.append("*".join(f"x{i}" for i in tup))
    return out


def _fmt(x):
    return f"({x!r})" if x < 0 else repr(x)


# -- registry -------------------------------------------------------------------------------

_BUILTINS = {
    "minkowski4": minkowski4,
    "schwarzschild": schwarzschild,
    "s3_sphere": s3_sphere,
    "frw_flat": frw_flat,
    "desitter": desitter,
    "godel": godel,
    "ppwave": ppwave_entry,
    "ppwave_cqr": ppwave_cqr,
    "ppwave_concircular": ppwave_concircular,
    "random_poly": random_poly,
}


def names():
    return tuple(_BUILTINS)


def entry_for_spec(spec):
    """The catalog entry whose (default-argument) metric equals ``spec``, or a bare entry.

    Lets an exported-then-loaded file keep its expected block.
    """
    for name in _BUILTINS:
        entry = _BUILTINS[name]()
        if entry.spec == spec:
            return entry
    return CatalogEntry(spec)


def _split_args(text):
    args, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            args.append(cur.strip())
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    if cur.strip():
        args.append(cur.strip())
    return args


_CALL = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$", re.S)
_NUMERIC = {"schwarzschild", "s3_sphere", "frw_flat", "desitter", "godel", "random_poly"}


def builtin(name, **kwargs):
    """Catalog entry by name.

    ``name`` may carry arguments: ``"schwarzschild(M=2)"``, ``"random_poly(7)"``,
    ``"ppwave(exp(u), 0, 0)"``.
    """
    m = _CALL.match(name)
    if not m or m.group(1) not in _BUILTINS:
        raise UnknownName(f"unknown builtin metric {name!r}; known: {', '.join(_BUILTINS)}")
    key, argtext = m.group(1), m.group(2)
    args, kw = [], dict(kwargs)
    for part in _split_args(argtext or ""):
        k, eq, v = part.partition("=")
        if eq and re.fullmatch(r"[A-Za-z_]\w*", k.strip()):
            kw[k.strip()] = v.strip()
        else:
            args.append(part)
    if key in _NUMERIC:
        try:
            args = [float(a) for a in args]
            kw = {k: float(v) for k, v in kw.items()}
        except ValueError:
            raise InputError(f"numeric arguments expected for {key}") from None
        if key == "random_poly":
            args = [int(a) for a in args]
            kw = {k: int(v) for k, v in kw.items()}
    try:
        return _BUILTINS[key](*args, **kw)
    except TypeError as exc:
        raise InputError(f"bad arguments for {key}: {exc}") from None
