"""Curvature quantities at a point, computed from metric jets.

Conventions
-----------
``R_{jkl}^m = d_k G^m_{jl} - d_j G^m_{kl} + G^m_{kp} G^p_{jl} - G^m_{jp} G^p_{kl}``
with ``G`` the Christoffel symbols.  Then ``R_kl = -R_{mkl}^m`` is positive
on round spheres, the all-lower ``R_{jklm}`` has the usual pair symmetries,
and the Ricci identity reads

    (nabla_j nabla_k - nabla_k nabla_j) w_l = R_{jkl}^m w_m.

The Weyl tensor uses the weight-one bracket ``g_{m[j} R_{k]l} =
g_mj R_kl - g_mk R_jl``.

Every field is carried as a tensor-valued :class:`~cqrlab.jets.Jet`, so a
covariant derivative is an exact jet derivative plus Christoffel terms; with
metric jets of order K, the Weyl tensor is exact to order K-2 and its
covariant derivative to order K-3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import InputError, OrderTooLow
from .exprdsl import Binary, Const, MetricSpec, Unary, eval_jet
from .tensor import MetricAtPoint, Tensor, cyclic_sum, max_abs

_SLOT_LETTERS = "abcdefgh"


def _inverse_jet(g, g0_inv):
    h = g - g.value
    x = -jets.einsum("ip,pj->ij", g0_inv, h)
    term = jets.Jet.constant(g0_inv, g.n, g.basis.K).truncate(g.order)
    total = term
    for _ in range(g.order):
        term = jets.einsum("ip,pj->ij", x, term)
        total = total + term
    return total


def covariant_derivative_jet(field, variance, christoffel):
    """``nabla_i`` of a tensor-valued jet; the new slot comes first.

    ``variance`` is a string of ``'d'``/``'u'`` flags for the field's slots;
    ``christoffel[m, i, j]`` holds ``G^m_{ij}``.
    """
    if field.order < 1:
        raise OrderTooLow("field jet must be exact to order >= 1 to take a covariant derivative")
    result = field.gradient()
    letters = _SLOT_LETTERS[: len(variance)]
    for s, flag in enumerate(variance):
        swapped = letters[:s] + "y" + letters[s + 1 :]
        if flag == "d":
            result = result - jets.einsum(f"yz{letters[s]},{swapped}->z{letters}", christoffel, field)
        else:
            result = result + jets.einsum(f"{letters[s]}zy,{swapped}->z{letters}", christoffel, field)
    return result


def recurrence_rhs(A, C):
    """``2A_i C_jklm + A_j C_iklm + A_k C_jilm + A_l C_jkim + A_m C_jkli``."""
    A = np.asarray(A, dtype=float)
    return (
        2.0 * np.einsum("i,jklm->ijklm", A, C)
        + np.einsum("j,iklm->ijklm", A, C)
        + np.einsum("k,jilm->ijklm", A, C)
        + np.einsum("l,jkim->ijklm", A, C)
        + np.einsum("m,jkli->ijklm", A, C)
    )


def recurrence_basis(C):
    """Coefficient arrays ``L_p`` with ``recurrence_rhs(A, C) = sum_p A_p L_p``."""
    n = C.shape[0]
    return np.stack([recurrence_rhs(np.eye(n)[p], C) for p in range(n)])


@dataclass(eq=False)
class CurvaturePack:
    """Curvature at one point; Tensor fields hold values, ``jets`` the full jets."""

    point: tuple
    order: int
    metric: MetricAtPoint
    christoffel: Tensor
    riemann_0_4: Tensor
    riemann_3_1: Tensor
    ricci: Tensor
    scalar: float
    weyl_0_4: Tensor
    weyl_3_1: Tensor
    nabla_weyl: Tensor
    weyl_divergence: Tensor
    nabla_div_weyl: Tensor | None
    jets: dict = field(repr=False)

    @property
    def n(self):
        return self.metric.n

    def covariant_derivative(self, field_jet, variance):
        """Value of ``nabla`` applied to a jet field at this point."""
        return Tensor(
            covariant_derivative_jet(field_jet, variance, self.jets["christoffel"]).value,
            "d" + variance,
        )

    def covariant_derivative_jet(self, field_jet, variance):
        return covariant_derivative_jet(field_jet, variance, self.jets["christoffel"])

    def raise_covector(self, A):
        return self.metric.raise_index(A)


def curvature_pack(spec: MetricSpec, point, order=3):
    """Build every curvature quantity of ``spec`` at ``point``.

    ``order`` is the jet order of the metric; 3 gives the covariant derivative
    of the Weyl tensor, 4 additionally its second derivatives.
    """
    if order < 3:
        raise OrderTooLow("curvature_pack needs order >= 3 for nabla C")
    point = tuple(float(x) for x in point)
    n = spec.dimension
    if len(point) != n:
        raise InputError(f"point has {len(point)} coordinates, chart has {n}")
    g = spec.metric_jets(point, order)
    metric = MetricAtPoint.from_jets(g)
    ginv = _inverse_jet(g, metric.g_inv.c)

    dg = g.gradient()  # [k, i, j] = d_k g_ij
    first_kind = 0.5 * (dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg)  # [p, i, j]
    gamma = jets.einsum("mp,pij->mij", ginv, first_kind)
    dgamma = gamma.gradient()  # [a, m, i, j]

    r31 = (
        jets.einsum("kmjl->jklm", dgamma)
        - jets.einsum("jmkl->jklm", dgamma)
        + jets.einsum("mkp,pjl->jklm", gamma, gamma)
        - jets.einsum("mjp,pkl->jklm", gamma, gamma)
    )
    r04 = jets.einsum("jklp,pm->jklm", r31, g)
    ricci = -jets.einsum("mklm->kl", r31)
    scalar = jets.einsum("kl,kl->", ginv, ricci)

    weyl = r04 + (1.0 / (n - 2)) * (
        jets.einsum("mj,kl->jklm", g, ricci)
        - jets.einsum("mk,jl->jklm", g, ricci)
        + jets.einsum("mj,kl->jklm", ricci, g)
        - jets.einsum("mk,jl->jklm", ricci, g)
    )
    weyl = weyl - scalar * (
        (jets.einsum("mj,kl->jklm", g, g) - jets.einsum("mk,jl->jklm", g, g))
        * (1.0 / ((n - 1) * (n - 2)))
    )
    weyl31 = jets.einsum("jklp,pm->jklm", weyl, ginv)

    nabla_c = covariant_derivative_jet(weyl, "dddd", gamma)
    div_c = jets.einsum("mjklp,mp->jkl", nabla_c, ginv)
    nabla_div = None
    if div_c.order >= 1:
        nabla_div = covariant_derivative_jet(div_c, "ddd", gamma)

    jet_fields = {
        "g": g,
        "ginv": ginv,
        "christoffel": gamma,
        "riemann_3_1": r31,
        "riemann_0_4": r04,
        "ricci": ricci,
        "scalar": scalar,
        "weyl_0_4": weyl,
        "weyl_3_1": weyl31,
        "nabla_weyl": nabla_c,
        "weyl_divergence": div_c,
        "nabla_div_weyl": nabla_div,
    }
    return CurvaturePack(
        point=point,
        order=order,
        metric=metric,
        christoffel=Tensor(gamma.value, "udd"),
        riemann_0_4=Tensor(r04.value, "dddd"),
        riemann_3_1=Tensor(r31.value, "dddu"),
        ricci=Tensor(ricci.value, "dd"),
        scalar=float(scalar.value),
        weyl_0_4=Tensor(weyl.value, "dddd"),
        weyl_3_1=Tensor(weyl31.value, "dddu"),
        nabla_weyl=Tensor(nabla_c.value, "ddddd"),
        weyl_divergence=Tensor(div_c.value, "ddd"),
        nabla_div_weyl=None if nabla_div is None else Tensor(nabla_div.value, "dddd"),
        jets=jet_fields,
    )


def covariant_derivative(field_jet, variance, pack):
    """Covariant derivative of a jet field, evaluated at the pack's point."""
    return pack.covariant_derivative(field_jet, variance)


def curvature_action(t, pack, i=None, s=None):
    """``(nabla_i nabla_s - nabla_s nabla_i) t`` for a covariant tensor ``t``.

    Computed algebraically from the Ricci identity, one Riemann contraction
    per slot.  Returns the full array with the two new slots first, or the
    ``(i, s)`` slice when both are given.
    """
    c = t.c if isinstance(t, Tensor) else np.asarray(t, dtype=float)
    r31 = pack.riemann_3_1.c
    r = c.ndim
    letters = _SLOT_LETTERS[:r]
    out = np.zeros((pack.n, pack.n) + c.shape)
    for slot in range(r):
        swapped = letters[:slot] + "y" + letters[slot + 1 :]
        out += np.einsum(f"zx{letters[slot]}y,{swapped}->zx{letters}", r31, c)
    if i is not None and s is not None:
        return out[i, s]
    return out


def second_covariant_commutator(field_jet, variance, pack):
    """``(nabla_i nabla_s - nabla_s nabla_i)`` from two jet derivatives (needs order >= 2)."""
    first = pack.covariant_derivative_jet(field_jet, variance)
    second = pack.covariant_derivative_jet(first, "d" + variance).value
    return second - np.swapaxes(second, 0, 1)


# -- symmetry and identity residuals ---------------------------------------------------


def _normalize(defect):
    raw, magnitude = defect
    return raw / (1.0 + magnitude)


def riemann_symmetry_defect(r04):
    """Pair antisymmetries and pair exchange: ``(raw max-abs defect, max|R|)``."""
    c = r04.c if isinstance(r04, Tensor) else r04
    raw = max(
        max_abs(c + np.swapaxes(c, 0, 1)),
        max_abs(c + np.swapaxes(c, 2, 3)),
        max_abs(c - np.transpose(c, (2, 3, 0, 1))),
    )
    return raw, max_abs(c)


def riemann_symmetry_residual(r04):
    return _normalize(riemann_symmetry_defect(r04))


def first_bianchi_defect(r04):
    c = r04.c if isinstance(r04, Tensor) else r04
    return max_abs(cyclic_sum(c, (1, 2, 3))), max_abs(c)


def first_bianchi_residual(r04):
    return _normalize(first_bianchi_defect(r04))


def weyl_trace_defect(pack):
    """Largest trace of the Weyl tensor over any index pair."""
    c = pack.weyl_0_4.c
    ginv = pack.metric.g_inv.c
    worst = 0.0
    for a in range(4):
        for b in range(a + 1, 4):
            tr = np.tensordot(c, ginv, axes=([a, b], [0, 1]))
            worst = max(worst, max_abs(tr))
    return worst, max_abs(c)


def weyl_trace_residual(pack):
    return _normalize(weyl_trace_defect(pack))


def second_bianchi_defect(pack):
    """Cyclic sum of ``nabla_i R_jklm`` over ``i, j, k``."""
    nr = pack.covariant_derivative(pack.jets["riemann_0_4"], "dddd").c
    return max_abs(cyclic_sum(nr, (0, 1, 2))), max_abs(nr)


def second_bianchi_residual(pack):
    return _normalize(second_bianchi_defect(pack))


def kretschmann(pack):
    r = pack.riemann_0_4.c
    ginv = pack.metric.g_inv.c
    up = np.einsum("ja,kb,lc,md,abcd->jklm", ginv, ginv, ginv, ginv, r, optimize=True)
    return float(np.sum(r * up))


def weyl_square(pack):
    c = pack.weyl_0_4.c
    ginv = pack.metric.g_inv.c
    up = np.einsum("ja,kb,lc,md,abcd->jklm", ginv, ginv, ginv, ginv, c, optimize=True)
    return float(np.sum(c * up))


# -- conformal rescaling ------------------------------------------------------------------


def conformal_rescale(spec, sigma):
    """Chart with metric ``exp(2 sigma) g``; ``sigma`` is an Expression or text."""
    if isinstance(sigma, str):
        sigma = spec.parse(sigma)
    if sigma == Const(0.0):
        return spec
    factor = Unary("exp", Binary("mul", Const(2.0), sigma))
    comps = tuple(
        tuple(c if c == Const(0.0) else Binary("mul", factor, c) for c in row)
        for row in spec.components
    )
    return spec.with_changes(name=f"{spec.name}_conformal", components=comps, sigma=None)


@dataclass(frozen=True)
class ConformalReport:
    residual: float  # A^p raised with the original metric
    residual_hat_raised: float  # A^p raised with the rescaled metric
    weyl_invariance: float  # |C-hat_{jkl}^m - C_{jkl}^m|, normalized
    sigma_value: float
    raw: float = 0.0  # un-normalized defect behind ``residual``


def conformal_check(spec, sigma, point, order=3):
    """Compare both sides of the conformal identity for the Weyl gradient."""
    if isinstance(sigma, str):
        sigma = spec.parse(sigma)
    pack = curvature_pack(spec, point, order)
    hat = curvature_pack(conformal_rescale(spec, sigma), point, order)
    s_jet = eval_jet(sigma, point, spec.parameters, 1)
    A = s_jet.gradient().value
    e2s = np.exp(2.0 * s_jet.value)
    g = pack.metric.g.c
    C = pack.weyl_0_4.c
    C_hat = hat.weyl_0_4.c
    rhs = e2s * (pack.nabla_weyl.c - recurrence_rhs(A, C))
    base_scale = 1.0 + max(max_abs(hat.nabla_weyl), max_abs(rhs))

    def lhs(a_up):
        return hat.nabla_weyl.c - (
            np.einsum("p,ij,pklm->ijklm", a_up, g, C_hat)
            + np.einsum("p,ik,jplm->ijklm", a_up, g, C_hat)
            + np.einsum("p,il,jkpm->ijklm", a_up, g, C_hat)
            + np.einsum("p,im,jklp->ijklm", a_up, g, C_hat)
        )

    raw = max_abs(lhs(pack.metric.raise_index(A)) - rhs)
    res_hat = max_abs(lhs(hat.metric.raise_index(A)) - rhs) / base_scale
    inv = max_abs(hat.weyl_3_1.c - pack.weyl_3_1.c) / (1.0 + max_abs(pack.weyl_3_1))
    return ConformalReport(raw / base_scale, res_hat, inv, float(s_jet.value), raw)


def conformal_identity_residual(spec, sigma, point, order=3):
    return conformal_check(spec, sigma, point, order).residual


# -- second-derivative identity ---------------------------------------------------------------

FD_STEP = 1e-4


def nabla_div_weyl_fd(spec, pack, step=FD_STEP):
    """``nabla_i nabla_m C_{jkl}^m`` from central differences of the divergence field.

    Uses order-3 packs at ``point +- step e_i``; accurate to ``O(step^2)``.
    """
    n = pack.n
    point = np.asarray(pack.point)
    d_div = np.empty((n,) * 4)
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        plus = curvature_pack(spec, tuple(point + e), 3).weyl_divergence.c
        minus = curvature_pack(spec, tuple(point - e), 3).weyl_divergence.c
        d_div[i] = (plus - minus) / (2.0 * step)
    G = pack.christoffel.c
    D = pack.weyl_divergence.c
    return (
        d_div
        - np.einsum("pij,pkl->ijkl", G, D)
        - np.einsum("pik,jpl->ijkl", G, D)
        - np.einsum("pil,jkp->ijkl", G, D)
    )


def divergence_identity_terms(pack, nabla_div=None):
    """Cyclic sums of ``nabla_i nabla_m C_{jkl}^m`` and of ``-(n-3)/(n-2) R_im R_{jkl}^m``.

    The two agree on every metric.  ``nabla_div`` overrides the jet value
    (required below order 4).
    """
    if nabla_div is None:
        if pack.nabla_div_weyl is None:
            raise OrderTooLow("second derivatives of the Weyl tensor need order 4 or --fd")
        nabla_div = pack.nabla_div_weyl.c
    n = pack.n
    lhs = cyclic_sum(nabla_div, (0, 1, 2))
    rr = np.einsum("im,jklm->ijkl", pack.ricci.c, pack.riemann_3_1.c)
    rhs = -(n - 3) / (n - 2) * cyclic_sum(rr, (0, 1, 2))
    return lhs, rhs


def divergence_identity_defect(pack, nabla_div=None):
    lhs, rhs = divergence_identity_terms(pack, nabla_div)
    return max_abs(lhs - rhs), max(max_abs(lhs), max_abs(rhs))


def divergence_identity_residual(pack, nabla_div=None):
    return _normalize(divergence_identity_defect(pack, nabla_div))
