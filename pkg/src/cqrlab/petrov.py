"""Four-dimensional Lorentzian checks: Weyl degeneracy, invariants, Pontryagin forms.

Null test vectors and fundamental vectors are passed as covectors (lower
index), matching :mod:`cqrlab.analysis`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .analysis import DEFAULT_TOL, _normalized, kernel_dimension, nabla_A
from .errors import DegenerateFrame, DimensionError, NotNull, SignatureError
from .tensor import _perm_sign, antisymmetrize, max_abs

PETROV_CLASSES = ("O", "N", "III", "II_or_D", "not_aligned")


def _require_lorentzian4(pack):
    if pack.n != 4:
        raise DimensionError(f"requires dimension 4, got {pack.n}")
    if not pack.metric.is_lorentzian:
        raise SignatureError(f"metric signature {pack.metric.signature} is not Lorentzian")


def levi_civita(pack):
    """Covariant volume form with ``eps_{0123} = +sqrt|det g|``."""
    n = pack.n
    eps = np.zeros((n,) * n)
    for p in itertools.permutations(range(n)):
        eps[p] = _perm_sign(p)
    return np.sqrt(abs(pack.metric.det)) * eps


def _mixed_weyl(pack):
    # C^{jk}_{lm}
    gi = pack.metric.g_inv.c
    return np.einsum("ja,kb,ablm->jklm", gi, gi, pack.weyl_0_4.c)


# -- dimension-four Weyl identity ----------------------------------------------------------


def lovelock4_terms(pack):
    """The nine-term ``delta (x) C^{..}_{..}`` sum, indexed ``[i, j, k, r, s, t]``.

    Vanishes identically in dimension four and generically not otherwise.
    """
    n = pack.n
    W = _mixed_weyl(pack)
    delta = np.eye(n)
    uppers = (("i", "jk"), ("k", "ij"), ("j", "ki"))
    lowers = (("r", "st"), ("t", "rs"), ("s", "tr"))
    total = np.zeros((n,) * 6)
    for up, upair in uppers:
        for lo, lpair in lowers:
            total += np.einsum(f"{up}{lo},{upair}{lpair}->ijkrst", delta, W)
    return total, W


def lovelock4_defect(pack):
    total, W = lovelock4_terms(pack)
    return max_abs(total), max_abs(W)


def lovelock4_check(pack):
    """Normalized max-abs of the nine-term identity; ``~0`` only when ``n == 4``."""
    raw, magnitude = lovelock4_defect(pack)
    return raw / (1.0 + magnitude)


# -- invariants ------------------------------------------------------------------------------


def self_dual_weyl(pack):
    """``C+ = (C - i * dual C) / 2`` with the dual taken on the first pair."""
    _require_lorentzian4(pack)
    eps = levi_civita(pack)
    dual = 0.5 * np.einsum("jkpq,pqlm->jklm", eps, _mixed_weyl(pack))
    return 0.5 * (pack.weyl_0_4.c - 1j * dual)


def weyl_invariants(pack):
    """Quadratic and cubic Weyl invariants ``(I, J, special_gap)``.

    ``I = C+ . C+ / 8`` and ``J = C+^3 / 48`` (pairwise contractions), which
    give ``I = 3 Psi2^2`` and ``J = -Psi2^3`` on a type D Weyl tensor, so
    ``I^3 = 27 J^2`` there.  ``special_gap = |I^3 - 27 J^2| / (1 + |I|^3)``.
    """
    cp = self_dual_weyl(pack)
    gi = pack.metric.g_inv.c
    mixed = np.einsum("jkab,al,bm->jklm", cp, gi, gi)  # C+_{jk}^{lm}
    I = complex(np.einsum("jklm,lmjk->", mixed, mixed)) / 8.0
    J = complex(np.einsum("jklm,lmpq,pqjk->", mixed, mixed, mixed)) / 48.0
    gap = abs(I**3 - 27.0 * J**2) / (1.0 + abs(I) ** 3)
    return I, J, gap


# -- Bel-Debever chain -----------------------------------------------------------------------


def bel_debever_levels(pack, k):
    """Residuals ``(N, III, II_or_D)`` of the aligned degeneracy chain for covector ``k``.

    ``k`` is rescaled so that its largest contravariant component is one;
    each residual is divided by ``1 + max|C|``.
    """
    C = pack.weyl_0_4.c
    k = np.asarray(k, dtype=float)
    k_up = pack.metric.raise_index(k)
    size = max_abs(k_up)
    if size == 0.0:
        raise NotNull("null test vector vanishes")
    k, k_up = k / size, k_up / size
    level_n = np.einsum("jklm,m->jkl", C, k_up)
    ck = np.einsum("jklm,l->jkm", C, k_up)
    level_iii = np.einsum("jkm,p->jkmp", ck, k) - np.einsum("jkp,m->jkmp", ck, k)
    cbc = np.einsum("abcd,b,c->ad", C, k_up, k_up)
    t = np.einsum("e,ad,f->eadf", k, cbc, k)
    level_ii = antisymmetrize(antisymmetrize(t, (0, 1), "sum"), (2, 3), "sum")
    s = 1.0 + max_abs(C)
    return max_abs(level_n) / s, max_abs(level_iii) / s, max_abs(level_ii) / s


@dataclass(frozen=True)
class PetrovReport:
    petrov_class: str
    bel_debever_residuals: tuple  # (N, III, II_or_D)
    invariant_I: complex
    invariant_J: complex
    special_gap: float
    omega1: np.ndarray  # fully antisymmetrized (0,4) form
    k: np.ndarray


def bel_debever_classify(pack, k, tol=DEFAULT_TOL):
    """Deepest degeneracy level of the Weyl tensor aligned with the null covector ``k``."""
    _require_lorentzian4(pack)
    k = np.asarray(k, dtype=float)
    k_up = pack.metric.raise_index(k)
    size = max_abs(k_up)
    kk = abs(float(k @ k_up)) / size**2 if size else 0.0
    if size == 0.0 or kk > tol:
        raise NotNull(f"test vector is not null: |k.k| = {kk:.3e} after rescaling")
    levels = bel_debever_levels(pack, k)
    if max_abs(pack.weyl_0_4) <= tol:
        cls = "O"
    elif levels[0] <= tol:
        cls = "N"
    elif levels[1] <= tol:
        cls = "III"
    elif levels[2] <= tol:
        cls = "II_or_D"
    else:
        cls = "not_aligned"
    I, J, gap = weyl_invariants(pack)
    return PetrovReport(
        petrov_class=cls,
        bel_debever_residuals=levels,
        invariant_I=I,
        invariant_J=J,
        special_gap=gap,
        omega1=pontryagin_form(pack),
        k=k,
    )


# -- Pontryagin integrands -------------------------------------------------------------------


def _curvature_3_1(pack, use):
    if use == "weyl":
        return pack.weyl_3_1.c
    if use == "riemann":
        return pack.riemann_3_1.c
    raise ValueError(f"use must be 'weyl' or 'riemann', got {use!r}")


def pontryagin_form(pack, use="weyl"):
    """Alternating sum over all slots of ``K_{ija}^b K_{klb}^a`` (a 4-form)."""
    K = _curvature_3_1(pack, use)
    omega = np.einsum("ijab,klba->ijkl", K, K)
    return antisymmetrize(omega, (0, 1, 2, 3), "sum")


def pontryagin_omega1(pack, frame=None, use="weyl"):
    """First Pontryagin integrand evaluated on four tangent vectors.

    ``frame`` holds the vectors as rows (contravariant components); the
    coordinate frame is used when omitted.
    """
    if pack.n != 4:
        raise DimensionError(f"the first Pontryagin form is a 4-form; dimension is {pack.n}")
    X = np.eye(4) if frame is None else np.asarray(frame, dtype=float)
    if X.shape != (4, 4):
        raise DegenerateFrame(f"frame must hold 4 vectors of length 4, got shape {X.shape}")
    if abs(np.linalg.det(X)) <= 1e-12 * (1.0 + max_abs(X)) ** 4:
        raise DegenerateFrame("frame vectors are linearly dependent")
    form = pontryagin_form(pack, use)
    return float(np.einsum("ijkl,i,j,k,l->", form, X[0], X[1], X[2], X[3]))


def weyl_pair_trace_norm(pack):
    """``max |C_{lmj}^k C_{pqk}^j|`` (raw)."""
    K = pack.weyl_3_1.c
    return max_abs(np.einsum("lmjk,pqkj->lmpq", K, K))


def pontryagin_omega2_contraction(pack):
    """``max |C_{lma}^b C_{pqb}^c C_{rsc}^d C_{tud}^a|`` over all index values (raw).

    Each pair slot is antisymmetric, so only pairs ``l < m`` are visited and
    the rank-8 array is never formed.
    """
    K = pack.weyl_3_1.c
    pairs = [(a, b) for a in range(pack.n) for b in range(a + 1, pack.n)]
    mats = np.array([K[a, b] for a, b in pairs])  # [pair, a, b]
    prod2 = np.einsum("xab,ybc->xyac", mats, mats).reshape(len(pairs) ** 2, pack.n, pack.n)
    worst = 0.0
    for block in prod2:
        traces = np.einsum("ac,zca->z", block, prod2)
        worst = max(worst, max_abs(traces))
    return worst


# -- fundamental vector in dimension four ----------------------------------------------------


@dataclass(frozen=True)
class Lorentzian4Report:
    A: np.ndarray
    nullity: float
    kernel_dimension: int
    ricci_eigenvalue: float
    ricci_eigen_residual: float
    geodesic_coefficient: float
    geodesic_residual: float
    closedness: float
    divergence: float
    special_riemann_residual: float


def _proportionality(v, a):
    """Least-squares ``c`` in ``v ~ c a`` and the normalized misfit."""
    c = float(v @ a / (a @ a))
    return c, _normalized(max_abs(v - c * a), v, c * a)


def lorentzian4_suite(spec, pack, vector_A=None):
    """Null, eigenvector, geodesic and divergence properties of a given vector ``A``."""
    _require_lorentzian4(pack)
    nA, A = nabla_A(spec, pack, vector_A)
    a_up = pack.metric.raise_index(A)
    if max_abs(A) == 0.0:
        raise NotNull("vector A vanishes at this point")
    lam, eigen_res = _proportionality(a_up @ pack.ricci.c, A)
    mu, geo_res = _proportionality(a_up @ nA, A)
    T = np.einsum("kjlm,j,m->kl", pack.riemann_0_4.c, a_up, a_up)
    special = np.einsum("p,kl->pkl", A, T) - np.einsum("k,pl->pkl", A, T)
    return Lorentzian4Report(
        A=A,
        nullity=abs(float(A @ a_up)),
        kernel_dimension=kernel_dimension(pack.weyl_0_4.c),
        ricci_eigenvalue=lam,
        ricci_eigen_residual=eigen_res,
        geodesic_coefficient=mu,
        geodesic_residual=geo_res,
        closedness=max_abs(nA - nA.T),
        divergence=abs(float(np.sum(pack.metric.g_inv.c * nA))),
        special_riemann_residual=_normalized(max_abs(special), np.einsum("p,kl->pkl", A, T)),
    )
