"""Identity battery for conformally quasi-recurrent (CQR) metrics.

All residuals are reported normalized as ``raw / (1 + magnitude)``, where the
magnitude is the largest component among the terms being compared.  Vectors
``A`` are covectors (lower index) throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .curvature import (
    curvature_action,
    curvature_pack,
    recurrence_basis,
    recurrence_rhs,
    weyl_square,
)
from .errors import ConditionViolated, ConformallyFlat, MissingField, NoTransversal, NotApplicable
from .tensor import cyclic_sum, max_abs

DEFAULT_TOL = 1e-9
SVD_CUTOFF = 1e-10
EIGEN_GAP = 1e-6


def _normalized(raw, *terms):
    return raw / (1.0 + max((max_abs(t) for t in terms), default=0.0))


def _vector_A(spec, vector_A):
    exprs = spec.vector_A if vector_A is None else vector_A
    if exprs is None:
        raise MissingField(f"metric {spec.name!r} has no vector_A")
    if isinstance(exprs[0], str):
        exprs = tuple(spec.parse(t) for t in exprs)
    return exprs


def nabla_A(spec, pack, vector_A=None):
    """Exact ``nabla_i A_j`` (array ``[i, j]``) and ``A_j`` from the vector expressions."""
    exprs = _vector_A(spec, vector_A)
    a_jet = spec.vector_jets(pack.point, pack.order, exprs)
    return pack.covariant_derivative(a_jet, "d").c, np.array(a_jet.value)


# -- fundamental vector ----------------------------------------------------------------


@dataclass(frozen=True)
class FundamentalVectorReport:
    A: np.ndarray
    recurrence_residual: float
    annihilation_residual: float
    nullity: float
    kernel_dimension: int
    status: str  # cqr | conformally_symmetric | not_cqr | conformally_flat
    weyl_square: float
    gradient_crosscheck: float | None  # |A - nabla(C^2)/(4 C^2)|, when C^2 is non-degenerate
    singular_values: tuple = ()


def annihilation_singular_values(C):
    """Singular values of ``B^m -> B^m C_{jklm}``."""
    n = C.shape[0]
    return np.linalg.svd(C.reshape(-1, n), compute_uv=False)


def kernel_dimension(C, cutoff=SVD_CUTOFF):
    s = annihilation_singular_values(C)
    n = C.shape[0]
    if s[0] == 0.0:
        return n
    return int(np.sum(s <= cutoff * s[0]))


def cqr_residual(pack, A):
    nc = pack.nabla_weyl.c
    return max_abs(nc - recurrence_rhs(A, pack.weyl_0_4.c)) / (1.0 + max_abs(nc))


def annihilation_residual(pack, A):
    C = pack.weyl_0_4.c
    a_up = pack.metric.raise_index(A)
    return max_abs(np.einsum("m,jklm->jkl", a_up, C)) / (1.0 + max_abs(C))


def solve_fundamental_vector(pack, tol=DEFAULT_TOL):
    """Least-squares fundamental vector of the recurrence for ``nabla C``.

    Raises :class:`ConformallyFlat` (carrying a report) when ``C`` vanishes.
    """
    C = pack.weyl_0_4.c
    n = pack.n
    c2 = weyl_square(pack)
    if max_abs(C) <= tol:
        report = FundamentalVectorReport(
            A=np.zeros(n),
            recurrence_residual=0.0,
            annihilation_residual=0.0,
            nullity=0.0,
            kernel_dimension=n,
            status="conformally_flat",
            weyl_square=c2,
            gradient_crosscheck=None,
        )
        raise ConformallyFlat("Weyl tensor vanishes at this point", report)
    system = recurrence_basis(C).reshape(n, -1).T
    A, *_ = np.linalg.lstsq(system, pack.nabla_weyl.c.ravel(), rcond=SVD_CUTOFF)
    residual = cqr_residual(pack, A)
    if residual <= tol:
        status = "cqr" if max_abs(A) > tol else "conformally_symmetric"
    else:
        status = "not_cqr"
    crosscheck = None
    if abs(c2) > tol * (1.0 + max_abs(C) ** 2):
        grad_c2 = 2.0 * np.einsum("ijklm,jklm->i", pack.nabla_weyl.c, _raise_all(pack, C))
        crosscheck = max_abs(A - grad_c2 / (4.0 * c2)) / (1.0 + max_abs(A))
    sv = annihilation_singular_values(C)
    return FundamentalVectorReport(
        A=A,
        recurrence_residual=residual,
        annihilation_residual=annihilation_residual(pack, A),
        nullity=abs(pack.metric.dot(A, A)),
        kernel_dimension=kernel_dimension(C),
        status=status,
        weyl_square=c2,
        gradient_crosscheck=crosscheck,
        singular_values=tuple(float(x) for x in sv),
    )


def _raise_all(pack, t):
    ginv = pack.metric.g_inv.c
    out = t
    for slot in range(t.ndim):
        out = np.moveaxis(np.tensordot(ginv, out, axes=([1], [slot])), 0, slot)
    return out


# -- compatibility --------------------------------------------------------------------------


def compatibility_residual(S, K, pack):
    """``S_i^m K_jklm + S_j^m K_kilm + S_k^m K_ijlm``, normalized.

    ``S`` may be non-symmetric; its first index is the free one.
    """
    S = S.c if hasattr(S, "c") else np.asarray(S)
    K = K.c if hasattr(K, "c") else np.asarray(K)
    s_mixed = S @ pack.metric.g_inv.c
    term = np.einsum("im,jklm->ijkl", s_mixed, K)
    return _normalized(max_abs(cyclic_sum(term, (0, 1, 2))), term)


@dataclass(frozen=True)
class GradientAReport:
    contraction_residual: float
    square_residual: float
    compat_residual: float
    vacuous_square: bool
    norm_nabla_weyl_sq: float
    nullity: float


def gradient_A_checks(spec, pack, vector_A=None, tol=DEFAULT_TOL):
    """Identities for ``nabla A`` that follow from the recurrence."""
    nA, A = nabla_A(spec, pack, vector_A)
    C = pack.weyl_0_4.c
    ginv = pack.metric.g_inv.c
    aa = pack.metric.dot(A, A)
    t1 = np.einsum("im,jklm->ijkl", nA @ ginv, C)
    t2 = aa * np.einsum("jkli->ijkl", C)
    r9 = _normalized(max_abs(t1 + t2), t1, t2)
    nc = pack.nabla_weyl.c
    lhs = float(np.sum(nc * _raise_all(pack, nc)))
    rhs = 8.0 * aa * weyl_square(pack)
    r10 = abs(lhs - rhs) / (1.0 + abs(lhs) + abs(rhs))
    r11 = compatibility_residual(nA, C, pack)
    return GradientAReport(
        contraction_residual=r9,
        square_residual=r10,
        compat_residual=r11,
        vacuous_square=abs(lhs) <= tol and abs(rhs) <= tol,
        norm_nabla_weyl_sq=lhs,
        nullity=abs(aa),
    )


# -- Theta / Gamma ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaGammaReport:
    Theta: np.ndarray
    Gamma: np.ndarray
    C2: float
    theta_symmetry: float
    gamma_symmetry: float
    annihilation: float | None  # A^p Gamma_pr
    theta_recurrence: float | None
    tgg: float | None
    nabla_gamma: float | None
    coda: float | None
    codazzi: float | None  # None when C^2 vanishes
    love: float | None  # None below jet order 4
    love_contracted: float | None
    vacuous: bool


def theta_gamma_jets(pack):
    """Jets of ``Theta_pqrs = C_pqlm C_rs^lm``, ``Gamma_pr`` and ``C^2``."""
    C = pack.jets["weyl_0_4"]
    ginv = pack.jets["ginv"]
    c_up = jets.einsum("rsab,la,mb->rslm", C, ginv, ginv)
    theta = jets.einsum("pqlm,rslm->pqrs", C, c_up)
    gamma = jets.einsum("pqrs,qs->pr", theta, ginv)
    c2 = jets.einsum("pr,pr->", gamma, ginv)
    return theta, gamma, c2


def codazzi_rescaled_residual(pack, gamma_jet, c2_jet, tol=DEFAULT_TOL):
    """Codazzi defect of ``|C^2|^(-3/4) Gamma``; needs ``C^2 != 0``."""
    c2 = c2_jet.value
    if abs(c2) <= tol:
        raise NotApplicable("C^2 vanishes; the rescaled Gamma is undefined")
    factor = jets.power(c2_jet * float(np.sign(c2)), -0.75)
    nt = pack.covariant_derivative(factor * gamma_jet, "dd").c
    return _normalized(max_abs(nt - np.swapaxes(nt, 0, 1)), nt)


def theta_gamma_suite(pack, A=None, tol=DEFAULT_TOL):
    theta_j, gamma_j, c2_j = theta_gamma_jets(pack)
    Th, Gm, c2 = theta_j.value, gamma_j.value, float(c2_j.value)
    th_sym = _normalized(
        max(
            max_abs(Th + np.swapaxes(Th, 0, 1)),
            max_abs(Th + np.swapaxes(Th, 2, 3)),
            max_abs(Th - np.transpose(Th, (2, 3, 0, 1))),
        ),
        Th,
    )
    gm_sym = _normalized(max_abs(Gm - Gm.T), Gm)
    try:
        codazzi = codazzi_rescaled_residual(pack, gamma_j, c2_j, tol)
    except NotApplicable:
        codazzi = None
    ginv = pack.metric.g_inv.c
    annih = rec = tgg = ngam = coda = love = love_c = None
    n_th_j = pack.covariant_derivative_jet(theta_j, "dddd")
    n_th = n_th_j.value
    n_gm = pack.covariant_derivative(gamma_j, "dd").c
    if A is not None:
        A = np.asarray(A, dtype=float)
        a_up = ginv @ A
        annih = _normalized(max_abs(a_up @ Gm), Gm) if Gm.size else 0.0
        rhs = recurrence_rhs(A, Th) + 2.0 * np.einsum("i,pqrs->ipqrs", A, Th)
        rec = _normalized(max_abs(n_th - rhs), n_th, rhs)
        div_th = np.einsum("spqra,sa->pqr", n_th, ginv)
        rhs_tgg = np.einsum("q,pr->pqr", A, Gm) - np.einsum("p,qr->pqr", A, Gm)
        tgg = _normalized(max_abs(div_th - rhs_tgg), div_th, rhs_tgg)
        rhs_ng = (
            4.0 * np.einsum("i,pr->ipr", A, Gm)
            + np.einsum("p,ir->ipr", A, Gm)
            + np.einsum("r,ip->ipr", A, Gm)
        )
        ngam = _normalized(max_abs(n_gm - rhs_ng), n_gm, rhs_ng)
        lhs_coda = n_gm - np.swapaxes(n_gm, 0, 1)
        rhs_coda = 3.0 * (np.einsum("j,kl->jkl", A, Gm) - np.einsum("k,jl->jkl", A, Gm))
        coda = _normalized(max_abs(lhs_coda - rhs_coda), lhs_coda, rhs_coda)
    if n_th_j.order >= 1:
        div_jet = jets.einsum("mjklp,mp->jkl", n_th_j, pack.jets["ginv"])
        nd = pack.covariant_derivative(div_jet, "ddd").c
        love = _normalized(max_abs(cyclic_sum(nd, (0, 1, 2))), nd)
        love_c = _normalized(max_abs(np.einsum("ijkl,il->jk", nd, ginv)), nd)
    return ThetaGammaReport(
        Theta=Th,
        Gamma=Gm,
        C2=c2,
        theta_symmetry=th_sym,
        gamma_symmetry=gm_sym,
        annihilation=annih,
        theta_recurrence=rec,
        tgg=tgg,
        nabla_gamma=ngam,
        coda=coda,
        codazzi=codazzi,
        love=love,
        love_contracted=love_c,
        vacuous=max_abs(Th) <= tol,
    )


# -- concircular / quasi-Einstein / Deszcz ------------------------------------------------------


@dataclass(frozen=True)
class ConcircularReport:
    gamma: float
    fit_residual: float
    gamma_gradient: float  # spread of gamma over sampled points
    null_consistency: float
    gamma_samples: tuple = ()


def _gamma_fit(nA, A, g):
    d = nA - np.outer(A, A)
    gamma = float(np.sum(d * g) / np.sum(g * g))
    return gamma, max_abs(d - gamma * g)


def sample_points(spec, count, seed=0):
    rng = np.random.default_rng(seed)
    box = np.array(spec.sample_box, dtype=float)
    return [tuple(rng.uniform(box[:, 0], box[:, 1])) for _ in range(count)]


def concircular_fit(spec, pack, vector_A=None, samples=5, seed=0):
    """Best ``gamma`` in ``nabla_s A_i = A_s A_i + gamma g_si`` and its spread."""
    nA, A = nabla_A(spec, pack, vector_A)
    g = pack.metric.g.c
    gamma, fit = _gamma_fit(nA, A, g)
    values = [gamma]
    if samples and spec.sample_box:
        exprs = _vector_A(spec, vector_A)
        for pt in sample_points(spec, samples, seed):
            other = curvature_pack(spec, pt, pack.order)
            nA_o, A_o = nabla_A(spec, other, exprs)
            values.append(_gamma_fit(nA_o, A_o, other.metric.g.c)[0])
    return ConcircularReport(
        gamma=gamma,
        fit_residual=fit,
        gamma_gradient=float(max(values) - min(values)),
        null_consistency=abs(pack.metric.dot(A, A) + gamma),
        gamma_samples=tuple(values),
    )


@dataclass(frozen=True)
class QuasiEinsteinReport:
    beta: float
    alpha: float
    u: np.ndarray
    residual: float
    eigen_multiplicities: tuple
    is_quasi_einstein: bool
    ricci_singular_values: tuple
    ricci_rank: int
    codazzi_residual: float


def _cluster(values, gap):
    order = np.argsort(values)
    vals = values[order]
    span = gap * max(1.0, float(np.max(np.abs(vals)))) if vals.size else gap
    clusters = [[vals[0]]]
    for v in vals[1:]:
        if abs(v - clusters[-1][-1]) <= span:
            clusters[-1].append(v)
        else:
            clusters.append([v])
    return clusters


def quasi_einstein_decompose(pack, gap=EIGEN_GAP, rank_cutoff=DEFAULT_TOL):
    R = pack.ricci.c
    g = pack.metric.g.c
    n = pack.n
    eig = np.linalg.eigvals(pack.metric.g_inv.c @ R)
    clusters = _cluster(np.real(eig), gap)
    mult = tuple(sorted(len(c) for c in clusters))
    big = max(clusters, key=len)
    beta = float(np.mean(big))
    complex_part = max_abs(np.imag(eig)) > gap * (1.0 + max_abs(eig))
    qe = (not complex_part) and len(clusters) <= 2 and len(big) >= n - 1

    M = R - beta * g
    w, v = np.linalg.eigh(M)
    k = int(np.argmax(np.abs(w)))
    u = v[:, k]
    norm = pack.metric.dot(u, u)
    if abs(norm) > 1e-8:
        u = u / np.sqrt(abs(norm))
    uu = np.outer(u, u)
    alpha = float(np.sum(M * uu) / np.sum(uu * uu))
    if abs(alpha) <= 1e-14 * (1.0 + max_abs(R)):
        alpha, u, uu = 0.0, np.zeros(n), np.zeros((n, n))
    residual = max_abs(M - alpha * uu) / (1.0 + max_abs(R))

    sv = np.linalg.svd(R, compute_uv=False)
    rank = 0 if sv[0] == 0 else int(np.sum(sv > rank_cutoff * sv[0]))
    nr = pack.covariant_derivative(pack.jets["ricci"], "dd").c
    codazzi = _normalized(max_abs(nr - np.swapaxes(nr, 0, 1)), nr)
    return QuasiEinsteinReport(
        beta=beta,
        alpha=alpha,
        u=u,
        residual=residual,
        eigen_multiplicities=mult,
        is_quasi_einstein=bool(qe),
        ricci_singular_values=tuple(float(s) for s in sv),
        ricci_rank=rank,
        codazzi_residual=codazzi,
    )


@dataclass(frozen=True)
class DeszczReport:
    weyl: float
    ricci: float
    gamma_tensor: float


def deszcz_residuals(pack, gamma):
    """Pseudo-symmetry defects of the Weyl, Ricci and Gamma tensors.

    Left sides come from :func:`curvature_action`; right sides are the
    metric-built actions scaled by ``gamma``.
    """
    g = pack.metric.g.c
    C = pack.weyl_0_4.c
    R = pack.ricci.c
    lw = curvature_action(C, pack)  # [i, s, j, k, l, m]
    rw = gamma * (
        np.einsum("sj,iklm->isjklm", g, C)
        - np.einsum("ij,sklm->isjklm", g, C)
        + np.einsum("sk,jilm->isjklm", g, C)
        - np.einsum("ik,jslm->isjklm", g, C)
        + np.einsum("ls,jkim->isjklm", g, C)
        - np.einsum("li,jksm->isjklm", g, C)
        + np.einsum("ms,jkli->isjklm", g, C)
        - np.einsum("mi,jkls->isjklm", g, C)
    )
    lr = curvature_action(R, pack)  # [i, s, k, l]
    rr = gamma * (
        np.einsum("sk,il->iskl", g, R)
        - np.einsum("ik,sl->iskl", g, R)
        + np.einsum("ls,ki->iskl", g, R)
        - np.einsum("li,sk->iskl", g, R)
    )
    _, gamma_jet, _ = theta_gamma_jets(pack)
    Gm = gamma_jet.value
    lg = curvature_action(Gm, pack)  # [s, i, p, r] = (nabla_s nabla_i - nabla_i nabla_s) Gamma_pr
    rg = gamma * (
        np.einsum("sp,ri->sipr", g, Gm)
        + np.einsum("sr,ip->sipr", g, Gm)
        - np.einsum("ip,rs->sipr", g, Gm)
        - np.einsum("ir,sp->sipr", g, Gm)
    )
    return DeszczReport(
        weyl=_normalized(max_abs(lw - rw), lw, rw),
        ricci=_normalized(max_abs(lr - rr), lr, rr),
        gamma_tensor=_normalized(max_abs(lg - rg), lg, rg),
    )


# -- alignment condition and electric part ------------------------------------------------------


def antisym_condition_residual(pack, A):
    """``A_i C_jklm + A_j C_kilm + A_k C_ijlm``, normalized."""
    term = np.einsum("i,jklm->ijklm", np.asarray(A, dtype=float), pack.weyl_0_4.c)
    return _normalized(max_abs(cyclic_sum(term, (0, 1, 2))), term)


def conformally_recurrent_residual(pack, A):
    nc = pack.nabla_weyl.c
    rhs = 4.0 * np.einsum("i,jklm->ijklm", np.asarray(A, dtype=float), pack.weyl_0_4.c)
    return _normalized(max_abs(nc - rhs), nc, rhs)


@dataclass(frozen=True)
class ElectricDecomposition:
    B: np.ndarray  # upper index, A_i B^i = 1, null
    E: np.ndarray
    representation_residual: float
    compatibility_residual: float
    trace: float
    A_trace: float
    B_trace: float


def transversal_vector(pack, A):
    """Null vector ``B^i`` with ``A_i B^i = 1`` for a null covector ``A``."""
    A = np.asarray(A, dtype=float)
    p = int(np.argmax(np.abs(A)))
    if A[p] == 0.0:
        raise NoTransversal("A vanishes; no vector with A.B = 1 exists")
    B = np.zeros_like(A)
    B[p] = 1.0 / A[p]
    bb = float(B @ pack.metric.g.c @ B)
    return B - 0.5 * bb * pack.metric.raise_index(A)


def electric_decompose(pack, A, tol=DEFAULT_TOL):
    A = np.asarray(A, dtype=float)
    cond = antisym_condition_residual(pack, A)
    aa = abs(pack.metric.dot(A, A)) / (1.0 + max_abs(A) ** 2)
    if cond > tol or aa > tol:
        raise ConditionViolated(
            f"alignment residual {cond:.3e} and nullity {aa:.3e} must both be <= {tol:g}"
        )
    B = transversal_vector(pack, A)
    C = pack.weyl_0_4.c
    E = np.einsum("i,m,iklm->kl", B, B, C)
    rebuilt = (
        np.einsum("j,m,kl->jklm", A, A, E)
        - np.einsum("j,l,mk->jklm", A, A, E)
        - np.einsum("k,m,jl->jklm", A, A, E)
        + np.einsum("k,l,jm->jklm", A, A, E)
    )
    ginv = pack.metric.g_inv.c
    return ElectricDecomposition(
        B=B,
        E=E,
        representation_residual=_normalized(max_abs(C - rebuilt), C),
        compatibility_residual=compatibility_residual(E, C, pack),
        trace=abs(float(np.sum(ginv * E))),
        A_trace=max_abs((ginv @ A) @ E),
        B_trace=max_abs(B @ E),
    )
