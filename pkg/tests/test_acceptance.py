"""One test per acceptance criterion, each printing a single PASS/FAIL line."""

import contextlib
import io
import json
import math
import time

import numpy as np
import pytest

from cqrlab import analysis, catalog, cli, petrov, report
from cqrlab.curvature import (
    conformal_check,
    curvature_pack,
    divergence_identity_residual,
    first_bianchi_residual,
    kretschmann,
    riemann_symmetry_residual,
    second_bianchi_residual,
    weyl_trace_residual,
)
from cqrlab.tensor import max_abs

from conftest import SESSION

RANDOM_SEEDS = range(20)


@contextlib.contextmanager
def criterion(number, title):
    try:
        yield
    except BaseException:
        line = f"criterion {number:>2}: FAIL  {title}"
        SESSION["criteria"][number] = line
        print(line)
        raise
    line = f"criterion {number:>2}: PASS  {title}"
    if "FAIL" not in SESSION["criteria"].get(number, ""):
        SESSION["criteria"][number] = line
    print(line)


def random_points(spec, count):
    return report.grid_points(spec, count, seed=0)


def test_criterion_01_flatness():
    with criterion(1, "minkowski4 flat to 1e-13 in under 1 s"):
        start = time.perf_counter()
        spec = catalog.minkowski4().spec
        pack = curvature_pack(spec, (0.3, -0.2, 0.5, 0.1), 4)
        tensors = (
            pack.christoffel,
            pack.riemann_0_4,
            pack.ricci,
            pack.weyl_0_4,
            pack.nabla_weyl,
            pack.weyl_divergence,
            pack.nabla_div_weyl,
        )
        residuals = (
            riemann_symmetry_residual(pack.riemann_0_4),
            first_bianchi_residual(pack.riemann_0_4),
            weyl_trace_residual(pack),
            second_bianchi_residual(pack),
            divergence_identity_residual(pack),
            petrov.lovelock4_check(pack),
            abs(pack.scalar),
            abs(petrov.pontryagin_omega1(pack)),
        )
        elapsed = time.perf_counter() - start
        assert max(max_abs(t) for t in tensors) <= 1e-13
        assert max(residuals) <= 1e-13
        assert elapsed < 1.0


@pytest.mark.parametrize("r", [3.0, 5.0, 8.0])
def test_criterion_02_schwarzschild(r):
    with criterion(2, "schwarzschild Kretschmann, Ricci, special gap, type II_or_D"):
        pack = curvature_pack(catalog.schwarzschild(1.0).spec, (0.0, r, 1.2, 0.4))
        assert abs(kretschmann(pack) - 48 / r**6) <= 1e-9 * 48 / r**6
        assert max_abs(pack.ricci) <= 1e-10
        I, J, _ = petrov.weyl_invariants(pack)
        assert abs(I**3 - 27 * J**2) <= 1e-9
        k = np.array([-1.0, 1.0 / (1.0 - 2.0 / r), 0.0, 0.0])  # radial null
        assert petrov.bel_debever_classify(pack, k).petrov_class == "II_or_D"


def test_criterion_03_conventions():
    with criterion(3, "unit 3-sphere R = 6; Weyl traces and first Bianchi on random metrics"):
        pack = curvature_pack(catalog.s3_sphere(1.0).spec, (0.8, 1.0, 0.4))
        assert abs(pack.scalar - 6.0) <= 1e-10
        worst = 0.0
        for seed in RANDOM_SEEDS:
            spec = catalog.random_poly(seed).spec
            for p in random_points(spec, 5):
                pk = curvature_pack(spec, p)
                worst = max(worst, weyl_trace_residual(pk), first_bianchi_residual(pk.riemann_0_4))
        assert worst <= 1e-10


def test_criterion_04_conformal():
    with criterion(4, "Weyl (3,1) conformal invariance and the Weyl-gradient identity"):
        rng = np.random.default_rng(2024)
        point = (0.1, -0.2, 0.15, 0.05)
        for k in range(10):
            c = rng.uniform(-0.3, 0.3, size=4)
            sigma = f"{c[0]:.5f}*x0 + {c[1]:.5f}*x1*x2 + {c[2]:.5f}*sin(x3) + {c[3]:.5f}*x0^2"
            rep = conformal_check(catalog.random_poly(k).spec, sigma, point)
            assert rep.weyl_invariance <= 1e-9
        rep = conformal_check(catalog.schwarzschild(1.0).spec, "0.1*r", (0.0, 4.0, 1.0, 0.5))
        assert rep.residual <= 1e-9


def test_criterion_05_universal_identities():
    with criterion(5, "four-dimensional Lovelock identity, divergence identity, Avez equality"):
        for seed in RANDOM_SEEDS:
            spec = catalog.random_poly(seed).spec
            pack = curvature_pack(spec, random_points(spec, 1)[0])
            assert petrov.lovelock4_check(pack) <= 1e-10
            w = petrov.pontryagin_omega1(pack, use="weyl")
            rr = petrov.pontryagin_omega1(pack, use="riemann")
            assert abs(w - rr) <= 1e-9
        spec5 = catalog.random_poly(1, n=5).spec
        assert petrov.lovelock4_check(curvature_pack(spec5, random_points(spec5, 1)[0])) > 1e-3
        for seed in range(5):
            spec = catalog.random_poly(seed).spec
            pack = curvature_pack(spec, random_points(spec, 1)[0], 4)
            assert divergence_identity_residual(pack) <= 1e-8


def test_criterion_06_cqr_fixture():
    with criterion(6, "ppwave_cqr battery at 10 points in under 10 s"):
        start = time.perf_counter()
        entry = catalog.ppwave_cqr()
        spec = entry.spec
        for p in random_points(spec, 10):
            pack = curvature_pack(spec, p)
            fv = analysis.solve_fundamental_vector(pack)
            A = fv.A
            assert max_abs(A - np.array([1.0, 0.0, 0.0, 0.0])) <= 1e-9
            assert fv.recurrence_residual <= 1e-9
            assert fv.annihilation_residual <= 1e-10
            assert max_abs(pack.weyl_divergence) <= 1e-10
            assert analysis.antisym_condition_residual(pack, A) <= 1e-10
            assert analysis.conformally_recurrent_residual(pack, A) <= 1e-9
            assert fv.nullity <= 1e-12
            assert fv.kernel_dimension == 1
            assert analysis.compatibility_residual(pack.ricci, pack.riemann_0_4, pack) <= 1e-9
            assert analysis.compatibility_residual(pack.ricci, pack.weyl_0_4, pack) <= 1e-9
            grad = analysis.gradient_A_checks(spec, pack)
            assert grad.contraction_residual <= 1e-9 and grad.compat_residual <= 1e-9
            el = analysis.electric_decompose(pack, A)
            assert el.compatibility_residual <= 1e-9
            assert el.representation_residual <= 1e-9
            assert petrov.bel_debever_classify(pack, A).petrov_class == "N"
            assert abs(petrov.pontryagin_omega1(pack)) <= 1e-11
            l4 = petrov.lorentzian4_suite(spec, pack)
            for value in (l4.ricci_eigen_residual, l4.geodesic_residual, l4.closedness, l4.divergence):
                assert value <= 1e-10
            assert l4.special_riemann_residual <= 1e-10
        assert time.perf_counter() - start < 10.0


def test_criterion_07_concircular_fixture():
    with criterion(7, "ppwave_concircular: gamma = 0, rank-one Codazzi Ricci, Deszcz conditions"):
        entry = catalog.ppwave_concircular()
        spec = entry.spec
        gammas = []
        for p in random_points(spec, 10):
            pack = curvature_pack(spec, p)
            fit = analysis.concircular_fit(spec, pack, samples=1)
            gammas.append(fit.gamma)
            assert abs(fit.gamma) <= 1e-11
            assert fit.fit_residual <= 1e-10
            assert abs(pack.scalar) <= 1e-10
            qe = analysis.quasi_einstein_decompose(pack)
            assert qe.codazzi_residual <= 1e-10
            sv = qe.ricci_singular_values
            assert sv[1] <= 1e-9 * sv[0]
            d = analysis.deszcz_residuals(pack, 0.0)
            assert max(d.weyl, d.ricci, d.gamma_tensor) <= 1e-10
        assert max(gammas) - min(gammas) <= 1e-10


def test_criterion_08_quasi_einstein():
    with criterion(8, "frw_flat quasi-Einstein (1,3) and conformally flat; Goedel compatibility"):
        spec = catalog.frw_flat(1.0).spec
        for p in random_points(spec, 5):
            pack = curvature_pack(spec, p)
            qe = analysis.quasi_einstein_decompose(pack)
            assert qe.residual <= 1e-9
            assert qe.eigen_multiplicities == (1, 3)
            assert max_abs(pack.weyl_0_4) <= 1e-10
        spec = catalog.godel(1.0).spec
        for p in random_points(spec, 5):
            pack = curvature_pack(spec, p)
            assert analysis.compatibility_residual(pack.ricci, pack.weyl_0_4, pack) <= 1e-9


def test_criterion_09_negative_controls():
    with criterion(9, "schwarzschild not CQR; wrong vector fails; random metric has nonzero omega1"):
        spec = catalog.schwarzschild(1.0).spec
        for p in random_points(spec, 3):
            assert analysis.solve_fundamental_vector(curvature_pack(spec, p)).status == "not_cqr"
        cqr = catalog.ppwave_cqr().spec
        pack = curvature_pack(cqr, random_points(cqr, 1)[0])
        assert analysis.annihilation_residual(pack, np.array([0.0, 1.0, 0.0, 0.0])) > 1e-2
        rnd = catalog.random_poly(0).spec
        assert abs(petrov.pontryagin_omega1(curvature_pack(rnd, random_points(rnd, 1)[0]))) > 1e-6


def _json_report(*argv):
    out = io.StringIO()
    code = cli.run(list(argv) + ["--format", "json"], out, io.StringIO())
    return code, out.getvalue()


@pytest.mark.run_last
def test_criterion_10_deterministic_and_fast():
    with criterion(10, "deterministic reports; whole suite under 60 s"):
        for name in ("ppwave_cqr", "schwarzschild", "random_poly"):
            first = _json_report("analyze", "--builtin", name, "--seed", "3")
            second = _json_report("analyze", "--builtin", name, "--seed", "3")
            assert first == second
            json.loads(first[1])
        elapsed = time.perf_counter() - SESSION["start"]
        assert math.isfinite(elapsed) and elapsed < 60.0
