import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqrlab import catalog, petrov
from cqrlab.curvature import curvature_pack, kretschmann
from cqrlab.errors import DegenerateFrame, DimensionError, NotNull, SignatureError
from cqrlab.exprdsl import MetricSpec
from cqrlab.tensor import max_abs

POINT4 = (0.1, -0.2, 0.15, 0.05)


def schwarzschild_pack(r, M=1.0):
    return curvature_pack(catalog.schwarzschild(M).spec, (0.0, r, 1.1, 0.3))


def radial_null(r, M=1.0):
    # k^a = (1/f, 1, 0, 0) lowered with diag(-f, 1/f, ...)
    return np.array([-1.0, 1.0 / (1.0 - 2.0 * M / r), 0.0, 0.0])


def random_null_covector(pack, rng):
    """A null covector built in the eigenbasis of the metric."""
    lam, Q = np.linalg.eigh(pack.metric.g.c)
    neg = int(np.argmin(lam))
    u = rng.normal(size=3)
    u /= np.linalg.norm(u)
    coeffs = np.zeros(4)
    coeffs[neg] = 1.0 / math.sqrt(-lam[neg])
    others = [i for i in range(4) if i != neg]
    coeffs[others] = u / np.sqrt(lam[others])
    return pack.metric.g.c @ (Q @ coeffs)


class TestLovelock:
    @pytest.mark.parametrize("seed", range(4))
    def test_vanishes_in_four_dimensions(self, seed):
        pack = curvature_pack(catalog.random_poly(seed).spec, POINT4)
        assert petrov.lovelock4_check(pack) <= 1e-10

    def test_fails_in_five_dimensions(self):
        pack = curvature_pack(catalog.random_poly(1, n=5).spec, POINT4 + (0.2,))
        assert petrov.lovelock4_check(pack) > 1e-3


class TestInvariants:
    @pytest.mark.parametrize("r", [3.0, 5.0, 8.0])
    def test_schwarzschild_closed_form(self, r):
        pack = schwarzschild_pack(r)
        I, J, gap = petrov.weyl_invariants(pack)
        psi2 = -1.0 / r**3
        assert I.real == pytest.approx(3 * psi2**2, rel=1e-12)
        assert J.real == pytest.approx(-(psi2**3), rel=1e-12)
        assert abs(I.imag) <= 1e-12 * abs(I.real) and abs(J.imag) <= 1e-12 * abs(J.real)
        # vacuum: I = C^2 / 16
        assert I.real == pytest.approx(kretschmann(pack) / 16, rel=1e-12)
        assert gap <= 1e-9

    def test_levi_civita_normalization(self):
        pack = schwarzschild_pack(4.0)
        eps = petrov.levi_civita(pack)
        g_inv = pack.metric.g_inv.c
        full = np.einsum("abcd,ae,bf,cg,dh,efgh->", eps, g_inv, g_inv, g_inv, g_inv, eps)
        # Lorentzian signature: eps_abcd eps^abcd = -24
        assert full == pytest.approx(-24.0, rel=1e-12)


class TestClassification:
    def test_flat_is_type_o(self):
        pack = curvature_pack(catalog.minkowski4().spec, (0.0, 0.0, 0.0, 0.0))
        rep = petrov.bel_debever_classify(pack, np.array([-1.0, 1.0, 0.0, 0.0]))
        assert rep.petrov_class == "O"

    def test_pp_wave_is_type_n(self, cqr_entry):
        pack = curvature_pack(cqr_entry.spec, (0.3, 0.1, -0.2, 0.4))
        rep = petrov.bel_debever_classify(pack, np.array([1.0, 0.0, 0.0, 0.0]))
        assert rep.petrov_class == "N"
        assert rep.invariant_I == 0 and rep.invariant_J == 0

    @pytest.mark.parametrize("r", [3.0, 5.0, 8.0])
    def test_schwarzschild_is_type_d_along_radial_null(self, r):
        rep = petrov.bel_debever_classify(schwarzschild_pack(r), radial_null(r))
        assert rep.petrov_class == "II_or_D"
        n_level, iii_level, ii_level = rep.bel_debever_residuals
        assert n_level > 1e-3 and iii_level > 1e-3 and ii_level <= 1e-12

    def test_non_aligned_null_vector(self):
        r = 4.0
        f = 1.0 - 2.0 / r
        # null but tilted into the angular direction: k^a = (1/sqrt(f), 0, 0, 1/(r sin th)) scaled
        th = 1.1
        k_up = np.array([1.0 / math.sqrt(f), 0.0, 0.0, 1.0 / (r * math.sin(th))])
        k = np.diag([-f, 1 / f, r**2, (r * math.sin(th)) ** 2]) @ k_up
        rep = petrov.bel_debever_classify(schwarzschild_pack(r), k)
        assert rep.petrov_class == "not_aligned"

    def test_rejects_non_null(self):
        with pytest.raises(NotNull):
            petrov.bel_debever_classify(schwarzschild_pack(4.0), np.array([1.0, 0.0, 0.0, 0.0]))

    def test_rejects_zero_vector(self):
        with pytest.raises(NotNull):
            petrov.bel_debever_classify(schwarzschild_pack(4.0), np.zeros(4))

    def test_requires_dimension_four(self):
        pack = curvature_pack(catalog.random_poly(1, n=5).spec, POINT4 + (0.2,))
        with pytest.raises(DimensionError):
            petrov.bel_debever_classify(pack, np.ones(5))

    def test_requires_lorentzian_signature(self):
        pack = curvature_pack(catalog.s3_sphere().spec, (0.7, 1.1, 0.3))
        with pytest.raises(DimensionError):
            petrov.weyl_invariants(pack)
        riemannian = MetricSpec.from_strings(
            "euclid", ("a", "b", "c", "d"), {(0, 0): "1 + a^2", (1, 1): "1", (2, 2): "1", (3, 3): "1"}
        )
        with pytest.raises(SignatureError):
            petrov.weyl_invariants(curvature_pack(riemannian, POINT4))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 50), st.integers(0, 2**31))
def test_degeneracy_chain_is_monotone(seed, kseed):
    # C k = 0 forces the deeper levels: both are bounded by multiples of the N level
    pack = curvature_pack(catalog.random_poly(seed).spec, POINT4)
    k = random_null_covector(pack, np.random.default_rng(kseed))
    n_level, iii_level, ii_level = petrov.bel_debever_levels(pack, k)
    k_up = pack.metric.raise_index(k)
    k_low = k / max_abs(k_up)
    assert iii_level <= 2 * max_abs(k_low) * n_level * (1 + 1e-12) + 1e-15
    assert ii_level <= 16 * max_abs(k_low) ** 2 * n_level * (1 + 1e-12) + 1e-15


class TestPontryagin:
    @pytest.mark.parametrize("seed", range(3))
    def test_random_metric_has_nonzero_form(self, seed):
        pack = curvature_pack(catalog.random_poly(seed).spec, POINT4)
        assert abs(petrov.pontryagin_omega1(pack)) > 1e-6

    @pytest.mark.parametrize("seed", range(3))
    def test_weyl_and_riemann_agree(self, seed):
        pack = curvature_pack(catalog.random_poly(seed).spec, POINT4)
        w = petrov.pontryagin_form(pack, "weyl")
        r = petrov.pontryagin_form(pack, "riemann")
        assert max_abs(w - r) <= 1e-9 * (1 + max_abs(w))

    def test_form_is_alternating(self):
        pack = curvature_pack(catalog.random_poly(0).spec, POINT4)
        w = petrov.pontryagin_form(pack)
        assert max_abs(w + w.transpose(1, 0, 2, 3)) <= 1e-15
        assert max_abs(w + w.transpose(0, 3, 2, 1)) <= 1e-15

    def test_frame_is_multilinear(self):
        pack = curvature_pack(catalog.random_poly(0).spec, POINT4)
        frame = np.random.default_rng(5).normal(size=(4, 4))
        value = petrov.pontryagin_omega1(pack, frame)
        # a 4-form on a 4-d space scales with the determinant
        assert value == pytest.approx(np.linalg.det(frame) * petrov.pontryagin_omega1(pack), rel=1e-10)

    def test_cqr_fixture_vanishes(self, cqr_entry):
        pack = curvature_pack(cqr_entry.spec, (0.3, 0.1, -0.2, 0.4))
        assert abs(petrov.pontryagin_omega1(pack)) <= 1e-11
        # type N bivectors k^a: tr(k^a k^b) = 0 for every pair
        assert petrov.weyl_pair_trace_norm(pack) <= 1e-12
        assert petrov.pontryagin_omega2_contraction(pack) <= 1e-12

    def test_pair_trace_nonzero_for_schwarzschild(self):
        pack = schwarzschild_pack(4.0)
        assert petrov.weyl_pair_trace_norm(pack) > 1e-3
        assert petrov.pontryagin_omega2_contraction(pack) > 1e-6

    def test_degenerate_frame(self):
        pack = curvature_pack(catalog.random_poly(0).spec, POINT4)
        frame = np.eye(4)
        frame[3] = frame[2]
        with pytest.raises(DegenerateFrame):
            petrov.pontryagin_omega1(pack, frame)
        with pytest.raises(DegenerateFrame):
            petrov.pontryagin_omega1(pack, np.eye(3))

    def test_wrong_dimension(self):
        pack = curvature_pack(catalog.s3_sphere().spec, (0.7, 1.1, 0.3))
        with pytest.raises(DimensionError):
            petrov.pontryagin_omega1(pack)


class TestLorentzianSuite:
    def test_cqr_fixture(self, cqr_entry):
        pack = curvature_pack(cqr_entry.spec, (0.3, 0.1, -0.2, 0.4))
        rep = petrov.lorentzian4_suite(cqr_entry.spec, pack)
        assert rep.nullity <= 1e-12
        assert rep.kernel_dimension == 1
        # du is covariantly constant and the fixture is vacuum
        for value in (
            rep.ricci_eigen_residual,
            rep.geodesic_residual,
            rep.closedness,
            rep.divergence,
            rep.special_riemann_residual,
        ):
            assert value <= 1e-10
        assert rep.ricci_eigenvalue == 0.0

    def test_spacelike_control_fails_nullity(self, cqr_entry):
        pack = curvature_pack(cqr_entry.spec, (0.3, 0.1, -0.2, 0.4))
        rep = petrov.lorentzian4_suite(cqr_entry.spec, pack, ("0", "0", "1", "0"))
        # g^{xx} = -1
        assert rep.nullity == pytest.approx(1.0)
        assert rep.closedness <= 1e-15

    def test_zero_vector(self, cqr_entry):
        pack = curvature_pack(cqr_entry.spec, (0.3, 0.1, -0.2, 0.4))
        with pytest.raises(NotNull):
            petrov.lorentzian4_suite(cqr_entry.spec, pack, ("0", "0", "0", "0"))

    def test_spacelike_control_on_non_vacuum_fixture(self, concircular_entry):
        spec = concircular_entry.spec
        pack = curvature_pack(spec, (2.0, 0.1, 0.3, -0.4))
        H = "u^-4*(x^2 - y^2) + u^2*(x^2 + y^2)"
        # A_v = A_x = 1/sqrt(1 + H): g^vv = -H and g^xx = -1 give A.A = -1
        unit = f"1/sqrt(1 + {H})"
        rep = petrov.lorentzian4_suite(spec, pack, ("0", unit, unit, "0"))
        assert rep.nullity == pytest.approx(1.0, rel=1e-12)
        assert rep.ricci_eigen_residual > 1e-9
        assert rep.geodesic_residual > 1e-9
