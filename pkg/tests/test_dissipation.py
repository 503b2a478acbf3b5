import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landaulab import dissipation as dsp
from landaulab import distributions as dist
from landaulab import quadrature as quad
from landaulab.errors import PreconditionError


def diag_gaussian_dissipation(temps):
    """Closed form for diagonal Gaussians at gamma = 0:
    2 sum_{i<j} (T_i - T_j)^2 / (T_i T_j)."""
    t = np.asarray(temps, dtype=float)
    return 2.0 * sum(
        (t[i] - t[j]) ** 2 / (t[i] * t[j])
        for i in range(3) for j in range(i + 1, 3)
    )


unit_vectors = st.tuples(*[st.floats(-3, 3) for _ in range(3)]).map(np.array)


class TestProjectionKernel:
    @given(unit_vectors.filter(lambda z: np.linalg.norm(z) > 1e-3))
    @settings(max_examples=50, deadline=None)
    def test_projection_properties(self, z):
        p = dsp.projection_matrix(z)
        assert np.allclose(p, p.T, atol=1e-14)
        assert np.allclose(p @ p, p, atol=1e-12)
        assert np.allclose(p @ z, 0.0, atol=1e-12 * np.linalg.norm(z))
        assert abs(np.trace(p) - 2.0) < 1e-12

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            dsp.projection_matrix(np.zeros(3))


class TestCrossBracket:
    def test_coincident_points_vanish(self, gauss_mild):
        v = np.array([0.5, -0.2, 1.0])
        assert dsp.cross_bracket(gauss_mild, 1, 2, v, v) == 0.0

    def test_diagonal_gaussian_closed_form(self, gauss_strong):
        v = np.array([1.0, 0.0, 0.0])
        w = np.array([0.0, 1.0, 0.0])
        got = dsp.cross_bracket(gauss_strong, 1, 2, v, w)
        expect = (1.0) * (-1.0) * (1.0 / 1.2 - 1.0 / 0.9)
        assert abs(got - expect) < 1e-14
        assert abs(got - 0.27778) < 1e-5

    @given(
        st.tuples(*[st.floats(-2, 2) for _ in range(3)]),
        st.tuples(*[st.floats(-2, 2) for _ in range(3)]),
        st.sampled_from([(1, 2), (2, 3), (3, 1)]),
    )
    @settings(max_examples=40, deadline=None)
    def test_antisymmetries(self, v, w, pair):
        g = dist.AnisotropicGaussian(np.zeros(3), [1.1, 0.95, 0.95])
        v, w = np.array(v), np.array(w)
        i, j = pair
        q_vw = dsp.cross_bracket(g, i, j, v, w)
        q_wv = dsp.cross_bracket(g, i, j, w, v)
        q_ji = dsp.cross_bracket(g, j, i, v, w)
        # both bracket factors flip sign under the point swap, so the
        # bracket is swap-symmetric; the index swap is what flips the sign
        assert abs(q_vw - q_wv) < 1e-12 * (1 + abs(q_vw))
        assert abs(q_vw + q_ji) < 1e-12 * (1 + abs(q_vw))

    def test_wraparound_index(self, gauss_mild):
        v = np.array([0.7, -0.3, 0.4])
        w = np.array([-0.5, 0.8, 0.1])
        assert dsp.cross_bracket(gauss_mild, 3, 4, v, w) == dsp.cross_bracket(
            gauss_mild, 3, 1, v, w
        )

    def test_lfd_bracket_classical_limit(self, gauss_mild):
        v = np.array([0.7, -0.3, 0.4])
        w = np.array([-0.5, 0.8, 0.1])
        q = dsp.cross_bracket(gauss_mild, 1, 2, v, w)
        r = dsp.cross_bracket_lfd(gauss_mild, 1e-12, 1, 2, v, w)
        assert abs(q - r) < 1e-10 * (1 + abs(q))

    def test_lfd_bracket_two_path(self, gauss_mild):
        eps = 0.05
        rng = np.random.default_rng(3)
        v, w = rng.normal(size=3), rng.normal(size=3)
        got = dsp.cross_bracket_lfd(gauss_mild, eps, 1, 2, v, w)
        sv = gauss_mild.log_gradient(v) / (1 - eps * gauss_mild.evaluate(v))
        sw = gauss_mild.log_gradient(w) / (1 - eps * gauss_mild.evaluate(w))
        z = v - w
        expect = z[0] * (sv[1] - sw[1]) - z[1] * (sv[0] - sw[0])
        assert abs(got - expect) < 1e-13

    def test_lfd_coincident_points_vanish(self, gauss_mild):
        v = np.array([0.5, -0.2, 1.0])
        assert dsp.cross_bracket_lfd(gauss_mild, 0.05, 1, 2, v, v) == 0.0


class TestDissipationForms:
    def test_closed_form_gamma_zero(self, gauss_strong, rule16):
        oracle = diag_gaussian_dissipation([1.2, 0.9, 0.9])
        assert abs(oracle - 1.0 / 3.0) < 1e-15
        d_pi = dsp.dissipation_projection_form(gauss_strong, 0.0, rule16)
        d_q = dsp.dissipation_bracket_form(gauss_strong, 0.0, rule16)
        assert abs(d_pi - oracle) / oracle < 1e-6
        assert abs(d_q - oracle) / oracle < 1e-6

    def test_mild_case_value(self, gauss_mild, rule16):
        oracle = diag_gaussian_dissipation([1.06, 0.97, 0.97])
        got = dsp.dissipation_bracket_form(gauss_mild, 0.0, rule16)
        assert abs(got - oracle) / oracle < 1e-6
        assert abs(oracle - 0.0315) < 1e-4

    @pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0])
    def test_equilibrium_annihilates(self, maxwell, rule16, gamma):
        assert dsp.dissipation_bracket_form(maxwell, gamma, rule16) < 1e-8
        assert dsp.dissipation_projection_form(maxwell, gamma, rule16) < 1e-8

    @pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0])
    def test_forms_agree_on_mixture(self, mixture, rule10, gamma):
        d_pi = dsp.dissipation_projection_form(mixture, gamma, rule10)
        d_q = dsp.dissipation_bracket_form(mixture, gamma, rule10)
        assert abs(d_pi - d_q) <= 1e-10 * max(abs(d_pi), 1e-30)

    def test_nonnegative(self, mixture, rule10):
        for gamma in (0.0, 0.5, 1.0):
            assert dsp.dissipation_bracket_form(mixture, gamma, rule10) >= 0.0


class TestDissipationLfd:
    def test_eps_zero_equals_classical(self, gauss_mild, rule10):
        d0 = dsp.dissipation_bracket_form(gauss_mild, 0.5, rule10)
        dl = dsp.dissipation_lfd(gauss_mild, 0.5, 0.0, rule10)
        assert d0 == dl

    @pytest.mark.parametrize("eps", [1e-3, 0.05, 0.1])
    def test_quantum_equilibrium_annihilates(self, rule16, eps):
        eq = dist.fermi_dirac_equilibrium(eps)
        assert dsp.dissipation_lfd(eq, 1.0, eps, rule16) < 1e-6

    def test_blocking_shrinks_dissipation(self, gauss_mild, rule16):
        # blocking weights (1 - eps f) <= 1 win over the score inflation
        # for these dilute states; the quantum value sits within ten
        # percent below the classical one
        d0 = dsp.dissipation_bracket_form(gauss_mild, 0.0, rule16)
        dl = dsp.dissipation_lfd(gauss_mild, 0.0, 0.05, rule16)
        assert dl <= d0
        assert abs(dl - d0) / d0 < 0.1


class TestGridDissipation:
    def test_gridded_equilibrium(self, maxwell):
        g = dist.to_grid(maxwell, 6.0, 16)
        assert dsp.grid_dissipation(g, 1.0) < 1e-12

    def test_matches_analytic(self, gauss_mild, rule16):
        g = dist.to_grid(gauss_mild, 6.0, 16)
        got = dsp.grid_dissipation(g, 0.0)
        oracle = diag_gaussian_dissipation([1.06, 0.97, 0.97])
        assert abs(got - oracle) / oracle < 1e-3

    def test_coarsening_consistent(self, gauss_mild):
        g = dist.to_grid(gauss_mild, 6.0, 16)
        full = dsp.grid_dissipation(g, 1.0, stride=1)
        coarse = dsp.grid_dissipation(g, 1.0, stride=2)
        assert abs(full - coarse) / full < 5e-3


class TestMomentIdentities:
    @pytest.mark.parametrize("pair", [(1, 2), (2, 3), (3, 1)])
    def test_maxwellian_residuals(self, maxwell, rule24, pair):
        rng = np.random.default_rng(11)
        for v in rng.uniform(-2, 2, size=(5, 3)):
            r1, r2 = dsp.moment_identity_residuals(
                maxwell, pair[0], pair[1], v, rule24)
            assert r1 < 1e-8 and r2 < 1e-8

    def test_parity_at_origin(self, gauss_mild, rule24):
        r1, _ = dsp.moment_identity_residuals(
            gauss_mild, 1, 2, np.zeros(3), rule24)
        assert r1 < 1e-12

    def test_unnormalized_rejected(self, rule16):
        g = dist.AnisotropicGaussian([1.0, 0, 0], [1, 1, 1])
        with pytest.raises(PreconditionError):
            dsp.moment_identity_residuals(g, 1, 2, np.zeros(3), rule16)

    def test_grid_residuals_shrink_fourfold(self, mixture):
        rng = np.random.default_rng(7)
        probes = rng.uniform(-1.5, 1.5, size=(8, 3))
        means = {}
        for n in (12, 24):
            g = dist.to_grid(mixture, 6.0, n)
            res = np.array([
                dsp.moment_identity_residuals(g, 1, 2, v) for v in probes
            ])
            means[n] = res.mean(axis=0)
        ratio = means[12] / means[24]
        assert np.all(ratio >= 4.0)

    def test_lfd_residuals_small(self, gauss_mild, rule24):
        rng = np.random.default_rng(5)
        for v in rng.uniform(-1.5, 1.5, size=(5, 3)):
            r1, r2 = dsp.moment_identity_residuals_lfd(
                gauss_mild, 0.05, 1, 2, v, rule24)
            assert r1 < 1e-6 and r2 < 1e-6

    def test_lfd_residuals_fd_state(self, rule24):
        fa = dist.fermi_dirac_anisotropic(0.05, [1.03, 0.985, 0.985])
        rng = np.random.default_rng(6)
        for v in rng.uniform(-1.5, 1.5, size=(5, 3)):
            r1, r2 = dsp.moment_identity_residuals_lfd(
                fa, 0.05, 2, 3, v, rule24)
            assert r1 < 1e-6 and r2 < 1e-6


class TestTemperatureGap:
    def test_equilibrium_equality(self, maxwell, rule16):
        rep = dsp.temperature_gap_check(maxwell, 0.0, pair_rule=rule16)
        assert np.all(rep.gaps < 1e-8)
        assert rep.gate_passed
        assert rep.all_gaps_bounded

    def test_strong_anisotropy_values(self, gauss_strong, rule16):
        rep = dsp.temperature_gap_check(gauss_strong, 0.0, pair_rule=rule16)
        assert abs(rep.gaps[0] - 0.3) < 1e-12
        expect_bound = math.sqrt(2.0 / 3.0 * (1.0 / 3.0) * 15.12)
        assert abs(rep.bounds[0] - expect_bound) < 1e-3
        assert rep.all_gaps_bounded

    def test_gate_implies_half_bound(self, gauss_mild, rule16):
        rep = dsp.temperature_gap_check(gauss_mild, 0.0, pair_rule=rule16)
        assert abs(rep.gate_value - 0.473) < 5e-3
        assert rep.gate_passed
        assert rep.half_bound_holds
        assert rep.min_temperature == pytest.approx(0.97)
