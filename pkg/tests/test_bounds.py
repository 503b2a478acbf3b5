import math

import numpy as np
import pytest

from landaulab import bounds as bd
from landaulab import distributions as dist
from landaulab import functionals as fn


class TestFisherBound:
    def test_mild_anisotropy_satisfied(self, gauss_mild, rule16):
        r = bd.fisher_bound_report(gauss_mild, 0.0, pair_rule=rule16)
        assert r.gate_passed
        assert abs(r.gate_value - 0.724) < 5e-3
        assert abs(r.lhs - 0.0052519) < 1e-6
        assert abs(r.rhs - 7.18) < 0.05
        assert r.satisfied

    def test_strong_anisotropy_gate_fails(self, gauss_strong, rule16):
        r = bd.fisher_bound_report(gauss_strong, 0.0, pair_rule=rule16)
        assert abs(r.gate_value - 7.7) < 0.1
        assert not r.gate_passed
        assert r.satisfied is None

    def test_equilibrium_degenerate_pass(self, maxwell, rule16):
        r = bd.fisher_bound_report(maxwell, 0.0, pair_rule=rule16)
        assert r.lhs < 1e-10 and r.rhs < 1e-6 and r.gate_value < 1e-6
        assert r.gate_passed and r.satisfied

    def test_normalization_enforced(self, rule16):
        g = dist.AnisotropicGaussian([0.7, 0, 0], [1.6, 1.6, 1.6])
        r = bd.fisher_bound_report(g, 0.0, pair_rule=rule16)
        # the report evaluates the normalized image, which is Maxwellian
        assert r.lhs < 1e-10

    def test_rotation_invariance(self, rule16):
        theta = 0.4
        rot = np.array([
            [math.cos(theta), -math.sin(theta), 0],
            [math.sin(theta), math.cos(theta), 0],
            [0, 0, 1],
        ])
        plain = dist.AnisotropicGaussian(np.zeros(3), [1.05, 0.99, 0.96])
        tilted = dist.AnisotropicGaussian(np.zeros(3), [1.05, 0.99, 0.96], rot)
        r0 = bd.fisher_bound_report(plain, 0.5, pair_rule=rule16)
        r1 = bd.fisher_bound_report(tilted, 0.5, pair_rule=rule16)
        assert r0.gate_passed == r1.gate_passed
        assert r0.satisfied == r1.satisfied
        assert abs(r0.lhs - r1.lhs) < 1e-8
        assert abs(r0.rhs - r1.rhs) < 1e-6 * (1 + r0.rhs)


class TestSimplifiedBound:
    def test_equilibrium_degenerate_pass(self, maxwell, rule16):
        r = bd.simplified_bound_report(maxwell, 0.0, pair_rule=rule16)
        assert r.gate_passed and r.satisfied

    def test_gate_small_delta(self, rule16):
        g = bd.gaussian_delta_family([0.005])[0]
        r = bd.simplified_bound_report(g, 0.0, pair_rule=rule16)
        assert r.gate_passed
        assert r.satisfied

    def test_rhs_dominates_main_logged(self, gauss_mild, rule16):
        r = bd.simplified_bound_report(gauss_mild, 0.0, pair_rule=rule16)
        assert r.extras["rhs_dominates_main"]
        assert r.extras["holder_holds"]


class TestPriorBound:
    def test_equilibrium(self, maxwell, rule16):
        r = bd.prior_bound_report(maxwell, 0.0, pair_rule=rule16)
        assert abs(r.lhs - 3.0) < 1e-8
        assert r.satisfied
        assert abs(r.extras["gram_det"] - 0.11516) < 1e-4

    def test_rhs_grows_as_degeneracy_squared(self, rule16):
        rhs = []
        for t2 in (0.5, 0.1, 0.02):
            g = dist.AnisotropicGaussian(np.zeros(3), [1.0, t2, 1.0])
            rhs.append(bd.prior_bound_report(g, 0.0, pair_rule=rule16).rhs)
        assert rhs[0] < rhs[1] < rhs[2]

    def test_ratio_to_simplified_exceeds_one(self, rule16):
        for d in (0.01, 0.06):
            g = bd.gaussian_delta_family([d])[0]
            base = bd._classical_base(g, 1.0, pair_rule=rule16)
            prior = bd.prior_bound_report(g, 1.0, pair_rule=rule16, base=base)
            simp = bd.simplified_bound_report(g, 1.0, pair_rule=rule16, base=base)
            assert prior.rhs / simp.rhs > 1.0


class TestLfdBound:
    def test_equilibrium_exact_form(self, rule16):
        eps = 0.05
        eq = dist.fermi_dirac_equilibrium(eps)
        r = bd.lfd_bound_report(eq, 0.0, eps, pair_rule=rule16)
        k = r.extras["k_const"]
        # the closed form of the quantum score makes the left side exactly
        # 3 (2b + K)^2, which collapses to ~0 since K = -2b at equilibrium
        lhs_closed = 3.0 * (2.0 * eq.width + k) ** 2
        assert abs(r.lhs - lhs_closed) < 1e-9
        assert r.gate_passed and r.satisfied

    def test_classical_continuity(self, gauss_mild, rule16):
        r0 = bd.fisher_bound_report(gauss_mild, 0.0, pair_rule=rule16)
        r1 = bd.lfd_bound_report(gauss_mild, 0.0, 1e-8, pair_rule=rule16)
        assert abs(r1.lhs - r0.lhs) / r0.lhs < 1e-6

    def test_anisotropic_fd_state(self, rule16):
        fa = dist.fermi_dirac_anisotropic(0.05, [1.03, 0.985, 0.985])
        r = bd.lfd_bound_report(fa, 0.0, 0.05, pair_rule=rule16)
        assert r.gate_passed and r.satisfied
        assert 0.9 < r.kappa0 < 1.0

    def test_lfd_prior_bound(self, rule16):
        eps = 0.05
        eq = dist.fermi_dirac_equilibrium(eps)
        r = bd.lfd_prior_bound_report(eq, 0.0, eps, pair_rule=rule16)
        assert r.satisfied
        assert np.isfinite(r.extras["direction_inverse"])
        assert np.isfinite(r.extras["kernel_sup"])

    def test_lfd_prior_comparison_ratio(self, gauss_mild, rule16):
        base = bd._lfd_base(gauss_mild, 0.0, 0.05, pair_rule=rule16)
        new = bd.lfd_bound_report(gauss_mild, 0.0, 0.05, pair_rule=rule16,
                                  base=base)
        old = bd.lfd_prior_bound_report(gauss_mild, 0.0, 0.05,
                                        pair_rule=rule16, base=base)
        assert old.rhs / new.rhs > 1.0


class TestLfdChain:
    def test_all_links_hold(self, gauss_mild, rule16):
        rep = bd.lfd_chain_report(gauss_mild, 0.0, 0.05, pair_rule=rule16)
        assert rep.all_satisfied
        assert not rep.degenerate

    def test_width_rewrite_is_identity(self, gauss_mild, rule16):
        rep = bd.lfd_chain_report(gauss_mild, 0.0, 0.05, pair_rule=rule16)
        gated = next(l for l in rep.links if l.name == "gated_bound")
        rewrite = next(l for l in rep.links if l.name == "width_rewrite")
        # int |s - Kv|^2 f equals int |s + 2bv|^2 f - 3 (K + 2b)^2 exactly
        # for normalized states
        assert abs(gated.small - rewrite.small) < 1e-8 * (1 + abs(gated.small))

    def test_classical_limit_of_prefactor(self, gauss_mild, rule16):
        rep = bd.lfd_chain_report(gauss_mild, 0.0, 1e-4, pair_rule=rule16)
        final = next(l for l in rep.links if l.name == "entropy_dissipation")
        width = rep.extras["equilibrium_width"]
        shrink = final.small / max(rep.extras["entropy_gap"], 1e-300)
        assert abs(2.0 * width - 1.0) < 1e-3
        assert abs(shrink - 2.0 * width) < 1e-6

    def test_degenerate_warning_at_large_eps(self, rule16):
        eps = 35.0
        eq = dist.fermi_dirac_equilibrium(eps)
        rep = bd.lfd_chain_report(eq, 0.0, eps, pair_rule=rule16)
        assert rep.degenerate


class TestFamilySweep:
    def test_gate_passing_all_satisfied(self, rule16):
        states = bd.gaussian_delta_family([0.0, 0.02, 0.05])
        res = bd.family_sweep(states, [0.0, 1.0], [0.0], pair_rule=rule16)
        assert not res.violations
        s = res.summary["fisher_bound"]
        assert s["instances"] == 6
        assert s["satisfied"] == s["gate_passed"]

    def test_gate_fail_rows_not_errors(self, rule16):
        states = bd.gaussian_delta_family([0.2])
        res = bd.family_sweep(states, [0.0], [0.0], pair_rule=rule16)
        main = [r for r in res.reports if r.name == "fisher_bound"]
        assert not main[0].gate_passed
        assert not res.violations

    def test_quantum_sweep(self, rule16):
        states = bd.gaussian_delta_family([0.02])
        res = bd.family_sweep(states, [0.0], [0.05], pair_rule=rule16)
        names = {r.name for r in res.reports}
        assert names == {"fisher_bound_lfd", "fisher_bound_lfd_prior"}
        assert not res.violations

    def test_corrupt_hook_forces_violation(self, rule16, monkeypatch):
        monkeypatch.setenv(bd._CORRUPT_ENV, "1e-6")
        states = bd.gaussian_delta_family([0.02])
        res = bd.family_sweep(states, [0.0], [0.0], pair_rule=rule16)
        assert res.violations

    def test_delta_family_validation(self):
        with pytest.raises(Exception):
            bd.gaussian_delta_family([2.5])
