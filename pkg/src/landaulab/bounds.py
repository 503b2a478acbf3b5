"""Two-sided evaluation of the dissipation/Fisher inequalities.

Each report evaluates one inequality on one state: the left side, the
right side, the smallness gate that conditions it, and the pass flags.
States are normalized and rotated to diagonal pressure before evaluation,
as every inequality assumes.  A "satisfied" verdict is only meaningful
when the gate passes; numerical slack of slack*(1+|rhs|) absorbs
quadrature error at equality-degenerate points.

Classical reports:
  fisher_bound_report      gated bound on the relative Fisher information,
                           bracket (64/9) s-part + 48 + 32 sqrt(pi) ||.||
  simplified_bound_report  the compact 200 ||f||^2_{L^2_6} D form with its
                           0.062 gate
  prior_bound_report       older determinant-weighted bound (3072/8448
                           constants) for comparison

Quantum (Pauli-blocked) reports:
  lfd_bound_report         the gated quantum bound with kappa0 weights
  lfd_prior_bound_report   prior 510-constant bound with directional and
                           kernel-sup factors
  lfd_chain_report         the entropy chain from the quantum bound down
                           to the relative-entropy/dissipation inequality
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from . import dissipation as dsp
from . import functionals as fn
from .errors import DegenerateInputError

GATE_THRESHOLD = 27.0 / 32.0
SIMPLIFIED_GATE = 0.062
SIMPLIFIED_CONSTANT = 200.0
HOLDER_CONSTANT = 2.0 * math.pi * math.sqrt(math.pi) + math.pi**2 / 4.0
TWO_SQRT_PI = 2.0 * math.sqrt(math.pi)

# Test hook: scales theorem right sides to exercise violation paths.
_CORRUPT_ENV = "LANDAULAB_TEST_CORRUPT_RHS"


def _rhs_scale():
    raw = os.environ.get(_CORRUPT_ENV)
    return float(raw) if raw else 1.0


@dataclass(frozen=True, eq=False)
class InequalityReport:
    name: str
    distribution: str
    gamma: float
    eps: float
    lhs: float
    rhs: float
    gate_value: float
    gate_threshold: float
    gate_passed: bool
    satisfied: bool | None          # None unless the gate passed
    kappa0: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def violated(self):
        return self.gate_passed and self.satisfied is False

    def row(self):
        return {
            "name": self.name,
            "distribution": self.distribution,
            "gamma": self.gamma,
            "eps": self.eps,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "gate_value": self.gate_value,
            "gate_threshold": self.gate_threshold,
            "gate_passed": int(self.gate_passed),
            "satisfied": "" if self.satisfied is None else int(self.satisfied),
            "kappa0": "" if self.kappa0 is None else self.kappa0,
        }


def _satisfied(lhs, rhs, gate_passed, slack):
    if not gate_passed:
        return None
    return bool(lhs <= rhs + slack * (1.0 + abs(rhs)))


def prepare(f, tol=1e-8):
    """Normalize and rotate to diagonal pressure, as the estimates assume."""
    g = dist.normalize(f, tol)
    g, _ = dist.diagonalize(g)
    return g


def _classical_base(f, gamma, rule=None, pair_rule=None):
    g = prepare(f)
    m = dist.moments(g, rule)
    l2 = fn.lpq_norm(g, 2, 0, rule)
    return {
        "state": g,
        "dissipation": dsp.dissipation_bracket_form(g, gamma, pair_rule),
        "fourth": m.fourth,
        "l2": l2,
        "l2_weighted": fn.weighted_l2(g, rule),
        "l2q6": fn.lpq_norm(g, 2, 6, rule),
        "s_factor": 1.0 + TWO_SQRT_PI * l2,
        "fisher_rel": fn.relative_fisher(g, rule),
    }


def fisher_bound_report(f, gamma, rule=None, pair_rule=None, slack=1e-8,
                        base=None):
    """Gated bound: relative Fisher information against dissipation with the
    fourth-moment bracket; gate value fourth * (1 + 2 sqrt(pi) l2) * D."""
    b = base or _classical_base(f, gamma, rule, pair_rule)
    d = b["dissipation"]
    weighted_fourth = b["fourth"] * b["s_factor"]
    gate = weighted_fourth * d
    bracket = (
        64.0 / 9.0 * weighted_fourth
        + 48.0
        + 32.0 * math.sqrt(math.pi) * b["l2_weighted"]
    )
    rhs = bracket * d * _rhs_scale()
    gate_passed = gate <= GATE_THRESHOLD
    return InequalityReport(
        name="fisher_bound",
        distribution=b["state"].label(),
        gamma=gamma,
        eps=0.0,
        lhs=b["fisher_rel"],
        rhs=rhs,
        gate_value=gate,
        gate_threshold=GATE_THRESHOLD,
        gate_passed=gate_passed,
        satisfied=_satisfied(b["fisher_rel"], rhs, gate_passed, slack),
        extras={"dissipation": d, "fourth": b["fourth"], "l2": b["l2"],
                "l2_weighted": b["l2_weighted"], "bracket": bracket},
    )


def simplified_bound_report(f, gamma, rule=None, pair_rule=None, slack=1e-8,
                            base=None):
    """Compact form: 200 ||f||^2_{L^2_6} D with gate ||f||^2_{L^2_6} D <= 0.062.

    Also records the instance-wise consistency of its right side against
    the fisher_bound right side, and the Holder reduction
    fourth*(1+2 sqrt(pi) l2) <= (2 pi sqrt(pi) + pi^2/4) ||f||^2_{L^2_6}.
    """
    b = base or _classical_base(f, gamma, rule, pair_rule)
    d = b["dissipation"]
    l2q6_sq = b["l2q6"] ** 2
    gate = l2q6_sq * d
    rhs = SIMPLIFIED_CONSTANT * l2q6_sq * d
    gate_passed = gate <= SIMPLIFIED_GATE
    main = fisher_bound_report(f, gamma, rule, pair_rule, slack, base=b)
    holder_lhs = b["fourth"] * b["s_factor"]
    holder_rhs = HOLDER_CONSTANT * l2q6_sq
    return InequalityReport(
        name="fisher_bound_simplified",
        distribution=b["state"].label(),
        gamma=gamma,
        eps=0.0,
        lhs=b["fisher_rel"],
        rhs=rhs,
        gate_value=gate,
        gate_threshold=SIMPLIFIED_GATE,
        gate_passed=gate_passed,
        satisfied=_satisfied(b["fisher_rel"], rhs, gate_passed, slack),
        extras={
            "dissipation": d,
            "l2q6": b["l2q6"],
            "rhs_main": main.rhs,
            "rhs_dominates_main": bool(rhs >= main.rhs - 1e-12 * (1 + abs(rhs))),
            "holder_lhs": holder_lhs,
            "holder_rhs": holder_rhs,
            "holder_holds": bool(holder_lhs <= holder_rhs * (1 + 1e-12)),
        },
    )


def prior_bound_report(f, gamma, rule=None, pair_rule=None, slack=1e-8,
                       base=None):
    """Determinant-weighted bound on the plain Fisher information:
    3072 Delta^(-2) { 8448 + 48 sqrt(1+pi) D ||f||_2 }.  No gate."""
    b = base or _classical_base(f, gamma, rule, pair_rule)
    g = b["state"]
    delta = fn.gram_determinant(g, rule)
    lhs = fn.fisher_information(g, rule)
    degenerate = delta < 1e-10
    if degenerate:
        rhs = math.inf
    else:
        rhs = (
            3072.0
            / delta**2
            * (8448.0 + 48.0 * math.sqrt(1.0 + math.pi) * b["dissipation"] * b["l2"])
        )
    return InequalityReport(
        name="fisher_bound_prior",
        distribution=g.label(),
        gamma=gamma,
        eps=0.0,
        lhs=lhs,
        rhs=rhs,
        gate_value=0.0,
        gate_threshold=math.inf,
        gate_passed=True,
        satisfied=_satisfied(lhs, rhs, True, slack),
        extras={"gram_det": delta, "dissipation": b["dissipation"],
                "degenerate": bool(degenerate)},
    )


def _lfd_base(f, gamma, eps, rule=None, pair_rule=None):
    g = prepare(f)
    rule_eff = rule or (
        g.rule() if isinstance(g, dist.GridDistribution) else dist.default_rule()
    )
    m = dist.moments(g, rule_eff)
    l2 = fn.lpq_norm(g, 2, 0, rule_eff)
    kappa0 = 1.0 - eps * fn.observed_sup(g, rule_eff)
    kconst = fn.pauli_log_integral(g, eps, rule_eff)
    fv = g.evaluate(rule_eff.nodes)
    scores = g.log_gradient(rule_eff.nodes) / (1.0 - eps * fv)[:, None]
    shifted = scores - kconst * rule_eff.nodes
    lhs = float(
        np.sum(rule_eff.weights * fv * np.einsum("ij,ij->i", shifted, shifted))
    )
    return {
        "state": g,
        "rule": rule_eff,
        "dissipation": dsp.dissipation_lfd(g, gamma, eps, pair_rule),
        "fourth": m.fourth,
        "l2": l2,
        "l2_weighted": fn.weighted_l2(g, rule_eff),
        "l2q6": fn.lpq_norm(g, 2, 6, rule_eff),
        "s_factor": 1.0 + TWO_SQRT_PI * l2,
        "kappa0": kappa0,
        "k_const": kconst,
        "lhs": lhs,
        "temps": np.diag(m.pressure),
    }


def lfd_bound_report(f, gamma, eps, rule=None, pair_rule=None, slack=1e-8,
                     base=None):
    """Quantum gated bound with blocking floor kappa0 = 1 - eps sup f:
    lhs = int |grad f / (f (1-eps f)) - K v|^2 f, rhs the kappa0-weighted
    bracket times the quantum dissipation."""
    b = base or _lfd_base(f, gamma, eps, rule, pair_rule)
    d = b["dissipation"]
    k0 = b["kappa0"]
    weighted_fourth = b["fourth"] * b["s_factor"]
    gate = weighted_fourth * d / k0
    bracket = (
        32.0 / 3.0 / k0 * weighted_fourth
        + 216.0 * b["s_factor"]
        + 24.0 * (3.0 + TWO_SQRT_PI * b["l2_weighted"])
    )
    rhs = bracket / k0**2 * d * _rhs_scale()
    gate_passed = gate <= GATE_THRESHOLD
    return InequalityReport(
        name="fisher_bound_lfd",
        distribution=b["state"].label(),
        gamma=gamma,
        eps=eps,
        lhs=b["lhs"],
        rhs=rhs,
        gate_value=gate,
        gate_threshold=GATE_THRESHOLD,
        gate_passed=gate_passed,
        satisfied=_satisfied(b["lhs"], rhs, gate_passed, slack),
        kappa0=k0,
        extras={"dissipation": d, "k_const": b["k_const"],
                "fourth": b["fourth"], "bracket": bracket},
    )


def lfd_prior_bound_report(f, gamma, eps, kappa0=None, rule=None,
                           pair_rule=None, slack=1e-8, base=None):
    """Prior quantum bound: 510 (min_i I_i)^(-3) kappa0^(-2) max(1, B)
    max(1, int f <v>^(2+gamma)) J D."""
    b = base or _lfd_base(f, gamma, eps, rule, pair_rule)
    g, rule_eff = b["state"], b["rule"]
    k0 = kappa0 if kappa0 is not None else b["kappa0"]
    bfac = fn.min_direction_inverse(g, rule_eff)
    jfac, _ = fn.tilted_energy_sup(g, gamma, pair_rule or rule_eff)
    fv = g.evaluate(rule_eff.nodes)
    r2 = np.einsum("ij,ij->i", rule_eff.nodes, rule_eff.nodes)
    wmoment = float(
        np.sum(rule_eff.weights * fv * (1.0 + r2) ** (1.0 + 0.5 * gamma))
    )
    min_temp = float(np.min(b["temps"]))
    rhs = (
        510.0
        * min_temp**-3
        * k0**-2
        * max(1.0, bfac)
        * max(1.0, wmoment)
        * jfac
        * b["dissipation"]
    )
    return InequalityReport(
        name="fisher_bound_lfd_prior",
        distribution=g.label(),
        gamma=gamma,
        eps=eps,
        lhs=b["lhs"],
        rhs=rhs,
        gate_value=1.0 - k0,
        gate_threshold=1.0,
        gate_passed=k0 > 0.0,
        satisfied=_satisfied(b["lhs"], rhs, k0 > 0.0, slack),
        kappa0=k0,
        extras={"direction_inverse": bfac, "kernel_sup": jfac,
                "weighted_moment": wmoment, "min_temperature": min_temp,
                "dissipation": b["dissipation"]},
    )


@dataclass(frozen=True, eq=False)
class ChainLink:
    name: str
    small: float          # the side that must not exceed...
    large: float          # ...this one
    satisfied: bool


@dataclass(frozen=True, eq=False)
class LfdChainReport:
    distribution: str
    gamma: float
    eps: float
    gate_value: float       # A_f * D
    gate_passed: bool
    degenerate: bool        # entropy prefactor of the last link nonpositive
    links: tuple
    extras: dict

    @property
    def all_satisfied(self):
        return all(l.satisfied for l in self.links)


def lfd_chain_report(f, gamma, eps, rule=None, pair_rule=None, slack=1e-8):
    """Follow the quantum bound down to relative entropy: the rewriting in
    terms of the equilibrium width, the blocking-integral gap, the
    Csiszar-Kullback and log-Sobolev-like links, and the final
    entropy/dissipation estimate."""
    b = _lfd_base(f, gamma, eps, rule, pair_rule)
    g, rule_eff = b["state"], b["rule"]
    d = b["dissipation"]
    k0 = b["kappa0"]
    kconst = b["k_const"]
    eq = fn.cached_equilibrium(eps)
    width = eq.width

    # A_f, B_f from the gated quantum bound with the Holder reduction, so
    # they depend only on the weighted L^2 norm and kappa0
    l2q6_sq = b["l2q6"] ** 2
    a_factor = 32.0 / 27.0 / k0 * HOLDER_CONSTANT * l2q6_sq
    b_factor = (
        32.0 / 3.0 / k0 * HOLDER_CONSTANT * l2q6_sq
        + 216.0 * (1.0 + TWO_SQRT_PI * b["l2q6"])
        + 24.0 * (3.0 + TWO_SQRT_PI * b["l2q6"])
    ) / k0**2

    fv = g.evaluate(rule_eff.nodes)
    scores = g.log_gradient(rule_eff.nodes) / (1.0 - eps * fv)[:, None]
    shifted = scores + 2.0 * width * rule_eff.nodes
    lhs_width = float(
        np.sum(rule_eff.weights * fv * np.einsum("ij,ij->i", shifted, shifted))
    )
    eqv = eq.evaluate(rule_eff.nodes)
    l1_gap = float(np.sum(rule_eff.weights * np.abs(fv - eqv)))
    entropy_gap = fn.fermi_entropy_rel(g, eps, rule_eff, equilibrium=eq)
    sup_f = fn.observed_sup(g, rule_eff)
    sup_eq = eq.sup_density()
    sup_sq = max(sup_f, sup_eq) ** 2
    k_gap_bound = 2.0 * eps / k0**2 * max(sup_f, sup_eq) * l1_gap
    shrink = 2.0 * width - 24.0 * eps**2 / k0**4 * sup_sq

    def link(name, small, large):
        return ChainLink(
            name, small, large,
            bool(small <= large + slack * (1.0 + abs(large))),
        )

    links = (
        link("gated_bound", b["lhs"], b_factor * d),
        link("width_rewrite", lhs_width - 3.0 * (kconst + 2.0 * width) ** 2,
             b_factor * d),
        link("blocking_gap", abs(kconst + 2.0 * width), k_gap_bound),
        link("csiszar_kullback", l1_gap**2, 2.0 * entropy_gap),
        link("pre_entropy", lhs_width
             - 12.0 * eps**2 / k0**4 * sup_sq * l1_gap**2, b_factor * d),
        link("log_sobolev", 2.0 * width * entropy_gap, lhs_width),
        link("entropy_dissipation", shrink * entropy_gap, b_factor * d),
    )
    return LfdChainReport(
        distribution=g.label(),
        gamma=gamma,
        eps=eps,
        gate_value=a_factor * d,
        gate_passed=a_factor * d <= 1.0,
        degenerate=shrink <= 0.0,
        links=links,
        extras={
            "dissipation": d, "kappa0": k0, "k_const": kconst,
            "equilibrium_width": width, "l1_gap": l1_gap,
            "entropy_gap": entropy_gap, "a_factor": a_factor,
            "b_factor": b_factor, "lhs": b["lhs"], "lhs_width": lhs_width,
        },
    )


@dataclass(frozen=True, eq=False)
class SweepResult:
    reports: tuple
    summary: dict

    @property
    def violations(self):
        return [r for r in self.reports if r.violated]


CLASSICAL_KINDS = ("fisher_bound", "fisher_bound_simplified", "fisher_bound_prior")
LFD_KINDS = ("fisher_bound_lfd", "fisher_bound_lfd_prior")


def family_sweep(states, gammas, epsilons=(0.0,), rule=None, pair_rule=None,
                 slack=1e-8):
    """Evaluate every report kind over states x gammas x epsilons.

    states is an iterable of distributions (labels come from the states).
    For eps = 0 the classical reports run; for eps > 0 the quantum ones.
    Deterministic iteration order; per-instance base quantities are shared
    across report kinds.
    """
    reports = []
    for f in states:
        for gamma in gammas:
            for eps in epsilons:
                if eps == 0.0:
                    base = _classical_base(f, gamma, rule, pair_rule)
                    reports.append(fisher_bound_report(
                        f, gamma, rule, pair_rule, slack, base=base))
                    reports.append(simplified_bound_report(
                        f, gamma, rule, pair_rule, slack, base=base))
                    reports.append(prior_bound_report(
                        f, gamma, rule, pair_rule, slack, base=base))
                else:
                    base = _lfd_base(f, gamma, eps, rule, pair_rule)
                    reports.append(lfd_bound_report(
                        f, gamma, eps, rule, pair_rule, slack, base=base))
                    reports.append(lfd_prior_bound_report(
                        f, gamma, eps, None, rule, pair_rule, slack, base=base))
    summary = {}
    for r in reports:
        s = summary.setdefault(
            r.name, {"instances": 0, "gate_passed": 0, "satisfied": 0,
                     "violations": 0}
        )
        s["instances"] += 1
        if r.gate_passed:
            s["gate_passed"] += 1
            if r.satisfied:
                s["satisfied"] += 1
            else:
                s["violations"] += 1
    return SweepResult(tuple(reports), summary)


def gaussian_delta_family(deltas):
    """The standard anisotropic test family T = (1+d, 1-d/2, 1-d/2)."""
    out = []
    for d in deltas:
        if d < 0 or d >= 2.0:
            raise DegenerateInputError("delta must lie in [0, 2)")
        out.append(dist.AnisotropicGaussian(
            np.zeros(3), np.array([1.0 + d, 1.0 - 0.5 * d, 1.0 - 0.5 * d])
        ))
    return out
