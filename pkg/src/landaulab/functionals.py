"""Scalar functionals of a velocity distribution.

Everything the inequality reports consume lives here: directional
temperatures, weighted Lebesgue norms, Fisher information (plain and
relative to the Maxwellian), the kernel-weighted pair moments

    s(f)     = int int f(v) f(w) |v-w|^(-gamma) |v|^4
    sigma(f) = sup_v int f(w) |v-w|^(-gamma) |w|^2
    Sigma(f) = int int f(v) f(w) |v-w|^(-gamma) |w|^2

the weighted Gram determinant used by the older determinant-based bound,
relative entropies (classical and Fermi-Dirac), the log-blocking integral
K = (1/eps) int ln(1 - eps f), and the directional minimum / weighted
supremum factors of the prior quantum bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import distributions as dist
from . import quadrature as quad
from .errors import NumericError, PauliViolationError

TWO_SQRT_PI = 2.0 * math.sqrt(math.pi)
# Maxwellian entropy integral: int M ln M = -3/2 ln(2 pi) - 3/2
_MAXWELLIAN_ENTROPY = -1.5 * math.log(2.0 * math.pi) - 1.5


def _rule_for(f, rule):
    if rule is not None:
        return rule
    if isinstance(f, dist.GridDistribution):
        return f.rule()
    return dist.default_rule()


def directional_temperatures(f, rule=None):
    """Diagonal second moments (I_1, I_2, I_3)."""
    pres = dist.moments(f, rule).pressure
    return np.diag(pres).copy()


def lpq_norm(f, p, q, rule=None):
    """Weighted Lebesgue norm ( int (1+|v|^2)^(pq/2) |f|^p )^(1/p).

    A tail monitor rejects integrands whose outer-shell contribution is
    not negligible (divergence on the truncated box).
    """
    if p < 1.0:
        raise ValueError("p must be at least 1")
    rule = _rule_for(f, rule)
    fv = np.abs(f.evaluate(rule.nodes))
    r2 = np.einsum("ij,ij->i", rule.nodes, rule.nodes)
    vals = (1.0 + r2) ** (0.5 * p * q) * fv**p * rule.weights
    total = float(np.sum(vals))
    edge = float(np.max(np.abs(rule.nodes)))
    outer = np.max(np.abs(rule.nodes), axis=1) > 0.9 * edge
    tail = float(np.sum(vals[outer]))
    if total <= 0.0:
        return 0.0
    if tail > 1e-3 * total:
        raise NumericError(
            f"L^{p}_{q} norm looks divergent: outer shell carries {tail/total:.2%}"
        )
    return total ** (1.0 / p)


def weighted_l2(f, rule=None):
    """|| |.|^2 f ||_{L^2}, the L^2 norm of |v|^2 f(v)."""
    rule = _rule_for(f, rule)
    fv = f.evaluate(rule.nodes)
    r2 = np.einsum("ij,ij->i", rule.nodes, rule.nodes)
    return math.sqrt(float(np.sum(rule.weights * (r2 * fv) ** 2)))


def fisher_information(f, rule=None):
    """int |grad f|^2 / f = int |score|^2 f."""
    rule = _rule_for(f, rule)
    fv = f.evaluate(rule.nodes)
    s = _scores_on(f, rule)
    return float(np.sum(rule.weights * fv * np.einsum("ij,ij->i", s, s)))


def relative_fisher(f, rule=None):
    """int |grad f / f + v|^2 f: Fisher information relative to the
    Maxwellian score -v; vanishes exactly at equilibrium."""
    rule = _rule_for(f, rule)
    fv = f.evaluate(rule.nodes)
    s = _scores_on(f, rule) + rule.nodes
    return float(np.sum(rule.weights * fv * np.einsum("ij,ij->i", s, s)))


def _scores_on(f, rule):
    if isinstance(f, dist.GridDistribution) and rule.kind == "uniform-grid":
        return f.log_gradient_field().reshape(-1, 3)
    return f.log_gradient(rule.nodes)


# ---------------------------------------------------------------------------
# kernel-weighted pair functionals


def pair_fourth_moment(f, gamma, rule=None, policy=None):
    """s(f): fourth moment of v against the pair density with |v-w|^(-gamma)."""
    rule = _rule_for(f, rule)
    policy = policy or quad.SingularKernelPolicy(gamma)
    fv = f.evaluate(rule.nodes)
    r2 = np.einsum("ij,ij->i", rule.nodes, rule.nodes)
    left = fv * r2 * r2

    def integrand(vb, w, sl):
        return left[sl][:, None] * fv[None, :]

    return quad.pair_integral(integrand, rule, rule, policy=policy)


def pair_energy_moment(f, gamma, rule=None, policy=None):
    """Sigma(f): energy moment of w against the pair density with |v-w|^(-gamma)."""
    rule = _rule_for(f, rule)
    policy = policy or quad.SingularKernelPolicy(gamma)
    fv = f.evaluate(rule.nodes)
    r2 = np.einsum("ij,ij->i", rule.nodes, rule.nodes)
    right = fv * r2

    def integrand(vb, w, sl):
        return fv[sl][:, None] * right[None, :]

    return quad.pair_integral(integrand, rule, rule, policy=policy)


def _cross_kernel(points, rule, gamma, policy):
    """|p - node|^(-gamma) for probe points against rule nodes, diagonal-safe."""
    d2 = quad.pair_squared_distance(points, rule.nodes)
    if gamma == 0.0:
        return np.ones_like(d2)
    out = np.empty_like(d2)
    hit = d2 == 0.0
    d2[hit] = 1.0
    np.power(d2, -0.5 * gamma, out=out)
    if np.any(hit):
        rows, cols = np.nonzero(hit)
        for r, c in zip(rows, cols):
            out[r, c] = policy.diagonal_value(rule.weights[c])
    return out


def shifted_energy_sup(f, gamma, rule=None, candidates=None, policy=None):
    """sigma(f): sup_v of int f(w) |v-w|^(-gamma) |w|^2 dw, approximated from
    below over a finite candidate set.  Returns (value, maximizer)."""
    rule = _rule_for(f, rule)
    policy = policy or quad.SingularKernelPolicy(gamma)
    if candidates is None:
        candidates = quad.default_sup_candidates()
    fv = f.evaluate(rule.nodes)
    r2 = np.einsum("ij,ij->i", rule.nodes, rule.nodes)
    weights = rule.weights * fv * r2

    def g(pts):
        k = _cross_kernel(pts, rule, gamma, policy)
        return k @ weights

    return quad.sup_over_candidates(g, candidates)


def tilted_energy_sup(f, gamma, rule=None, candidates=None, policy=None):
    """J(f): sup_v <v>^gamma int f(w) |w-v|^(-gamma) (1+|w|^2) dw."""
    rule = _rule_for(f, rule)
    policy = policy or quad.SingularKernelPolicy(gamma)
    if candidates is None:
        candidates = quad.default_sup_candidates()
    fv = f.evaluate(rule.nodes)
    r2 = np.einsum("ij,ij->i", rule.nodes, rule.nodes)
    weights = rule.weights * fv * (1.0 + r2)

    def g(pts):
        k = _cross_kernel(pts, rule, gamma, policy)
        vals = k @ weights
        p2 = np.einsum("ij,ij->i", pts, pts)
        return (1.0 + p2) ** (0.5 * gamma) * vals

    value, arg = quad.sup_over_candidates(g, candidates)
    return value, arg


def direction_mass_by_pair(f, rule=None, n_angles=256):
    """Per-axis-pair infimum over the circle of the directional mass
    int |c v_i/<v> - s v_j/<v>|^2 f; building block of the inverse bound."""
    rule = _rule_for(f, rule)
    fv = f.evaluate(rule.nodes)
    r2 = np.einsum("ij,ij->i", rule.nodes, rule.nodes)
    wv = rule.weights * fv / (1.0 + r2)
    a = (rule.nodes.T * wv) @ rule.nodes
    theta = np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)
    c, s = np.cos(theta), np.sin(theta)
    out = {}
    for i, j in ((0, 1), (1, 2), (0, 2)):
        vals = c * c * a[i, i] - 2.0 * c * s * a[i, j] + s * s * a[j, j]
        out[(i + 1, j + 1)] = float(np.min(vals))
    return out


def min_direction_inverse(f, rule=None, n_angles=256):
    """Inverse of the smallest directional mass of the normalized direction
    statistics: ( min_{i<j} inf_angle int |c v_i/<v> - s v_j/<v>|^2 f )^(-1).

    The infimum over the circle is discretized on a uniform angle grid, so
    the reported value underestimates the true inverse.
    """
    rule = _rule_for(f, rule)
    fv = f.evaluate(rule.nodes)
    r2 = np.einsum("ij,ij->i", rule.nodes, rule.nodes)
    wv = rule.weights * fv / (1.0 + r2)
    a = (rule.nodes.T * wv) @ rule.nodes  # a_kl = int v_k v_l /(1+|v|^2) f
    theta = np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)
    c, s = np.cos(theta), np.sin(theta)
    best = math.inf
    for i, j in ((0, 1), (1, 2), (0, 2)):
        vals = c * c * a[i, i] - 2.0 * c * s * a[i, j] + s * s * a[j, j]
        best = min(best, float(np.min(vals)))
    if best <= 0.0:
        raise NumericError("degenerate direction statistics")
    return 1.0 / best


def gram_determinant_all(f, rule=None):
    """Weighted Gram determinant of (1, w_i, w_j) for each axis pair."""
    rule = _rule_for(f, rule)
    fv = f.evaluate(rule.nodes)
    r2 = np.einsum("ij,ij->i", rule.nodes, rule.nodes)
    wv = rule.weights * fv / np.sqrt(1.0 + r2)
    m0 = float(np.sum(wv))
    m1 = rule.nodes.T @ wv
    m2 = (rule.nodes.T * wv) @ rule.nodes
    out = {}
    for i, j in ((0, 1), (1, 2), (0, 2)):
        g = np.array(
            [
                [m0, m1[i], m1[j]],
                [m1[i], m2[i, i], m2[i, j]],
                [m1[j], m2[i, j], m2[j, j]],
            ]
        )
        out[(i + 1, j + 1)] = float(np.linalg.det(g))
    return out


def gram_determinant(f, rule=None):
    """Minimum of the pairwise weighted Gram determinants (conservative)."""
    return min(gram_determinant_all(f, rule).values())


# ---------------------------------------------------------------------------
# entropies and quantum functionals


def entropy_rel(f, rule=None):
    """H(f | M) = int f ln f - int M ln M (zero at the Maxwellian for
    normalized states)."""
    rule = _rule_for(f, rule)
    fv = f.evaluate(rule.nodes)
    flogf = np.where(fv > 0.0, fv * np.log(np.maximum(fv, 1e-300)), 0.0)
    return float(np.sum(rule.weights * flogf)) - _MAXWELLIAN_ENTROPY


def fermi_entropy(f, eps, rule=None):
    """S_eps(f) = -(1/eps) int [ eps f ln(eps f) + (1-eps f) ln(1-eps f) ]."""
    rule = _rule_for(f, rule)
    fv = f.evaluate(rule.nodes)
    x = eps * fv
    if np.any(x >= 1.0):
        raise PauliViolationError("eps * f reached 1 on a quadrature node")
    xlx = np.where(x > 0.0, x * np.log(np.maximum(x, 1e-300)), 0.0)
    comp = (1.0 - x) * np.log1p(-x)
    return -float(np.sum(rule.weights * (xlx + comp))) / eps


_EQUILIBRIUM_CACHE = {}


def cached_equilibrium(eps, tol=1e-10):
    key = (round(float(eps), 14), tol)
    if key not in _EQUILIBRIUM_CACHE:
        _EQUILIBRIUM_CACHE[key] = dist.fermi_dirac_equilibrium(eps, tol)
    return _EQUILIBRIUM_CACHE[key]


def fermi_entropy_rel(f, eps, rule=None, equilibrium=None):
    """H(f | M_eps) = S_eps(M_eps) - S_eps(f), nonnegative for normalized f."""
    eq = equilibrium or cached_equilibrium(eps)
    return fermi_entropy(eq, eps, rule) - fermi_entropy(f, eps, rule)


def pauli_log_integral(f, eps, rule=None):
    """K = (1/eps) int ln(1 - eps f); negative, tends to -mass as eps -> 0."""
    rule = _rule_for(f, rule)
    fv = f.evaluate(rule.nodes)
    if np.any(eps * fv >= 1.0):
        raise PauliViolationError("eps * f reached 1 on a quadrature node")
    return float(np.sum(rule.weights * np.log1p(-eps * fv))) / eps


def observed_sup(f, rule=None):
    """Sup of f over quadrature nodes, sharpened by closed-form peaks when
    the family exposes them."""
    rule = _rule_for(f, rule)
    top = float(np.max(f.evaluate(rule.nodes)))
    if hasattr(f, "sup_density"):
        top = max(top, f.sup_density())
    if isinstance(f, dist.AnisotropicGaussian):
        top = max(top, f.evaluate(f.mean))
    if isinstance(f, dist.GaussianMixture):
        for c in f.components:
            top = max(top, f.evaluate(c.mean))
    return top


# ---------------------------------------------------------------------------
# report assembly


@dataclass(frozen=True, eq=False)
class LfdBlock:
    eps: float
    log_blocking: float          # K
    entropy: float               # S_eps(f)
    entropy_rel: float           # H(f | M_eps)
    kappa0: float


@dataclass(frozen=True, eq=False)
class FunctionalReport:
    distribution: str
    gamma: float
    temps: np.ndarray            # directional temperatures I_i
    fisher: float
    fisher_rel: float
    pair_fourth: float           # s
    energy_sup: float            # sigma
    pair_energy: float           # Sigma
    fourth: float
    l2: float
    l2_weighted: float
    l2q6: float
    gram_det: float
    entropy_rel: float
    lfd: LfdBlock | None = None


def functional_report(f, gamma, eps=None, rule=None, pair_rule=None,
                      candidates=None):
    """Assemble every scalar functional for one state and one gamma."""
    rule = _rule_for(f, rule)
    pair_rule = pair_rule or (
        f.rule() if isinstance(f, dist.GridDistribution) else quad.tensor_gauss(16)
    )
    m = dist.moments(f, rule)
    sigma, _ = shifted_energy_sup(f, gamma, pair_rule, candidates)
    block = None
    if eps is not None and eps > 0.0:
        block = LfdBlock(
            eps=eps,
            log_blocking=pauli_log_integral(f, eps, rule),
            entropy=fermi_entropy(f, eps, rule),
            entropy_rel=fermi_entropy_rel(f, eps, rule),
            kappa0=1.0 - eps * observed_sup(f, rule),
        )
    return FunctionalReport(
        distribution=f.label(),
        gamma=gamma,
        temps=directional_temperatures(f, rule),
        fisher=fisher_information(f, rule),
        fisher_rel=relative_fisher(f, rule),
        pair_fourth=pair_fourth_moment(f, gamma, pair_rule),
        energy_sup=sigma,
        pair_energy=pair_energy_moment(f, gamma, pair_rule),
        fourth=m.fourth,
        l2=lpq_norm(f, 2, 0, rule),
        l2_weighted=weighted_l2(f, rule),
        l2q6=lpq_norm(f, 2, 6, rule),
        gram_det=gram_determinant(f, rule),
        entropy_rel=entropy_rel(f, rule),
        lfd=block,
    )
