"""Collision entropy dissipation in its two equivalent forms.

The projection form integrates f(v) f(w) |v-w|^(2+gamma) against the
orthogonal projection of score differences; the bracket form integrates
|v-w|^gamma against the squared antisymmetric cross brackets

    q_ij(v, w) = (v_i - w_i)(s_j(v) - s_j(w)) - (v_j - w_j)(s_i(v) - s_i(w)),

with the score s = grad f / f.  The Fermi-Dirac variant replaces the score
by grad f / (f (1 - eps f)) and weights the pair density by f (1 - eps f).
Both forms agree pointwise through the Lagrange identity
|z|^2 |d|^2 - (z.d)^2 = sum_{i<j} (z_i d_j - z_j d_i)^2 and are kept as
independent code paths so that they cross-check each other.

Pair sums run over a fixed chunking of the (symmetric) node-pair triangle;
chunk partials are accumulated with fsum, so results are reproducible and
independent of threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import distributions as dist
from . import quadrature as quad
from .errors import PauliViolationError, PreconditionError

_PAIR_OF = {1: 2, 2: 3, 3: 1, 4: 1}  # wraparound index convention


@dataclass(frozen=True, eq=False)
class ProjectionKernel:
    """Orthogonal projection onto the plane normal to z."""

    z: np.ndarray

    @property
    def matrix(self):
        z = np.asarray(self.z, dtype=float)
        n2 = float(z @ z)
        if n2 == 0.0:
            raise ValueError("projection undefined at z = 0")
        return np.eye(3) - np.outer(z, z) / n2


def projection_matrix(z):
    return ProjectionKernel(np.asarray(z, dtype=float)).matrix


def _axis(i):
    if i not in _PAIR_OF and i != 4:
        raise ValueError("axis index must be 1..4 (4 wraps to 1)")
    return 0 if i == 4 else i - 1


def _point_scores(f, pts):
    """Score grad f / f at points; grid states use their gradient field
    (one-sided at the boundary) so whole-grid sweeps never leave the domain."""
    if isinstance(f, dist.GridDistribution):
        field = f.log_gradient_field()
        idx = f._cell_index(np.atleast_2d(np.asarray(pts, dtype=float)))
        out = field[idx[:, 0], idx[:, 1], idx[:, 2]]
        return out[0] if np.asarray(pts).ndim == 1 else out
    return f.log_gradient(pts)


def cross_bracket(f, i, j, v, w):
    """q_ij(v, w); w may be a batch of points."""
    i, j = _axis(i), _axis(j)
    v = np.asarray(v, dtype=float)
    wpts, scalar = dist._as_points(w)
    sv = _point_scores(f, v)
    sw = _point_scores(f, wpts)
    z = v[None, :] - wpts
    out = z[:, i] * (sv[j] - sw[:, j]) - z[:, j] * (sv[i] - sw[:, i])
    return float(out[0]) if scalar else out


def cross_bracket_lfd(f, eps, i, j, v, w):
    """Fermi-Dirac bracket: the score is grad f / (f (1 - eps f))."""
    i, j = _axis(i), _axis(j)
    v = np.asarray(v, dtype=float)
    wpts, scalar = dist._as_points(w)
    bv = 1.0 - eps * f.evaluate(v)
    bw = 1.0 - eps * f.evaluate(wpts)
    if bv <= 0.0 or np.any(bw <= 0.0):
        raise PauliViolationError("eps * f reached 1 at a bracket point")
    sv = _point_scores(f, v) / bv
    sw = _point_scores(f, wpts) / bw[:, None]
    z = v[None, :] - wpts
    out = z[:, i] * (sv[j] - sw[:, j]) - z[:, j] * (sv[i] - sw[:, i])
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# chunked symmetric pair engine


def _kernel_power(zz, gamma, out=None):
    """zz^(gamma/2) without generic pow for the common exponents."""
    if out is None:
        out = np.empty_like(zz)
    if gamma == 1.0:
        np.sqrt(zz, out=out)
    elif gamma == 0.5:
        np.sqrt(zz, out=out)
        np.sqrt(out, out=out)
    else:
        np.power(zz, 0.5 * gamma, out=out)
    return out


def _pair_quadratic(a_block, b_all):
    """|a_r - b_c|^2-type block via one GEMM: aa + bb - 2 a.b."""
    aa = np.einsum("ij,ij->i", a_block, a_block)
    bb = np.einsum("ij,ij->i", b_all, b_all)
    blk = a_block @ b_all.T
    blk *= -2.0
    blk += aa[:, None]
    blk += bb[None, :]
    return blk


def _triangle_reduce(block, i0, c):
    """2 * (strict upper triangle) + diagonal, for a block whose columns
    start at global index i0 and whose rows are i0..i0+c-1."""
    corner = block[:, :c]
    upper = np.triu(corner, 1)
    diag = float(np.trace(corner))
    rest = float(np.sum(block[:, c:]))
    return 2.0 * (float(np.sum(upper)) + rest) + diag


def _dissipation_pairs(nodes, fw, scores, gamma, form):
    """0.5 * sum over all ordered node pairs of fw_v fw_w K(z) B(v, w),

    with B the projected-difference quadratic (projection form) or the
    bracket-square sum (bracket form); fw already contains quadrature
    weights (and, for the quantum variant, the blocking factors).
    """
    m = nodes.shape[0]
    partials = []
    for i0 in range(0, m, quad.PAIR_CHUNK):
        i1 = min(i0 + quad.PAIR_CHUNK, m)
        c = i1 - i0
        vb, wb = nodes[i0:i1], nodes[i0:]
        sb, sw = scores[i0:i1], scores[i0:]
        if form == "projection":
            zz = _pair_quadratic(vb, wb)
            np.maximum(zz, 0.0, out=zz)
            dd = _pair_quadratic(sb, sw)
            np.maximum(dd, 0.0, out=dd)
            # z.d = v.sv + w.sw - v.sw - w.sv, two GEMMs plus node dots
            vsv = np.einsum("ij,ij->i", vb, sb)
            wsw = np.einsum("ij,ij->i", wb, sw)
            zd = vb @ sw.T
            zd += (wb @ sb.T).T
            zd *= -1.0
            zd += vsv[:, None]
            zd += wsw[None, :]
            val = zz * dd
            zd *= zd
            val -= zd
            if gamma > 0.0:
                val *= _kernel_power(zz, gamma, out=zz)
        else:
            z1 = vb[:, 0, None] - wb[None, :, 0]
            z2 = vb[:, 1, None] - wb[None, :, 1]
            z3 = vb[:, 2, None] - wb[None, :, 2]
            d1 = sb[:, 0, None] - sw[None, :, 0]
            d2 = sb[:, 1, None] - sw[None, :, 1]
            d3 = sb[:, 2, None] - sw[None, :, 2]
            q = z1 * d2
            q -= z2 * d1
            val = q * q
            np.multiply(z2, d3, out=q)
            q -= z3 * d2
            q *= q
            val += q
            np.multiply(z3, d1, out=q)
            q -= z1 * d3
            q *= q
            val += q
            if gamma > 0.0:
                zz = z1 * z1
                zz += z2 * z2
                zz += z3 * z3
                val *= _kernel_power(zz, gamma, out=zz)
        val *= fw[i0:i1, None]
        val *= fw[None, i0:]
        partials.append(_triangle_reduce(val, i0, c))
    return 0.5 * math.fsum(partials)


def _analytic_tables(f, gamma, rule, eps=0.0):
    if isinstance(f, dist.GridDistribution):
        if rule is not None:
            raise ValueError("grid distributions integrate on their own cells")
        rule = f.rule()
        fv = f.values.ravel()
        floor = max(1e-300, 1e-16 * float(np.max(fv)))
        scores = grid_score_field(f.values, f.spacing, eps, floor).reshape(-1, 3)
        weight = fv * rule.weights
        if eps > 0.0:
            weight = weight * (1.0 - eps * fv)
        return rule.nodes, weight, scores
    rule = rule or dist.default_rule()
    fv = f.evaluate(rule.nodes)
    scores = f.log_gradient(rule.nodes)
    if eps > 0.0:
        blocked = 1.0 - eps * fv
        if np.any(blocked <= 0.0):
            raise PauliViolationError("eps * f reached 1 on a quadrature node")
        scores = scores / blocked[:, None]
        weight = fv * blocked * rule.weights
    else:
        weight = fv * rule.weights
    return rule.nodes, weight, scores


def dissipation_projection_form(f, gamma, rule=None):
    """Entropy dissipation via the projected score-difference quadratic."""
    _check_gamma(gamma)
    nodes, fw, scores = _analytic_tables(f, gamma, rule)
    return _dissipation_pairs(nodes, fw, scores, gamma, "projection")


def dissipation_bracket_form(f, gamma, rule=None):
    """Entropy dissipation via the antisymmetric cross brackets."""
    _check_gamma(gamma)
    nodes, fw, scores = _analytic_tables(f, gamma, rule)
    return _dissipation_pairs(nodes, fw, scores, gamma, "bracket")


def dissipation_lfd(f, gamma, eps, rule=None):
    """Fermi-Dirac entropy dissipation (bracket form).

    At eps = 0 this is exactly the classical bracket-form value.
    """
    _check_gamma(gamma)
    nodes, fw, scores = _analytic_tables(f, gamma, rule, eps)
    return _dissipation_pairs(nodes, fw, scores, gamma, "bracket")


def grid_score_field(values, spacing, eps=0.0, floor=1e-300):
    """Finite-difference score field on a grid.

    For eps = 0 this differences ln f; for eps > 0 it differences
    ln(f / (1 - eps f)), whose gradient is exactly grad f / (f (1 - eps f)).
    Differencing the blocked logarithm directly (rather than dividing the
    classical field) keeps Fermi-Dirac equilibria exactly annihilated on
    the grid, their blocked logarithm being a quadratic.  floor bounds the
    logarithm's argument from below.
    """
    clipped = np.maximum(values, floor)
    logf = np.log(clipped)
    if eps > 0.0:
        if np.any(eps * values >= 1.0):
            raise PauliViolationError("eps * f reached 1 on the grid")
        logf = logf - np.log1p(-eps * np.maximum(values, 0.0))
    return dist.finite_difference_gradient(logf, spacing)


def grid_dissipation(grid, gamma, eps=0.0, stride=1, score_field=None):
    """Dissipation of a grid density, bracket form, with optional node
    coarsening (every stride-th cell per axis) to bound the pair cost.

    Scores come from the full-resolution score field before any
    coarsening, so coarsening only affects the pair quadrature.
    """
    _check_gamma(gamma)
    if score_field is None:
        floor = max(1e-300, 1e-16 * float(np.max(grid.values)))
        score_field = grid_score_field(grid.values, grid.spacing, eps, floor)
    sl = slice(None, None, stride)
    vals = grid.values[sl, sl, sl]
    ax = grid.axis()[::stride]
    g = np.meshgrid(ax, ax, ax, indexing="ij")
    nodes = np.column_stack([a.ravel() for a in g])
    scores = score_field[sl, sl, sl].reshape(-1, 3)
    w = (grid.spacing * stride) ** 3
    fv = vals.ravel()
    if eps > 0.0:
        blocked = 1.0 - eps * fv
        if np.any(blocked <= 0.0):
            raise PauliViolationError("eps * f reached 1 on the grid")
        fw = fv * blocked * w
    else:
        fw = fv * w
    return _dissipation_pairs(nodes, fw, scores, gamma, "bracket")


def _check_gamma(gamma):
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")


def _rule_for(f, rule):
    if rule is not None:
        return rule
    if isinstance(f, dist.GridDistribution):
        return f.rule()
    return dist.default_rule()


# ---------------------------------------------------------------------------
# integral identities behind the dissipation estimates


def _require_prepared(f, tol=2e-5):
    # the tolerance admits the truncation-level moment defects of gridded
    # states while still rejecting genuinely unnormalized input
    m = dist.moments(f)
    off = m.pressure - np.diag(np.diag(m.pressure))
    if (
        abs(m.mass - 1.0) > tol
        or float(np.max(np.abs(m.momentum))) > tol
        or abs(m.energy - 3.0) > tol
        or float(np.max(np.abs(off))) > tol
    ):
        raise PreconditionError(
            "identities need a normalized state with diagonal pressure"
        )
    return m


def moment_identity_residuals(f, i, j, v, rule=None, moments_out=None):
    """Residuals of the two exact weighted-bracket integrals at the point v.

    For a normalized f with diagonal pressure and i != j,

      res1 = | v_i s_j(v) - v_j s_i(v) - int f(w) q_ij(v, w) dw |
      res2 = | I_i s_j(v) + v_j + int w_i f(w) q_ij(v, w) dw |

    both vanish exactly; what is measured is quadrature plus, on grids,
    finite-difference error.
    """
    m = moments_out or _require_prepared(f)
    rule = _rule_for(f, rule)
    ia, ja = _axis(i), _axis(j)
    if ia == ja:
        raise ValueError("identity requires i != j")
    v = np.asarray(v, dtype=float)
    sv = _point_scores(f, v)
    fw = f.evaluate(rule.nodes)
    qvals = cross_bracket(f, i, j, v, rule.nodes)
    int_q = float(np.sum(rule.weights * fw * qvals))
    int_wq = float(np.sum(rule.weights * fw * rule.nodes[:, ia] * qvals))
    res1 = abs(v[ia] * sv[ja] - v[ja] * sv[ia] - int_q)
    res2 = abs(m.pressure[ia, ia] * sv[ja] + v[ja] + int_wq)
    return res1, res2


def moment_identity_residuals_lfd(f, eps, i, j, v, rule=None, moments_out=None):
    """Quantum analogues of the bracket identities, with the log-blocking
    integral K = (1/eps) int ln(1 - eps f) and its first moment."""
    m = moments_out or _require_prepared(f)
    rule = _rule_for(f, rule)
    ia, ja = _axis(i), _axis(j)
    if ia == ja:
        raise ValueError("identity requires i != j")
    v = np.asarray(v, dtype=float)
    fv = f.evaluate(v)
    bv = 1.0 - eps * fv
    if bv <= 0.0:
        raise PauliViolationError("eps * f reached 1 at the probe point")
    sv = _point_scores(f, v) / bv
    fw = f.evaluate(rule.nodes)
    bw = 1.0 - eps * fw
    if np.any(bw <= 0.0):
        raise PauliViolationError("eps * f reached 1 on a quadrature node")
    rvals = cross_bracket_lfd(f, eps, i, j, v, rule.nodes)
    log_block = np.log1p(-eps * fw) / eps
    kconst = float(np.sum(rule.weights * log_block))
    log_moment_j = float(np.sum(rule.weights * log_block * rule.nodes[:, ja]))
    int_r = float(np.sum(rule.weights * fw * rvals))
    int_wr = float(np.sum(rule.weights * fw * rule.nodes[:, ia] * rvals))
    res1 = abs(v[ia] * sv[ja] - v[ja] * sv[ia] - int_r)
    res2 = abs(
        m.pressure[ia, ia] * sv[ja] - kconst * v[ja] + log_moment_j + int_wr
    )
    return res1, res2


@dataclass(frozen=True, eq=False)
class TemperatureGapReport:
    """Directional-temperature gaps against the dissipation bound."""

    gaps: np.ndarray            # |I_i - I_j| per pair (12, 23, 31)
    bounds: np.ndarray          # sqrt(2/3 D s_gamma) per pair
    dissipation: float
    pair_fourth: float          # s_gamma
    gate_value: float           # D * s_gamma
    gate_threshold: float       # 27/32
    gate_passed: bool
    min_temperature: float
    half_bound_holds: bool      # all I_i >= 1/2 (meaningful when gate passes)
    all_gaps_bounded: bool


def temperature_gap_check(f, gamma, rule=None, pair_rule=None):
    """Check |I_j - I_i| <= sqrt(2/3 D s_gamma) and the 27/32 smallness gate
    implying every directional temperature is at least one half."""
    from . import functionals  # local import to avoid a module cycle

    m = _require_prepared(f)
    temps = np.diag(m.pressure)
    d_val = dissipation_bracket_form(f, gamma, rule=pair_rule)
    s_val = functionals.pair_fourth_moment(f, gamma, rule=pair_rule)
    pairs = [(0, 1), (1, 2), (2, 0)]
    gaps = np.array([abs(temps[a] - temps[b]) for a, b in pairs])
    bound = math.sqrt(max(2.0 / 3.0 * d_val * s_val, 0.0))
    bounds = np.full(3, bound)
    gate = d_val * s_val
    gate_passed = gate <= 27.0 / 32.0
    tol = 1e-9 * (1.0 + bound)
    return TemperatureGapReport(
        gaps=gaps,
        bounds=bounds,
        dissipation=d_val,
        pair_fourth=s_val,
        gate_value=gate,
        gate_threshold=27.0 / 32.0,
        gate_passed=gate_passed,
        min_temperature=float(np.min(temps)),
        half_bound_holds=float(np.min(temps)) >= 0.5,
        all_gaps_bounded=bool(np.all(gaps <= bounds + tol)),
    )
