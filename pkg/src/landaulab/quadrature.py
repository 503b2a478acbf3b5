"""Numerical integration over R^3 and R^3 x R^3.

Two rule kinds are supported: tensorized Gauss-Legendre on a box (good
spectral accuracy for rapidly decaying smooth integrands) and the uniform
cell-center rule of a velocity grid.  Pair integration handles the inverse
kernel |v-w|^(-gamma), gamma in [0,1], whose only delicate point is the
coincident-node diagonal; the replacement rule there is configurable.

Summation is deterministic: fixed node ordering, fixed chunk size, numpy
pairwise summation inside a chunk and exact (fsum) accumulation across
chunks, independent of the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NumericError

# Fixed chunk length for pair sums; part of the determinism contract.
PAIR_CHUNK = 256


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights for integration over R^3."""

    nodes: np.ndarray          # (M, 3)
    weights: np.ndarray        # (M,)
    kind: str                  # "tensor-gauss" | "uniform-grid"
    axis_scale: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.nodes.shape[0] != self.weights.shape[0]:
            raise ValueError("nodes and weights must have equal length")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")

    def __len__(self):
        return self.nodes.shape[0]

    def to_csv(self, path):
        from .reporting import write_csv
        rows = np.column_stack([self.nodes, self.weights])
        write_csv(path, ["v_x", "v_y", "v_z", "weight"], rows)


@dataclass(frozen=True)
class SingularKernelPolicy:
    """How |v-w|^(-gamma) is treated when nodes coincide.

    diagonal_rule is one of "exact-cell-average", "ball-equivalent" or
    "skip-diagonal".  The first two replace the kernel value on a
    coincident pair by the average of |u|^(-gamma) over a ball whose
    volume equals the node's quadrature weight, i.e.
    3/(3-gamma) * r_eq^(-gamma) with r_eq = (3 w / (4 pi))^(1/3);
    "skip-diagonal" drops the pair.  For gamma = 0 the kernel is
    identically 1 and no replacement is ever applied, so the three rules
    agree exactly.
    """

    gamma: float
    diagonal_rule: str = "ball-equivalent"

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.diagonal_rule not in (
            "exact-cell-average",
            "ball-equivalent",
            "skip-diagonal",
        ):
            raise ValueError(f"unknown diagonal rule {self.diagonal_rule!r}")

    def diagonal_value(self, node_volume):
        if self.gamma == 0.0:
            return 1.0
        if self.diagonal_rule == "skip-diagonal":
            return 0.0
        r_eq = (3.0 * node_volume / (4.0 * math.pi)) ** (1.0 / 3.0)
        return 3.0 / (3.0 - self.gamma) * r_eq ** (-self.gamma)


def tensor_gauss(n=24, scale=1.15, axis_scale=(1.0, 1.0, 1.0)):
    """Tensorized Gauss-Hermite rule converted to unweighted integration.

    Nodes are the Hermite nodes stretched by scale (per-axis scaling on
    top); weights absorb exp(x^2) so that sum w_k g(node_k) approximates
    the plain integral of g.  The stretch trades resolution of narrow
    integrands against convergence for wide ones; the default handles
    Gaussian-type densities with unit-order temperatures to near machine
    accuracy at 20+ nodes per axis.
    """
    x, w = np.polynomial.hermite.hermgauss(n)
    logw = np.log(w) + x * x
    axes, wts = [], []
    for s in axis_scale:
        axes.append(x * (scale * s))
        wts.append(np.exp(logw) * (scale * s))
    g = np.meshgrid(*axes, indexing="ij")
    nodes = np.column_stack([a.ravel() for a in g])
    gw = np.meshgrid(*wts, indexing="ij")
    weights = gw[0].ravel() * gw[1].ravel() * gw[2].ravel()
    return QuadratureRule(nodes, weights, "tensor-gauss", tuple(axis_scale))


def grid_rule(half_width, n):
    """Uniform cell-center rule on [-L, L]^3 with N cells per axis."""
    h = 2.0 * half_width / n
    axis = -half_width + h * (np.arange(n) + 0.5)
    g = np.meshgrid(axis, axis, axis, indexing="ij")
    nodes = np.column_stack([a.ravel() for a in g])
    weights = np.full(nodes.shape[0], h**3)
    return QuadratureRule(nodes, weights, "uniform-grid", (1.0, 1.0, 1.0))


def single_integral(g, rule):
    """Integrate g over R^3 with the given rule.

    g receives the full (M, 3) node array and must return (M,) values.
    """
    vals = np.asarray(g(rule.nodes), dtype=float)
    if vals.shape != (len(rule),):
        raise ValueError("integrand returned wrong shape")
    bad = ~np.isfinite(vals)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise NumericError(
            f"non-finite integrand value {vals[k]} at node {rule.nodes[k]}"
        )
    return float(np.sum(vals * rule.weights))


def kernel_block(v_block, w_nodes, policy, w_weights, row_offset, same_rule):
    """Block of |v-w|^(-gamma) values with the diagonal rule applied.

    Returns None when gamma == 0 (kernel identically one).  Coincident
    pairs are detected positionally (same rule, same index), which is the
    only way exact coincidence arises for the rules built here.
    """
    if policy is None or policy.gamma == 0.0:
        return None
    d2 = pair_squared_distance(v_block, w_nodes)
    c = v_block.shape[0]
    out = np.empty_like(d2)
    if same_rule:
        rows = np.arange(c)
        cols = row_offset + rows
        keep = cols < w_nodes.shape[0]
        rows, cols = rows[keep], cols[keep]
        saved = d2[rows, cols].copy()
        d2[rows, cols] = 1.0  # silence the singular entries
        np.power(d2, -0.5 * policy.gamma, out=out)
        for r, cidx in zip(rows, cols):
            out[r, cidx] = policy.diagonal_value(w_weights[cidx])
        d2[rows, cols] = saved
    else:
        if np.any(d2 == 0.0):
            raise NumericError(
                "coincident nodes across distinct rules with a singular kernel"
            )
        np.power(d2, -0.5 * policy.gamma, out=out)
    return out


def pair_squared_distance(v_block, w_nodes):
    """|v-w|^2 for a block of v rows against all w nodes, via one GEMM."""
    vv = np.einsum("ij,ij->i", v_block, v_block)
    ww = np.einsum("ij,ij->i", w_nodes, w_nodes)
    d2 = v_block @ w_nodes.T
    d2 *= -2.0
    d2 += vv[:, None]
    d2 += ww[None, :]
    np.maximum(d2, 0.0, out=d2)  # clip roundoff negatives
    return d2


def pair_integral(G, rule_v, rule_w, policy=None, symmetric=False, threads=1):
    """Double integral of G(v, w) * |v-w|^(-gamma) over R^3 x R^3.

    G is called as G(v_block, w_nodes, block_slice) and must return the
    smooth part of the integrand, shape (len(block), M_w).  The singular
    kernel factor, when a policy with gamma > 0 is declared, is applied
    here.  With no policy the integrand values must be finite everywhere,
    otherwise a NumericError is raised (undeclared singularity).

    symmetric=True asserts G(v, w) == G(w, v) and rule_v is rule_w; the
    sum is then taken over the diagonal plus twice the strict upper
    triangle, which halves the work without changing the exact value.
    """
    same = rule_v is rule_w
    if symmetric and not same:
        raise ValueError("symmetric pair integration requires a shared rule")
    nv, w_nodes = rule_v.nodes, rule_w.nodes
    wv, ww = rule_v.weights, rule_w.weights
    m = len(rule_v)

    starts = list(range(0, m, PAIR_CHUNK))

    def chunk_sum(i0):
        i1 = min(i0 + PAIR_CHUNK, m)
        vb = nv[i0:i1]
        vals = np.asarray(G(vb, w_nodes, slice(i0, i1)), dtype=float)
        if vals.shape != (i1 - i0, len(rule_w)):
            raise ValueError("pair integrand returned wrong shape")
        kb = kernel_block(vb, w_nodes, policy, ww, i0, same)
        if kb is None:
            if not np.all(np.isfinite(vals)):
                raise NumericError(
                    "non-finite pair integrand value; declare a singular policy"
                )
        else:
            vals = vals * kb
        vals *= wv[i0:i1, None]
        vals *= ww[None, :]
        if symmetric:
            c = i1 - i0
            rows = np.arange(c)[:, None]
            cols = np.arange(len(rule_w))[None, :]
            upper = cols > (i0 + rows)
            diag = cols == (i0 + rows)
            return 2.0 * float(np.sum(vals, where=upper)) + float(
                np.sum(vals, where=diag)
            )
        return float(np.sum(vals))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            partials = list(ex.map(chunk_sum, starts))
    else:
        partials = [chunk_sum(i0) for i0 in starts]
    return math.fsum(partials)


def sup_over_candidates(g, candidates):
    """Max of g over a finite candidate set, with the maximizing point.

    A lower approximation of the true supremum; g receives the (M, 3)
    candidate array.
    """
    pts = np.asarray(candidates, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("candidate set must be a nonempty (M, 3) array")
    vals = np.asarray(g(pts), dtype=float)
    k = int(np.argmax(vals))
    return float(vals[k]), pts[k].copy()


def default_sup_candidates(radius=5.0, n=5, include_origin=True):
    """The documented default candidate set: n^3 box grid plus the origin."""
    axis = np.linspace(-radius, radius, n)
    g = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.column_stack([a.ravel() for a in g])
    if include_origin:
        pts = np.vstack([pts, np.zeros(3)])
    return pts


def random_sup_candidates(radius, count, seed):
    """Seeded uniform candidates in the box [-radius, radius]^3."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-radius, radius, size=(count, 3))
