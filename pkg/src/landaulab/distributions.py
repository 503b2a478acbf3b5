"""Velocity distributions on R^3.

Analytic families (anisotropic Gaussians, their mixtures, Fermi-Dirac
profiles) carry exact densities and exact logarithmic gradients; grid
densities are piecewise constant with finite-difference log gradients.
All states are immutable; the normalization convention throughout the
package is mass 1, zero mean velocity, energy integral 3, for which the
equilibrium is the standard Maxwellian M(v) = (2 pi)^(-3/2) exp(-|v|^2/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import (
    DegenerateInputError,
    DomainError,
    NumericError,
    SaturationError,
)
from . import quadrature as quad

LOG_FLOOR = 1e-300


def _as_points(v):
    pts = np.asarray(v, dtype=float)
    if pts.ndim == 1:
        return pts[None, :], True
    return pts, False


def finite_difference_gradient(scalar_field, spacing, order=2):
    """Gradient of a cubic grid field by central differences.

    order=2 uses the three-point stencil; order=4 the five-point one on
    deep-interior cells (falling back to three points one cell from the
    wall).  Both are exact for quadratic fields; the boundary planes use
    the one-sided second-order stencil, likewise quadratic-exact.
    """
    out = np.empty(scalar_field.shape + (3,))
    for d in range(3):
        g = np.empty_like(scalar_field)
        lf = np.moveaxis(scalar_field, d, 0)
        gd = np.moveaxis(g, d, 0)
        gd[1:-1] = (lf[2:] - lf[:-2]) / (2.0 * spacing)
        if order == 4 and lf.shape[0] >= 5:
            gd[2:-2] = (
                lf[:-4] - 8.0 * lf[1:-3] + 8.0 * lf[3:-1] - lf[4:]
            ) / (12.0 * spacing)
        gd[0] = (-3.0 * lf[0] + 4.0 * lf[1] - lf[2]) / (2.0 * spacing)
        gd[-1] = (3.0 * lf[-1] - 4.0 * lf[-2] + lf[-3]) / (2.0 * spacing)
        out[..., d] = g
    return out


def _check_rotation(r, tol=1e-10):
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError("rotation must be 3x3")
    if not np.allclose(r @ r.T, np.eye(3), atol=tol):
        raise ValueError("rotation must be orthogonal")
    if np.linalg.det(r) < 0:
        raise ValueError("rotation must have determinant +1")
    return r


@dataclass(frozen=True, eq=False)
class MomentSummary:
    """Mass, momentum, energy, pressure tensor and fourth moment of f."""

    mass: float
    momentum: np.ndarray          # (3,)
    energy: float                 # integral of |v|^2 f
    pressure: np.ndarray          # (3, 3), integral of v_i v_j f
    fourth: float                 # integral of |v|^4 f


@dataclass(frozen=True, eq=False)
class AnisotropicGaussian:
    """Gaussian with directional temperatures T in an orthonormal frame R.

    Density N(v; mean, R diag(T) R^T); integrates to one by construction.
    """

    mean: np.ndarray
    temps: np.ndarray
    frame: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "temps", np.asarray(self.temps, dtype=float))
        object.__setattr__(self, "frame", _check_rotation(self.frame))
        if self.mean.shape != (3,) or self.temps.shape != (3,):
            raise ValueError("mean and temps must be 3-vectors")
        if np.any(self.temps <= 0):
            raise ValueError("temperatures must be positive")
        cov = self.frame @ np.diag(self.temps) @ self.frame.T
        prec = self.frame @ np.diag(1.0 / self.temps) @ self.frame.T
        lognorm = -1.5 * math.log(2.0 * math.pi) - 0.5 * float(
            np.sum(np.log(self.temps))
        )
        object.__setattr__(self, "_cov", cov)
        object.__setattr__(self, "_prec", prec)
        object.__setattr__(self, "_lognorm", lognorm)

    @property
    def covariance(self):
        return self._cov

    def evaluate(self, v):
        pts, scalar = _as_points(v)
        d = pts - self.mean
        q = np.einsum("ij,jk,ik->i", d, self._prec, d)
        out = np.exp(self._lognorm - 0.5 * q)
        return float(out[0]) if scalar else out

    def log_gradient(self, v):
        pts, scalar = _as_points(v)
        g = -(pts - self.mean) @ self._prec.T
        return g[0] if scalar else g

    def label(self):
        t = ",".join(f"{x:g}" for x in self.temps)
        u = ",".join(f"{x:g}" for x in self.mean)
        tag = f"gaussian(T=[{t}]"
        if np.any(self.mean != 0.0):
            tag += f",u=[{u}]"
        if not np.allclose(self.frame, np.eye(3)):
            tag += ",rotated"
        return tag + ")"


def maxwellian():
    """The normalized Maxwellian equilibrium."""
    return AnisotropicGaussian(np.zeros(3), np.ones(3))


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Convex combination of anisotropic Gaussians; weights sum to one."""

    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.weights) != len(self.components) or len(self.components) == 0:
            raise ValueError("need matching, nonempty weights and components")
        if np.any(self.weights <= 0):
            raise ValueError("mixture weights must be positive")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to one")

    def evaluate(self, v):
        pts, scalar = _as_points(v)
        out = np.zeros(pts.shape[0])
        for w, c in zip(self.weights, self.components):
            out += w * c.evaluate(pts)
        return float(out[0]) if scalar else out

    def log_gradient(self, v):
        pts, scalar = _as_points(v)
        num = np.zeros_like(pts)
        den = np.zeros(pts.shape[0])
        for w, c in zip(self.weights, self.components):
            fv = w * c.evaluate(pts)
            num += fv[:, None] * c.log_gradient(pts)
            den += fv
        g = num / den[:, None]
        return g[0] if scalar else g

    def label(self):
        return f"mixture({len(self.components)} components)"


@dataclass(frozen=True, eq=False)
class GridDistribution:
    """Piecewise-constant density on the cell centers of [-L, L]^3."""

    half_width: float
    values: np.ndarray
    sample_info: dict | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 3 or len(set(vals.shape)) != 1:
            raise ValueError("values must be a cubic (N, N, N) array")
        if np.any(vals < 0):
            raise ValueError("grid values must be nonnegative")
        if self.half_width <= 0:
            raise ValueError("half width must be positive")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def spacing(self):
        return 2.0 * self.half_width / self.n

    def axis(self):
        return -self.half_width + self.spacing * (np.arange(self.n) + 0.5)

    def rule(self):
        return quad.grid_rule(self.half_width, self.n)

    def _cell_index(self, pts):
        L, h = self.half_width, self.spacing
        if np.any(np.abs(pts) > L):
            raise DomainError("point outside the grid box")
        idx = np.floor((pts + L) / h).astype(int)
        np.clip(idx, 0, self.n - 1, out=idx)
        return idx

    def evaluate(self, v):
        pts, scalar = _as_points(v)
        idx = self._cell_index(pts)
        out = self.values[idx[:, 0], idx[:, 1], idx[:, 2]]
        return float(out[0]) if scalar else out.copy()

    def log_gradient(self, v):
        """Central difference of log density at the containing cell."""
        pts, scalar = _as_points(v)
        idx = self._cell_index(pts)
        if np.any(idx < 1) or np.any(idx > self.n - 2):
            raise DomainError("log gradient needs an interior cell")
        g = np.empty_like(pts)
        two_h = 2.0 * self.spacing
        for k, i in enumerate(idx):
            block = self.values[
                i[0] - 1 : i[0] + 2, i[1] - 1 : i[1] + 2, i[2] - 1 : i[2] + 2
            ]
            if np.any(block <= 0.0):
                raise DomainError("zero density near requested point")
            g[k, 0] = math.log(block[2, 1, 1] / block[0, 1, 1]) / two_h
            g[k, 1] = math.log(block[1, 2, 1] / block[1, 0, 1]) / two_h
            g[k, 2] = math.log(block[1, 1, 2] / block[1, 1, 0]) / two_h
        return g[0] if scalar else g

    def log_gradient_field(self, order=4):
        """Log-density gradient at every cell: central differences (wide
        stencil deep inside), one-sided second order at the boundary
        planes; exact for Gaussian log densities at any order."""
        logf = np.log(np.maximum(self.values, LOG_FLOOR))
        return finite_difference_gradient(logf, self.spacing, order=order)

    def to_csv(self, path):
        from .reporting import write_csv
        ax = self.axis()
        g = np.meshgrid(ax, ax, ax, indexing="ij")
        rows = np.column_stack(
            [g[0].ravel(), g[1].ravel(), g[2].ravel(), self.values.ravel()]
        )
        write_csv(path, ["v_x", "v_y", "v_z", "f"], rows)

    def label(self):
        return f"grid(L={self.half_width:g},N={self.n})"


@dataclass(frozen=True, eq=False)
class FermiDiracState:
    """Quantum equilibrium a e^(-b|v|^2) / (1 + eps a e^(-b|v|^2)).

    Constructed by fermi_dirac_equilibrium so that mass is 1 and energy 3;
    eps * density < 1 holds pointwise for any positive coefficients.
    """

    eps: float
    coeff: float          # a
    width: float          # b

    def __post_init__(self):
        if min(self.eps, self.coeff, self.width) <= 0:
            raise ValueError("eps, coeff and width must be positive")

    def _phi(self, pts):
        r2 = np.einsum("ij,ij->i", pts, pts)
        return self.coeff * np.exp(-self.width * r2)

    def evaluate(self, v):
        pts, scalar = _as_points(v)
        phi = self._phi(pts)
        out = phi / (1.0 + self.eps * phi)
        return float(out[0]) if scalar else out

    def log_gradient(self, v):
        pts, scalar = _as_points(v)
        phi = self._phi(pts)
        blocked = 1.0 - self.eps * phi / (1.0 + self.eps * phi)  # 1 - eps f
        g = -2.0 * self.width * pts * blocked[:, None]
        return g[0] if scalar else g

    def sup_density(self):
        return self.coeff / (1.0 + self.eps * self.coeff)

    def label(self):
        return f"fermi_dirac(eps={self.eps:g})"


@dataclass(frozen=True, eq=False)
class FermiDiracAnisotropic:
    """Fermi-Dirac profile with directional widths, a e^(-sum b_i v_i^2)
    Pauli-blocked the same way as the equilibrium.

    Built by fermi_dirac_anisotropic to match mass 1 and prescribed
    directional temperatures summing to 3.
    """

    eps: float
    coeff: float
    widths: np.ndarray    # (3,)

    def __post_init__(self):
        object.__setattr__(self, "widths", np.asarray(self.widths, dtype=float))
        if self.eps <= 0 or self.coeff <= 0 or np.any(self.widths <= 0):
            raise ValueError("eps, coeff and widths must be positive")

    def _phi(self, pts):
        q = pts * pts @ self.widths
        return self.coeff * np.exp(-q)

    def evaluate(self, v):
        pts, scalar = _as_points(v)
        phi = self._phi(pts)
        out = phi / (1.0 + self.eps * phi)
        return float(out[0]) if scalar else out

    def log_gradient(self, v):
        pts, scalar = _as_points(v)
        phi = self._phi(pts)
        blocked = 1.0 - self.eps * phi / (1.0 + self.eps * phi)
        g = -2.0 * pts * self.widths[None, :] * blocked[:, None]
        return g[0] if scalar else g

    def sup_density(self):
        return self.coeff / (1.0 + self.eps * self.coeff)

    def label(self):
        b = ",".join(f"{x:g}" for x in self.widths)
        return f"fermi_dirac_aniso(eps={self.eps:g},b=[{b}])"


Distribution = (
    AnisotropicGaussian
    | GaussianMixture
    | GridDistribution
    | FermiDiracState
    | FermiDiracAnisotropic
)


def evaluate(f, v):
    """Density of f at one point or an (M, 3) batch."""
    return f.evaluate(v)


def log_gradient(f, v):
    """grad f / f at one point or an (M, 3) batch."""
    return f.log_gradient(v)


def label(f):
    return f.label()


# ---------------------------------------------------------------------------
# moments


def _gaussian_moments(g: AnisotropicGaussian):
    u, cov = g.mean, g.covariance
    tr = float(np.trace(cov))
    u2 = float(u @ u)
    energy = tr + u2
    pressure = cov + np.outer(u, u)
    fourth = (
        u2 * u2
        + 4.0 * float(u @ cov @ u)
        + tr * tr
        + 2.0 * float(np.trace(cov @ cov))
        + 2.0 * u2 * tr
    )
    return MomentSummary(1.0, u.copy(), energy, pressure, fourth)


def _grid_moments(g: GridDistribution):
    vals = g.values
    w = g.spacing ** 3
    mass = w * float(np.sum(vals))
    if mass <= 0.0:
        raise DegenerateInputError("grid distribution has zero mass")
    ax = g.axis()
    sx = np.sum(vals, axis=(1, 2))
    sy = np.sum(vals, axis=(0, 2))
    sz = np.sum(vals, axis=(0, 1))
    momentum = w * np.array([ax @ sx, ax @ sy, ax @ sz])
    pressure = np.empty((3, 3))
    pressure[0, 0] = w * float(ax**2 @ sx)
    pressure[1, 1] = w * float(ax**2 @ sy)
    pressure[2, 2] = w * float(ax**2 @ sz)
    pressure[0, 1] = pressure[1, 0] = w * float(ax @ np.sum(vals, axis=2) @ ax)
    pressure[0, 2] = pressure[2, 0] = w * float(ax @ np.sum(vals, axis=1) @ ax)
    pressure[1, 2] = pressure[2, 1] = w * float(ax @ np.sum(vals, axis=0) @ ax)
    energy = float(np.trace(pressure))
    r2 = ax[:, None, None] ** 2 + ax[None, :, None] ** 2 + ax[None, None, :] ** 2
    fourth = w * float(np.sum(vals * r2 * r2))
    return MomentSummary(mass, momentum, energy, pressure, fourth)


def _radial_gl(n=240):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


_RADIAL_X, _RADIAL_W = _radial_gl()


def _fd_radial(eps, coeff, width, powers):
    """4 pi * integral r^p phi/(1+eps phi) dr for each p in powers."""
    span = math.sqrt((47.0 + max(0.0, math.log1p(coeff))) / width)
    r = 0.5 * span * (_RADIAL_X + 1.0)
    w = 0.5 * span * _RADIAL_W
    phi = coeff * np.exp(-width * r * r)
    dens = phi / (1.0 + eps * phi)
    return [4.0 * math.pi * float(np.sum(w * r**p * dens)) for p in powers]


def _fd_moments(g: FermiDiracState):
    mass, energy, fourth = _fd_radial(g.eps, g.coeff, g.width, (2, 4, 6))
    return MomentSummary(
        mass, np.zeros(3), energy, np.diag([energy / 3.0] * 3), fourth
    )


def _quadrature_moments(f, rule):
    vals = f.evaluate(rule.nodes)
    w = vals * rule.weights
    mass = float(np.sum(w))
    if mass <= 0.0:
        raise DegenerateInputError("distribution has zero mass on the rule")
    momentum = rule.nodes.T @ w
    pressure = (rule.nodes.T * w) @ rule.nodes
    r2 = np.einsum("ij,ij->i", rule.nodes, rule.nodes)
    energy = float(r2 @ w)
    fourth = float((r2 * r2) @ w)
    return MomentSummary(mass, momentum, energy, pressure, fourth)


_DEFAULT_RULE = None


def default_rule():
    global _DEFAULT_RULE
    if _DEFAULT_RULE is None:
        _DEFAULT_RULE = quad.tensor_gauss(24)
    return _DEFAULT_RULE


def moments(f, rule=None):
    """All moment blocks of f in one pass.

    Gaussian families use closed forms; grids use their own cell rule;
    the isotropic Fermi-Dirac state uses radial quadrature.
    """
    if isinstance(f, AnisotropicGaussian):
        return _gaussian_moments(f)
    if isinstance(f, GaussianMixture):
        parts = [_gaussian_moments(c) for c in f.components]
        wts = f.weights
        return MomentSummary(
            float(np.sum(wts)),
            np.sum([w * p.momentum for w, p in zip(wts, parts)], axis=0),
            float(np.sum([w * p.energy for w, p in zip(wts, parts)])),
            np.sum([w * p.pressure for w, p in zip(wts, parts)], axis=0),
            float(np.sum([w * p.fourth for w, p in zip(wts, parts)])),
        )
    if isinstance(f, GridDistribution):
        return _grid_moments(f)
    if isinstance(f, FermiDiracState):
        return _fd_moments(f)
    return _quadrature_moments(f, rule or default_rule())


def is_normalized(f, tol=1e-8, rule=None):
    m = moments(f, rule)
    return (
        abs(m.mass - 1.0) <= tol
        and float(np.max(np.abs(m.momentum))) <= tol
        and abs(m.energy - 3.0) <= tol
    )


# ---------------------------------------------------------------------------
# normalize / diagonalize


def _trilinear(grid: GridDistribution, pts):
    """Trilinear interpolation with zero extension outside the box."""
    L, h, n = grid.half_width, grid.spacing, grid.n
    x = (pts + L) / h - 0.5           # cell-center coordinates
    i0 = np.floor(x).astype(int)
    t = x - i0
    out = np.zeros(pts.shape[0])
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                ii = i0 + np.array([dx, dy, dz])
                ok = np.all((ii >= 0) & (ii < n), axis=1)
                wgt = (
                    (t[:, 0] if dx else 1.0 - t[:, 0])
                    * (t[:, 1] if dy else 1.0 - t[:, 1])
                    * (t[:, 2] if dz else 1.0 - t[:, 2])
                )
                iiok = ii[ok]
                out[ok] += wgt[ok] * grid.values[iiok[:, 0], iiok[:, 1], iiok[:, 2]]
    return out


def _resample(grid: GridDistribution, transform, scale=1.0):
    ax = grid.axis()
    g = np.meshgrid(ax, ax, ax, indexing="ij")
    pts = np.column_stack([a.ravel() for a in g])
    vals = scale * _trilinear(grid, transform(pts))
    np.maximum(vals, 0.0, out=vals)
    return GridDistribution(grid.half_width, vals.reshape(grid.values.shape))


def normalize(f, tol=1e-8):
    """Affine change of unknown bringing f to mass 1, zero momentum, energy 3.

    Gaussian families transform their parameters exactly; grids are
    resampled with trilinear interpolation; Fermi-Dirac states are built
    normalized, so they only pass the identity check here.
    """
    m = moments(f)
    u = m.momentum / m.mass
    if m.mass <= 0:
        raise DegenerateInputError("cannot normalize: nonpositive mass")
    theta = (m.energy / m.mass - float(u @ u)) / 3.0
    if theta <= 0:
        raise DegenerateInputError("cannot normalize: zero-temperature input")
    if (
        abs(m.mass - 1.0) <= tol
        and float(np.max(np.abs(m.momentum))) <= tol
        and abs(m.energy - 3.0) <= tol
    ):
        return f
    b = math.sqrt(theta)
    if isinstance(f, AnisotropicGaussian):
        return AnisotropicGaussian((f.mean - u) / b, f.temps / (b * b), f.frame)
    if isinstance(f, GaussianMixture):
        comps = tuple(
            AnisotropicGaussian((c.mean - u) / b, c.temps / (b * b), c.frame)
            for c in f.components
        )
        return GaussianMixture(f.weights / float(np.sum(f.weights)), comps)
    if isinstance(f, GridDistribution):
        return _normalize_grid(f, tol)
    raise DegenerateInputError(
        f"{f.label()} is outside its family after an affine change; "
        "construct it normalized or sample it to a grid first"
    )


def _normalize_grid(f: GridDistribution, tol):
    """Normalize a grid by resampling under a composed affine map.

    Trilinear resampling biases the moments at order h^2, so the affine
    parameters are corrected iteratively against the measured moments of
    the materialized image; every iterate resamples the original grid
    once (no compounding of interpolation smoothing)."""
    amp, scale, shift = 1.0, 1.0, np.zeros(3)
    grid_tol = max(tol, 1e-11)
    for _ in range(25):
        img = _resample(f, lambda pts: scale * pts + shift, scale=amp)
        m = _grid_moments(img)
        u = m.momentum / m.mass
        theta = (m.energy / m.mass - float(u @ u)) / 3.0
        if theta <= 0:
            raise DegenerateInputError("resampled grid lost its temperature")
        if (
            abs(m.mass - 1.0) <= grid_tol
            and float(np.max(np.abs(m.momentum))) <= grid_tol
            and abs(m.energy - 3.0) <= grid_tol
        ):
            return img
        b2 = math.sqrt(theta)
        a2 = b2**3 / m.mass
        # compose v -> b2 v + u into the running map
        amp *= a2
        shift = scale * u + shift
        scale *= b2
    raise NumericError("grid normalization did not converge")


def _sorting_rotation(pressure, tol=1e-12):
    """Rotation whose transpose diagonalizes the pressure tensor, eigenvalues
    descending, ties kept in original axis order."""
    off = pressure - np.diag(np.diag(pressure))
    if float(np.max(np.abs(off))) <= tol:
        order = np.argsort(-np.diag(pressure), kind="stable")
        rot = np.eye(3)[:, order]
    else:
        evals, vecs = np.linalg.eigh(pressure)
        order = np.argsort(-evals, kind="stable")
        rot = vecs[:, order]
    if np.linalg.det(rot) < 0:
        rot = rot.copy()
        rot[:, 2] = -rot[:, 2]
    return rot


def diagonalize(f, tol=1e-12):
    """Rotate f so its pressure tensor is diagonal.

    Returns (rotated distribution, rotation S); the rotated density is
    v -> f(S v), so the new pressure tensor is S^T P S.
    """
    pres = moments(f).pressure
    rot = _sorting_rotation(pres, tol)
    if np.allclose(rot, np.eye(3)):
        return f, np.eye(3)
    if isinstance(f, AnisotropicGaussian):
        return AnisotropicGaussian(rot.T @ f.mean, f.temps, rot.T @ f.frame), rot
    if isinstance(f, GaussianMixture):
        comps = tuple(
            AnisotropicGaussian(rot.T @ c.mean, c.temps, rot.T @ c.frame)
            for c in f.components
        )
        return GaussianMixture(f.weights, comps), rot
    if isinstance(f, GridDistribution):
        return _resample(f, lambda pts: pts @ rot.T), rot
    if isinstance(f, FermiDiracState):
        return f, np.eye(3)
    if isinstance(f, FermiDiracAnisotropic):
        # directional temperature decreases with width, so sorting widths
        # ascending sorts temperatures descending
        order = np.argsort(f.widths, kind="stable")
        perm = np.eye(3)[:, order]
        if np.linalg.det(perm) < 0:
            perm = perm.copy()
            perm[:, 2] = -perm[:, 2]
        return FermiDiracAnisotropic(f.eps, f.coeff, f.widths[order]), perm
    raise TypeError(f"unsupported distribution {type(f)!r}")


# ---------------------------------------------------------------------------
# Fermi-Dirac construction


def _fd_solve_coeff(eps, width):
    """Coefficient a with unit mass at given width, by bracketed root finding."""
    a0 = (width / math.pi) ** 1.5  # classical coefficient for unit mass
    lo, hi = 0.5 * a0, 2.0 * a0
    while _fd_radial(eps, hi, width, (2,))[0] < 1.0:
        hi *= 4.0
        if hi > 1e260:
            # mass 1 needs an astronomically degenerate state: the
            # exclusion bound has been saturated for this width
            raise SaturationError(
                f"unit mass unreachable at eps={eps:g}, width={width:g}"
            )

    def fun(loga):
        return _fd_radial(eps, math.exp(loga), width, (2,))[0] - 1.0

    loga = optimize.brentq(
        fun, math.log(lo), math.log(hi), xtol=1e-14, rtol=8.9e-16, maxiter=300
    )
    return math.exp(loga)


def fermi_dirac_equilibrium(eps, tol=1e-10):
    """The Fermi-Dirac state with mass 1 and energy 3 for quantum parameter eps.

    Solved by bisecting the width b in [1e-3, 1e3], the coefficient being
    eliminated through the mass constraint by radial quadrature.  Raises
    SaturationError when eps is so large that the exclusion bound caps the
    reachable energy-3 mass below one.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    # the fully degenerate (filled-ball) state bounds the reachable energy
    # from below: if even that exceeds 3, no solution exists
    degenerate_energy = 0.6 * (3.0 * eps / (4.0 * math.pi)) ** (2.0 / 3.0)
    if degenerate_energy >= 3.0:
        raise SaturationError(
            f"eps={eps:g} exceeds the saturation threshold "
            f"{4.0 * math.pi / 3.0 * 5.0**1.5:.3f}: mass 1 and energy 3 "
            "cannot both hold under the exclusion bound"
        )

    def energy_gap(width):
        a = _fd_solve_coeff(eps, width)
        return _fd_radial(eps, a, width, (4,))[0] - 3.0

    b_lo, b_hi = 1e-3, 1e3
    while True:
        # near saturation the cold end of the bracket may demand an
        # unrepresentable degeneracy; pull it in until it is evaluable
        try:
            g_hi = energy_gap(b_hi)
            break
        except SaturationError:
            b_hi *= 0.5
            if b_hi <= 2.0 * b_lo:
                raise
    if g_hi > 0.0:
        raise SaturationError(
            f"eps={eps:g}: the energy constraint is unreachable on the "
            "width bracket"
        )
    g_lo = energy_gap(b_lo)
    if g_lo < 0.0:
        raise SaturationError("no width bracket for the energy constraint")
    width = optimize.brentq(
        energy_gap, b_lo, b_hi, xtol=1e-13, rtol=8.9e-16, maxiter=300
    )
    coeff = _fd_solve_coeff(eps, width)
    state = FermiDiracState(eps, coeff, width)
    m = moments(state)
    if abs(m.mass - 1.0) > tol or abs(m.energy - 3.0) > tol:
        raise NumericError(
            f"equilibrium solve missed tolerance: mass={m.mass}, energy={m.energy}"
        )
    return state


def fermi_dirac_anisotropic(eps, temps, tol=1e-10, rule=None):
    """Fermi-Dirac profile with prescribed directional temperatures.

    temps must sum to 3; the returned state has mass 1, zero momentum and
    pressure diag(temps) within tol, under the default quadrature rule.
    """
    temps = np.asarray(temps, dtype=float)
    if temps.shape != (3,) or np.any(temps <= 0):
        raise ValueError("temps must be three positive numbers")
    if abs(float(np.sum(temps)) - 3.0) > 1e-8:
        raise ValueError("directional temperatures must sum to 3")
    rule = rule or default_rule()
    nodes, wts = rule.nodes, rule.weights
    v2 = nodes * nodes

    def residual(x):
        st = FermiDiracAnisotropic(eps, math.exp(x[0]), np.exp(x[1:]))
        vals = st.evaluate(nodes) * wts
        return np.array(
            [
                float(np.sum(vals)) - 1.0,
                float(v2[:, 0] @ vals) - temps[0],
                float(v2[:, 1] @ vals) - temps[1],
                float(v2[:, 2] @ vals) - temps[2],
            ]
        )

    x0 = np.concatenate(
        [[math.log((2.0 * math.pi) ** -1.5 / math.sqrt(float(np.prod(temps))))],
         np.log(0.5 / temps)]
    )
    sol = optimize.root(residual, x0, method="hybr", tol=1e-13)
    res = residual(sol.x)
    if float(np.max(np.abs(res))) > tol:
        raise NumericError(f"anisotropic Fermi-Dirac solve missed tolerance: {res}")
    return FermiDiracAnisotropic(eps, math.exp(sol.x[0]), np.exp(sol.x[1:]))


# ---------------------------------------------------------------------------
# grid sampling


def to_grid(f, half_width, n):
    """Cell-center sampling of f on [-L, L]^3 with N cells per axis.

    The result records how much analytic mass the box kept and whether the
    resolution is too low to trust gradients.
    """
    if n % 2 != 0:
        raise ValueError("N must be even")
    if half_width <= 0:
        raise ValueError("L must be positive")
    rule = quad.grid_rule(half_width, n)
    if isinstance(f, GridDistribution):
        vals = _trilinear(f, rule.nodes)
    else:
        vals = f.evaluate(rule.nodes)
    vals = np.maximum(np.asarray(vals, dtype=float), 0.0)
    grid_mass = float(np.sum(vals)) * (2.0 * half_width / n) ** 3
    analytic_mass = moments(f).mass
    info = {
        "analytic_mass": analytic_mass,
        "grid_mass": grid_mass,
        "truncated_mass_fraction": 1.0 - grid_mass / analytic_mass,
        "low_resolution": n < 8,
    }
    return GridDistribution(half_width, vals.reshape(n, n, n), info)
