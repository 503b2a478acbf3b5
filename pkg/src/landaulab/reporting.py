"""Delimited output and figure rendering for the report paths.

CSV files are the canonical artifacts: written atomically (temp file then
rename) with a fixed float format so identical runs produce identical
bytes.  Each report path also renders a matplotlib figure next to its CSV
for quick visual inspection; figures are a convenience layer and never
feed back into any computation.
"""

from __future__ import annotations

import math
import os
import tempfile

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, rows):
    """Atomic CSV write with deterministic formatting."""
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                if isinstance(row, dict):
                    fh.write(",".join(_fmt(row.get(col, "")) for col in header))
                else:
                    fh.write(",".join(_fmt(x) for x in row))
                fh.write("\n")
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_json(path, payload):
    """Atomic structured-text (JSON) report dump."""
    import json

    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=1, default=_fmt)
            fh.write("\n")
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def trajectory_figure(traj, path):
    """Entropy/dissipation decay and conservation drift for one run."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    ax = axes[0]
    pos = traj.entropy > 0
    ax.semilogy(traj.times[pos], traj.entropy[pos], label="H")
    posd = traj.dissipation > 0
    ax.semilogy(traj.times[posd], traj.dissipation[posd], label="D", alpha=0.7)
    ax.set_xlabel("t")
    ax.set_title("entropy and dissipation")
    ax.legend(frameon=False)
    ax = axes[1]
    ax.plot(traj.times, traj.mass - traj.mass[0], label="mass drift")
    ax.plot(traj.times, traj.momentum_norm, label="|momentum|")
    ax.plot(traj.times, traj.energy - traj.energy[0], label="energy drift")
    ax.set_xlabel("t")
    ax.set_title("conservation monitors")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def decay_figure(traj, hyp, path):
    """Entropy against its exponential envelope."""
    from .decay import envelope

    hyp_eff = hyp if hyp.h0 is not None else hyp.with_start(traj.entropy[0])
    shifted = traj.times - traj.times[0]
    env = envelope(hyp_eff, shifted)
    fig, ax = plt.subplots(figsize=(6, 4))
    pos = traj.entropy > 0
    ax.semilogy(traj.times[pos], traj.entropy[pos], label="H")
    ax.semilogy(traj.times, env, "--", label="envelope")
    onset = traj.times[0] + (hyp_eff.h0 / hyp_eff.q if hyp_eff.h0 else 0.0)
    ax.axvline(onset, color="gray", lw=0.8, label="onset")
    ax.set_xlabel("t")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def sweep_figure(reports, path):
    """lhs vs rhs per inequality, gate pass/fail coloring."""
    names = sorted({r.name for r in reports})
    fig, axes = plt.subplots(1, max(len(names), 1),
                             figsize=(4.5 * max(len(names), 1), 4))
    if len(names) <= 1:
        axes = [axes]
    for ax, name in zip(axes, names):
        sel = [r for r in reports if r.name == name]
        for r in sel:
            color = "tab:green" if r.gate_passed else "tab:gray"
            marker = "o" if (r.satisfied or r.satisfied is None) else "x"
            ax.loglog([max(r.rhs, 1e-300)], [max(r.lhs, 1e-300)],
                      marker, color=color, ms=5)
        lims = ax.get_xlim()
        span = np.logspace(
            math.log10(max(lims[0], 1e-300)), math.log10(max(lims[1], 1e-299)), 10
        )
        ax.loglog(span, span, "k:", lw=0.8)
        ax.set_title(name)
        ax.set_xlabel("rhs")
        ax.set_ylabel("lhs")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def functionals_figure(rows, path):
    """Per-instance key functionals across a sweep."""
    fig, ax = plt.subplots(figsize=(7, 4))
    idx = np.arange(len(rows))
    for key in ("fisher_rel", "entropy_rel", "dissipation_proxy"):
        vals = np.array([float(r[key]) for r in rows if key in r], dtype=float)
        if len(vals) == len(rows):
            ax.semilogy(idx, np.maximum(vals, 1e-300), "o-", ms=3, label=key)
    ax.set_xlabel("instance")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def equilibrium_figure(rows, path):
    """Equilibrium coefficients against the quantum parameter."""
    ok = [r for r in rows if not r.get("saturated")]
    if not ok:
        return
    eps = np.array([r["eps"] for r in ok], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(eps, [r["coeff"] for r in ok], "o-", label="a")
    ax.semilogx(eps, [r["width"] for r in ok], "s-", label="b")
    ax.semilogx(eps, [r["sup_density"] for r in ok], "^-", label="sup density")
    ax.set_xlabel("eps")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
