"""Command-line front end.

Commands consume one JSON configuration document (see config.py for the
schema), write CSV artifacts plus companion figures into the output
directory, and print a short human-readable summary.  Exit codes:
0 success, 2 configuration error, 3 numeric error, 4 inequality or decay
violation, 5 solver instability.
"""

from __future__ import annotations

import functools
import os
import sys

import click
import numpy as np

from . import bounds, config as cfgmod, decay as decay_mod
from . import distributions as dist
from . import functionals as fn
from . import reporting, solver as solver_mod
from .errors import (
    ConfigError,
    DegenerateInputError,
    DomainError,
    InstabilityError,
    LandaulabError,
    NumericError,
    PauliViolationError,
    SaturationError,
)

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VIOLATION = 4
EXIT_INSTABILITY = 5


def common_options(fun):
    @click.option("--config", "config_path", type=click.Path(), default=None,
                  help="JSON run configuration")
    @click.option("--out", "out_dir", type=click.Path(), default="out",
                  help="output directory")
    @click.option("--gamma", "gammas", type=float, multiple=True,
                  help="override the gamma list")
    @click.option("--epsilon", "epsilons", type=float, multiple=True,
                  help="override the quantum-parameter list")
    @click.option("--tolerance", type=float, default=None,
                  help="override inequality slack / solve tolerance")
    @click.option("--threads", type=int, default=None,
                  help="worker threads for pair sums and transforms")
    @click.option("--seed", type=int, default=None,
                  help="seed for randomized candidate sets")
    @functools.wraps(fun)
    def wrapper(*args, **kwargs):
        return fun(*args, **kwargs)

    return wrapper


def _load(config_path, gammas, epsilons, tolerance, threads, seed):
    data = cfgmod.load_config(config_path) if config_path else cfgmod.validate_config({})
    if gammas:
        data["gammas"] = list(gammas)
    if epsilons:
        data["epsilons"] = list(epsilons)
    if tolerance is not None:
        data["tolerance"] = tolerance
    if threads is not None:
        data["threads"] = threads
    if seed is not None:
        data["seed"] = seed
    return data


def _handle(exc):
    if isinstance(exc, ConfigError):
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if isinstance(exc, InstabilityError):
        click.echo(f"solver instability: {exc} (t={exc.time})", err=True)
        sys.exit(EXIT_INSTABILITY)
    if isinstance(exc, (NumericError, DomainError, DegenerateInputError,
                        PauliViolationError, SaturationError, LandaulabError)):
        click.echo(f"numeric error: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    raise exc


def _figures_enabled(data):
    return bool(data.get("output", {}).get("figures", True))


@click.group()
def main():
    """Numerical laboratory for collision entropy dissipation bounds."""


@main.command()
@common_options
def functionals(config_path, out_dir, gammas, epsilons, tolerance, threads, seed):
    """Scalar-functional table per (distribution, gamma, epsilon)."""
    try:
        data = _load(config_path, gammas, epsilons, tolerance, threads, seed)
        rule, pair_rule, _, candidates = cfgmod.quadrature_rules(data)
        states = cfgmod.build_distributions(data)
        if not states:
            raise ConfigError("no distributions configured")
        rows = []
        for f in states:
            for gamma in data.get("gammas", [0.0]):
                for eps in data.get("epsilons", [0.0]):
                    rep = fn.functional_report(
                        f, gamma, eps if eps > 0 else None,
                        rule=rule, pair_rule=pair_rule, candidates=candidates,
                    )
                    row = {
                        "distribution": rep.distribution,
                        "gamma": rep.gamma,
                        "eps": eps,
                        "I1": rep.temps[0], "I2": rep.temps[1], "I3": rep.temps[2],
                        "fisher": rep.fisher,
                        "fisher_rel": rep.fisher_rel,
                        "pair_fourth": rep.pair_fourth,
                        "energy_sup": rep.energy_sup,
                        "pair_energy": rep.pair_energy,
                        "fourth": rep.fourth,
                        "l2": rep.l2,
                        "l2_weighted": rep.l2_weighted,
                        "l2q6": rep.l2q6,
                        "gram_det": rep.gram_det,
                        "entropy_rel": rep.entropy_rel,
                        "K": rep.lfd.log_blocking if rep.lfd else "",
                        "S_eps": rep.lfd.entropy if rep.lfd else "",
                        "entropy_rel_fd": rep.lfd.entropy_rel if rep.lfd else "",
                        "kappa0": rep.lfd.kappa0 if rep.lfd else "",
                    }
                    rows.append(row)
        header = list(rows[0].keys())
        path = os.path.join(out_dir, "functionals.csv")
        reporting.write_csv(path, header, rows)
        doc_path = os.path.join(out_dir, "functionals.json")
        reporting.write_json(doc_path, rows)
        click.echo(f"wrote {path} ({len(rows)} rows) and {doc_path}")
        if _figures_enabled(data):
            reporting.functionals_figure(rows, os.path.join(out_dir, "functionals.png"))
    except Exception as exc:  # noqa: BLE001
        _handle(exc)


_SWEEP_HEADER = ["name", "distribution", "gamma", "eps", "lhs", "rhs",
                 "gate_value", "gate_threshold", "gate_passed", "satisfied",
                 "kappa0"]


@main.command()
@common_options
def verify(config_path, out_dir, gammas, epsilons, tolerance, threads, seed):
    """Inequality sweeps; nonzero exit if a gate-passing instance fails."""
    try:
        data = _load(config_path, gammas, epsilons, tolerance, threads, seed)
        _, pair_rule, _, _ = cfgmod.quadrature_rules(data)
        states = cfgmod.build_distributions(data)
        if not states:
            states = bounds.gaussian_delta_family(
                [0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06]
            )
        slack = float(data.get("tolerance", 1e-8))
        result = bounds.family_sweep(
            states,
            data.get("gammas", [0.0, 0.5, 1.0]),
            data.get("epsilons", [0.0]),
            pair_rule=pair_rule,
            slack=slack,
        )
        path = os.path.join(out_dir, "verify.csv")
        reporting.write_csv(path, _SWEEP_HEADER, [r.row() for r in result.reports])
        click.echo(f"wrote {path} ({len(result.reports)} rows)")
        for name, s in sorted(result.summary.items()):
            click.echo(
                f"  {name}: {s['gate_passed']}/{s['instances']} gate-passing, "
                f"{s['satisfied']} satisfied, {s['violations']} violations"
            )
        if _figures_enabled(data):
            reporting.sweep_figure(result.reports, os.path.join(out_dir, "verify.png"))
        if result.violations:
            click.echo("inequality violations among gate-passing instances", err=True)
            sys.exit(EXIT_VIOLATION)
        click.echo("satisfied: all gate-passing")
    except Exception as exc:  # noqa: BLE001
        _handle(exc)


@main.command()
@common_options
def simulate(config_path, out_dir, gammas, epsilons, tolerance, threads, seed):
    """Time integration with trajectory CSV and optional state snapshots."""
    try:
        data = _load(config_path, gammas, epsilons, tolerance, threads, seed)
        if "solver" not in data:
            raise ConfigError("simulate needs a solver section")
        overrides = {}
        if gammas:
            overrides["gamma"] = gammas[0]
        if epsilons:
            overrides["epsilon"] = epsilons[0]
        initial, scfg, snapshot_times = cfgmod.solver_config(data, overrides)
        traj, final, snapshots = solver_mod.run(initial, scfg, snapshot_times)
        path = os.path.join(out_dir, "trajectory.csv")
        traj.to_csv(path)
        click.echo(
            f"wrote {path} ({len(traj)} samples, dt={traj.meta['dt']:.3e}, "
            f"t_end={traj.times[-1]:g})"
        )
        for t, state in snapshots.items():
            snap_path = os.path.join(out_dir, f"state_t{t:g}.csv")
            state.to_csv(snap_path)
            click.echo(f"wrote {snap_path}")
        if _figures_enabled(data):
            reporting.trajectory_figure(traj, os.path.join(out_dir, "trajectory.png"))
    except Exception as exc:  # noqa: BLE001
        _handle(exc)


@main.command()
@click.option("--trajectory", "traj_path", type=click.Path(), required=True,
              help="trajectory CSV from simulate")
@click.option("--c1", type=float, default=2.0,
              help="logarithmic Sobolev constant")
@click.option("--sup-l2q6", type=float, default=None,
              help="norm bound; defaults to the trajectory's running max")
@common_options
def decay(traj_path, c1, sup_l2q6, config_path, out_dir, gammas, epsilons,
          tolerance, threads, seed):
    """Verify the decay hypothesis and envelope on a recorded trajectory."""
    try:
        data = _load(config_path, gammas, epsilons, tolerance, threads, seed)
        dconf = data.get("decay", {})
        c1 = float(dconf.get("c1", c1))
        t_start = float(dconf.get("t_start", 1.0))
        env_tol = float(dconf.get("envelope_tol", 1e-10))
        hyp_tol = float(dconf.get("hypothesis_tol", 1e-12))
        traj = decay_mod.Trajectory.from_csv(traj_path)
        t_start = min(t_start, float(traj.times[-1]))
        tail = traj.restrict(t_start)
        sup = sup_l2q6 if sup_l2q6 is not None else float(np.max(tail.l2q6))
        hyp = decay_mod.landau_rate_constants(sup, c1).with_start(tail.entropy[0])
        hrep = decay_mod.verify_hypothesis(tail, hyp, tol=hyp_tol)
        erep = decay_mod.verify_envelope(tail, hyp, tol=env_tol)
        window = dconf.get("rate_window")
        fitted = ""
        if window:
            fitted = decay_mod.fit_rate(traj, (float(window[0]), float(window[1])))
        rows = [{
            "t_start": t_start, "sup_l2q6": sup, "c1": c1,
            "q": hyp.q, "c0": hyp.c0, "h0": hyp.h0,
            "onset": erep.onset,
            "hypothesis_checked": hrep.checked,
            "hypothesis_applicable": hrep.applicable,
            "hypothesis_violations": hrep.violations,
            "envelope_checked": erep.checked,
            "envelope_violations": erep.envelope_violations,
            "monotonicity_violations": erep.monotonicity_violations,
            "fitted_rate": fitted,
        }]
        path = os.path.join(out_dir, "decay_report.csv")
        reporting.write_csv(path, list(rows[0].keys()), rows)
        click.echo(f"wrote {path}")
        click.echo(
            f"hypothesis: {hrep.violations} violations on {hrep.applicable} "
            f"applicable samples; envelope: {erep.envelope_violations} "
            f"violations, {erep.monotonicity_violations} monotonicity breaks"
        )
        if _figures_enabled(data):
            reporting.decay_figure(tail, hyp, os.path.join(out_dir, "decay.png"))
        if not (hrep.passed and erep.passed):
            sys.exit(EXIT_VIOLATION)
    except Exception as exc:  # noqa: BLE001
        _handle(exc)


@main.command()
@click.option("--epsilon", "epsilons", type=float, multiple=True, required=True,
              help="quantum parameters to solve (repeatable)")
@click.option("--out", "out_dir", type=click.Path(), default="out")
@click.option("--tolerance", type=float, default=1e-10)
def equilibrium(epsilons, out_dir, tolerance):
    """Table of Fermi-Dirac equilibrium coefficients per quantum parameter."""
    rows = []
    for eps in epsilons:
        try:
            state = dist.fermi_dirac_equilibrium(eps, tolerance)
            m = dist.moments(state)
            rows.append({
                "eps": eps, "saturated": 0,
                "coeff": state.coeff, "width": state.width,
                "sup_density": state.sup_density(),
                "mass_error": m.mass - 1.0, "energy_error": m.energy - 3.0,
            })
        except SaturationError:
            rows.append({
                "eps": eps, "saturated": 1, "coeff": "", "width": "",
                "sup_density": "", "mass_error": "", "energy_error": "",
            })
    header = ["eps", "saturated", "coeff", "width", "sup_density",
              "mass_error", "energy_error"]
    path = os.path.join(out_dir, "equilibrium.csv")
    reporting.write_csv(path, header, rows)
    click.echo(f"wrote {path} ({len(rows)} rows)")
    for r in rows:
        if r["saturated"]:
            click.echo(f"  eps={r['eps']:g}: saturated (no solution)")
        else:
            click.echo(
                f"  eps={r['eps']:g}: a={r['coeff']:.8f} b={r['width']:.8f} "
                f"sup={r['sup_density']:.6f}"
            )
    reporting.equilibrium_figure(rows, os.path.join(out_dir, "equilibrium.png"))


if __name__ == "__main__":
    main()
