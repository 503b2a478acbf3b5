"""Run-configuration document: one JSON file, per-command sections.

Schema (all sections optional unless a command requires them):

    {
      "output":      {"dir": "out", "figures": true},
      "quadrature":  {"nodes": 24, "pair_nodes": 16, "scale": 1.15,
                      "diagonal_policy": "ball-equivalent",
                      "sup_candidates": {"kind": "grid", "n": 5, "radius": 5.0,
                                         "count": 126}},
      "gammas":      [0.0, 0.5, 1.0],
      "epsilons":    [0.0],
      "seed":        0,
      "threads":     1,
      "tolerance":   1e-8,
      "distributions": [ <distribution spec>, ... ],
      "solver":      {"gamma": 1.0, "epsilon": 0.0, "L": 6.0, "N": 16,
                      "t_end": 20.0, "dt": null, "cfl_safety": 0.4,
                      "sample_stride": 0.01, "monitor_stride": 2,
                      "positivity_floor": 1e-30, "kernel_cutoff": null,
                      "snapshot_times": [], "initial": <distribution spec>},
      "decay":       {"c1": 2.0, "t_start": 1.0, "envelope_tol": 1e-10,
                      "hypothesis_tol": 1e-12, "rate_window": [0.05, 0.5]}
    }

Distribution specs select a family:

    {"family": "maxwellian"}
    {"family": "gaussian", "temperatures": [...], "mean": [...],
     "rotation": [[...], ...]}
    {"family": "gaussian-family", "deltas": [...]}    # T=(1+d, 1-d/2, 1-d/2)
    {"family": "mixture", "components": [{"weight": w, "mean": [...],
     "temperatures": [...]}, ...]}
    {"family": "fermi-dirac", "epsilon": 0.05}
    {"family": "fermi-dirac-anisotropic", "epsilon": 0.05,
     "temperatures": [...]}
    {"family": "grid", "grid": {"L": 6.0, "N": 32}, "source": <spec>}

Unknown keys are rejected everywhere.
"""

from __future__ import annotations

import json

import numpy as np

from . import distributions as dist
from . import quadrature as quad
from .bounds import gaussian_delta_family
from .errors import ConfigError

_TOP_KEYS = {
    "output", "quadrature", "gammas", "epsilons", "seed", "threads",
    "tolerance", "distributions", "solver", "decay",
}
_OUTPUT_KEYS = {"dir", "figures"}
_QUAD_KEYS = {"nodes", "pair_nodes", "scale", "diagonal_policy", "sup_candidates"}
_SUP_KEYS = {"kind", "n", "radius", "count"}
_SOLVER_KEYS = {
    "gamma", "epsilon", "L", "N", "t_end", "dt", "cfl_safety",
    "sample_stride", "monitor_stride", "positivity_floor", "kernel_cutoff",
    "snapshot_times", "initial",
}
_DECAY_KEYS = {"c1", "t_start", "envelope_tol", "hypothesis_tol", "rate_window"}
_DIST_KEYS = {
    "family", "label", "mean", "temperatures", "rotation", "weights",
    "components", "epsilon", "deltas", "grid", "source",
}
_COMPONENT_KEYS = {"weight", "mean", "temperatures", "rotation"}
_GRID_KEYS = {"L", "N"}


def _check_keys(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    return validate_config(data)


def validate_config(data):
    _check_keys(data, _TOP_KEYS, "config")
    if "output" in data:
        _check_keys(data["output"], _OUTPUT_KEYS, "output")
    if "quadrature" in data:
        _check_keys(data["quadrature"], _QUAD_KEYS, "quadrature")
        if "sup_candidates" in data["quadrature"]:
            _check_keys(data["quadrature"]["sup_candidates"], _SUP_KEYS,
                        "quadrature.sup_candidates")
    if "solver" in data:
        _check_keys(data["solver"], _SOLVER_KEYS, "solver")
        if "initial" in data["solver"]:
            _check_dist_spec(data["solver"]["initial"], "solver.initial")
    if "decay" in data:
        _check_keys(data["decay"], _DECAY_KEYS, "decay")
    for k, spec in enumerate(data.get("distributions", [])):
        _check_dist_spec(spec, f"distributions[{k}]")
    return data


def _check_dist_spec(spec, where):
    _check_keys(spec, _DIST_KEYS, where)
    fam = spec.get("family")
    known = {
        "maxwellian", "gaussian", "gaussian-family", "mixture",
        "fermi-dirac", "fermi-dirac-anisotropic", "grid",
    }
    if fam not in known:
        raise ConfigError(f"{where}: unknown family {fam!r}")
    for k, comp in enumerate(spec.get("components", [])):
        _check_keys(comp, _COMPONENT_KEYS, f"{where}.components[{k}]")
    if "grid" in spec:
        _check_keys(spec["grid"], _GRID_KEYS, f"{where}.grid")


def build_distribution(spec):
    """One distribution spec -> list of (built) distributions.

    Family sweeps expand to several instances, everything else to one.
    """
    fam = spec["family"]
    try:
        if fam == "maxwellian":
            return [dist.maxwellian()]
        if fam == "gaussian":
            return [dist.AnisotropicGaussian(
                np.asarray(spec.get("mean", (0.0, 0.0, 0.0)), dtype=float),
                np.asarray(spec["temperatures"], dtype=float),
                np.asarray(spec["rotation"], dtype=float)
                if spec.get("rotation") is not None else np.eye(3),
            )]
        if fam == "gaussian-family":
            return gaussian_delta_family(spec["deltas"])
        if fam == "mixture":
            shared = spec.get("weights")
            comps, weights = [], []
            for k, c in enumerate(spec["components"]):
                weights.append(float(shared[k] if shared is not None
                                     else c["weight"]))
                comps.append(dist.AnisotropicGaussian(
                    np.asarray(c.get("mean", (0.0, 0.0, 0.0)), dtype=float),
                    np.asarray(c["temperatures"], dtype=float),
                    np.asarray(c["rotation"], dtype=float)
                    if c.get("rotation") is not None else np.eye(3),
                ))
            return [dist.GaussianMixture(np.asarray(weights), tuple(comps))]
        if fam == "fermi-dirac":
            return [dist.fermi_dirac_equilibrium(float(spec["epsilon"]))]
        if fam == "fermi-dirac-anisotropic":
            return [dist.fermi_dirac_anisotropic(
                float(spec["epsilon"]),
                np.asarray(spec["temperatures"], dtype=float),
            )]
        if fam == "grid":
            (source,) = build_distribution(spec["source"])
            g = spec["grid"]
            return [dist.to_grid(source, float(g["L"]), int(g["N"]))]
    except KeyError as exc:
        raise ConfigError(f"distribution spec missing key {exc}") from exc
    raise ConfigError(f"unknown family {fam!r}")


def build_distributions(data):
    out = []
    for spec in data.get("distributions", []):
        out.extend(build_distribution(spec))
    return out


def quadrature_rules(data, tolerance=None):
    """(single rule, pair rule, singular policy, sup candidates) from config."""
    q = data.get("quadrature", {})
    nodes = int(q.get("nodes", 24))
    pair_nodes = int(q.get("pair_nodes", 16))
    scale = float(q.get("scale", 1.15))
    rule = quad.tensor_gauss(nodes, scale)
    pair_rule = quad.tensor_gauss(pair_nodes, scale)
    policy_kind = q.get("diagonal_policy", "ball-equivalent")
    sup = q.get("sup_candidates", {})
    kind = sup.get("kind", "grid")
    if kind == "grid":
        candidates = quad.default_sup_candidates(
            radius=float(sup.get("radius", 5.0)), n=int(sup.get("n", 5))
        )
    elif kind == "random":
        candidates = quad.random_sup_candidates(
            radius=float(sup.get("radius", 5.0)),
            count=int(sup.get("count", 126)),
            seed=int(data.get("seed", 0)),
        )
    else:
        raise ConfigError(f"unknown sup candidate kind {kind!r}")
    return rule, pair_rule, policy_kind, candidates


def solver_config(data, overrides=None):
    from .solver import SolverConfig

    s = dict(data.get("solver", {}))
    s.update(overrides or {})
    if "initial" not in s:
        raise ConfigError("solver section needs an initial distribution")
    (initial,) = build_distribution(s["initial"])
    cfg = SolverConfig(
        gamma=float(s.get("gamma", 1.0)),
        eps=float(s.get("epsilon", 0.0)),
        half_width=float(s.get("L", 6.0)),
        n=int(s.get("N", 16)),
        t_end=float(s.get("t_end", 1.0)),
        dt=None if s.get("dt") is None else float(s["dt"]),
        cfl_safety=float(s.get("cfl_safety", 0.4)),
        sample_stride=float(s.get("sample_stride", 0.01)),
        monitor_stride=int(s.get("monitor_stride", 2)),
        positivity_floor=float(s.get("positivity_floor", 1e-30)),
        kernel_cutoff=(None if s.get("kernel_cutoff") is None
                       else float(s["kernel_cutoff"])),
        threads=int(data.get("threads", 1)),
    )
    return initial, cfg, [float(t) for t in s.get("snapshot_times", [])]
