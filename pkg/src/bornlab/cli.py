"""Command-line front end.

One JSON config describes one run; flags override file values.  Each run
writes ``out/<name>/summary.json`` plus plot-ready CSVs.  Summaries are byte
stable for a fixed (config, seed): keys are sorted and no timestamps or
environment details are recorded.  Every number in a summary is wrapped as
``{value, tol, provenance}`` with provenance one of ``identity`` (two discrete
computations that must coincide), ``oracle`` (precomputed closed form), or
``threshold`` (pinned inequality); entries that gate the exit code also carry
``pass``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error,
3 numerical abort (non-finite field).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator
from scipy.stats import chisquare

from . import kernels
from .catalog import (CatalogState, Model, coulomb_model, free_gaussian_state,
                      free_model, gaussian_packet, harmonic_eigenstate,
                      harmonic_model, hydrogen_state, superpose)
from .experiments import (count_fringes, mirror_l1, moment_divergence_report,
                          run_double_slit, uncertainty_report)
from .grid import inner_product, make_grid
from .observables import (angular_momentum, coordinate_rv, drift_velocity,
                          energy_rv, qm_energy_expect, qm_momentum_expect)
from .probability import born_measure, expectation, marginal, sample
from .propagate import analytic_evolve, split_step
from .residuals import (MASK_FRACTION_LIMIT, continuity_residual,
                        force_residual, vorticity_residual)

__all__ = ["RunConfig", "ConfigError", "parse_config", "run", "main"]

COMMANDS = ("list-states", "evolve", "expect", "madelung-check",
            "double-slit", "moments", "uncertainty", "sample")

_NUMBER = {"type": "number"}
_SCALAR_OR_VECTOR = {"anyOf": [{"type": "number"},
                               {"type": "array", "items": {"type": "number"},
                                "minItems": 1}]}

SCHEMA = {
    "$defs": {
        "grid": {
            "type": "object",
            "properties": {
                "extents": {"type": "array",
                            "items": {"type": "array", "items": _NUMBER,
                                      "minItems": 2, "maxItems": 2},
                            "minItems": 1},
                "points": {"type": "array", "items": {"type": "integer"},
                           "minItems": 1},
            },
            "required": ["extents", "points"],
            "additionalProperties": False,
        },
        "model": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["free", "harmonic", "coulomb"]},
                "omega": _NUMBER,
                "n_bodies": {"type": "integer", "minimum": 1},
                "body_dim": {"type": "integer", "minimum": 1},
                "masses": {"type": "array", "items": _NUMBER},
                "hbar": _NUMBER,
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "state": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["hydrogen", "harmonic", "gaussian",
                                  "free_gaussian", "superposition"]},
                "n": {"anyOf": [{"type": "integer"},
                                {"type": "array",
                                 "items": {"type": "integer"}}]},
                "l": {"type": "integer"},
                "m": {"type": "integer"},
                "points": {"type": "integer", "minimum": 4},
                "box_half": _NUMBER,
                "omega": _NUMBER,
                "center": _SCALAR_OR_VECTOR,
                "sigma": _SCALAR_OR_VECTOR,
                "k0": _SCALAR_OR_VECTOR,
                "t": _NUMBER,
                "coefficients": {"type": "array",
                                 "items": _SCALAR_OR_VECTOR, "minItems": 1},
                "states": {"type": "array",
                           "items": {"$ref": "#/$defs/state"}, "minItems": 1},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "evolution": {
            "type": "object",
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "steps": {"type": "integer", "minimum": 1},
                "stride": {"type": "integer", "minimum": 1},
                "t": _NUMBER,
            },
            "required": ["dt"],
            "additionalProperties": False,
        },
    },
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "name": {"type": "string"},
        "model": {"$ref": "#/$defs/model"},
        "state": {"$ref": "#/$defs/state"},
        "grid": {"$ref": "#/$defs/grid"},
        "evolution": {"$ref": "#/$defs/evolution"},
        "seed": {"type": "integer", "minimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "k_max": {"type": "integer", "minimum": 1},
        "body": {"type": "integer", "minimum": 0},
        "double_slit": {"type": "object"},
        "out": {"type": "string"},
        "tolerances": {"type": "object",
                       "additionalProperties": {"type": "number"}},
    },
    "required": ["command"],
    "additionalProperties": False,
}

_VALIDATOR = Draft202012Validator(SCHEMA)


class ConfigError(ValueError):
    """Configuration or usage problem (exit code 2)."""


@dataclass
class RunConfig:
    raw: dict

    @property
    def command(self) -> str:
        return self.raw["command"]

    @property
    def name(self) -> str:
        return self.raw.get("name", self.command)

    @property
    def out_dir(self) -> Path:
        return Path(self.raw.get("out", "out")) / self.name

    @property
    def seed(self):
        return self.raw.get("seed")

    def tol(self, key: str, default: float) -> float:
        return float(self.raw.get("tolerances", {}).get(key, default))


def _validate(raw: dict) -> RunConfig:
    err = next(_VALIDATOR.iter_errors(raw), None)
    if err is not None:
        raise ConfigError(f"config error at {err.json_path}: {err.message}")
    if raw["command"] == "sample" and "seed" not in raw:
        raise ConfigError("config error at $.seed: sampling commands require a seed")
    return RunConfig(raw)


def _apply_override(raw: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, _, text = item.partition("=")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    node = raw
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {key!r} crosses a non-object")
    node[parts[-1]] = value


def parse_config(argv=None) -> RunConfig:
    parser = argparse.ArgumentParser(
        prog="bornlab",
        description="Born-rule probability laboratory: one config, one run.")
    parser.add_argument("--config", help="path to a JSON run configuration")
    parser.add_argument("--out", help="output directory root")
    parser.add_argument("--seed", type=int, help="seed for sampling commands")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override a config entry (dotted path, repeatable)")
    args = parser.parse_args(argv)

    raw: dict = {}
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
    if args.out is not None:
        raw["out"] = args.out
    if args.seed is not None:
        raw["seed"] = args.seed
    for item in args.override:
        _apply_override(raw, item)
    return _validate(raw)


# ---------------------------------------------------------------------------
# building models and states from specs

def _build_model(cfg: RunConfig, state_spec: dict) -> Model:
    spec = cfg.raw.get("model")
    kind = state_spec.get("kind")
    if kind == "hydrogen":
        if spec is not None and spec["kind"] != "coulomb":
            raise ConfigError("hydrogen states require a coulomb model")
        return coulomb_model()
    if spec is None:
        if kind == "harmonic":
            ns = state_spec.get("n", 0)
            dim = len(ns) if isinstance(ns, list) else 1
            return harmonic_model(state_spec.get("omega", 1.0), body_dim=dim)
        if kind in ("gaussian", "free_gaussian"):
            dim = 1
            for key in ("center", "sigma", "k0"):
                val = state_spec.get(key)
                if isinstance(val, list):
                    dim = max(dim, len(val))
            return free_model(body_dim=dim)
        if kind == "superposition":
            return _build_model(cfg, state_spec["states"][0])
        raise ConfigError(f"cannot infer a model for state kind {kind!r}")
    if spec["kind"] == "free":
        return free_model(spec.get("n_bodies", 1), spec.get("body_dim", 1),
                          spec.get("masses"), spec.get("hbar", 1.0))
    if spec["kind"] == "harmonic":
        return harmonic_model(spec.get("omega", 1.0),
                              spec.get("n_bodies", 1), spec.get("body_dim", 1),
                              spec.get("masses"), spec.get("hbar", 1.0))
    return coulomb_model(mass=(spec.get("masses") or [1.0])[0],
                         hbar=spec.get("hbar", 1.0))


def _build_state(cfg: RunConfig, state_spec=None, model=None) -> CatalogState:
    spec = cfg.raw.get("state") if state_spec is None else state_spec
    if spec is None:
        raise ConfigError(f"command {cfg.command!r} needs a state")
    model = _build_model(cfg, spec) if model is None else model
    grid_spec = cfg.raw.get("grid")
    grid = (make_grid(grid_spec["extents"], grid_spec["points"])
            if grid_spec is not None else None)
    kind = spec["kind"]

    if kind == "hydrogen":
        return hydrogen_state(spec.get("n", 1), spec.get("l", 0),
                              spec.get("m", 0), points=spec.get("points", 32),
                              box_half=spec.get("box_half"))
    if kind == "harmonic":
        return harmonic_eigenstate(spec.get("n", 0), spec.get("omega", 1.0),
                                   model, grid=grid)
    if kind == "gaussian":
        return gaussian_packet(spec.get("center", 0.0), spec.get("sigma", 1.0),
                               spec.get("k0", 0.0), model, grid=grid)
    if kind == "free_gaussian":
        if grid is None:
            raise ConfigError("free_gaussian needs an explicit grid")
        return free_gaussian_state(spec.get("center", 0.0),
                                   spec.get("sigma", 1.0),
                                   spec.get("k0", 0.0), spec.get("t", 0.0),
                                   model, grid)
    if kind == "superposition":
        coeffs = [complex(c[0], c[1]) if isinstance(c, list) else complex(c)
                  for c in spec["coefficients"]]
        children = [_build_state(cfg, child, model) for child in spec["states"]]
        if len(coeffs) != len(children):
            raise ConfigError("superposition needs one coefficient per state")
        return superpose(coeffs, children)
    raise ConfigError(f"unknown state kind {kind!r}")


# ---------------------------------------------------------------------------
# summary plumbing

def _num(value, tol, provenance, passed=None) -> dict:
    entry = {"value": float(value), "tol": float(tol),
             "provenance": provenance}
    if passed is not None:
        entry["pass"] = bool(passed)
    return entry


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    data = np.column_stack([np.asarray(c, dtype=np.float64) for c in columns])
    np.savetxt(path, data, fmt="%.16e", delimiter=",",
               header=",".join(header), comments="")


def _write_fields_csv(path: Path, state: CatalogState, model: Model) -> None:
    grid = state.grid
    coords = [np.broadcast_to(m, grid.shape).ravel() for m in grid.meshes()]
    rho = kernels.abs2(state.values).ravel()
    header = [f"x{i}" for i in range(grid.dim)] + ["rho"]
    columns = coords + [rho]
    vcols = []
    for a in range(model.n_bodies):
        v = drift_velocity(state, model, a)
        vcols.extend(c.ravel() for c in v.comps)
    erv = energy_rv(state, model)
    header += [f"v{i}" for i in range(grid.dim)] + ["energy", "mask"]
    columns += vcols + [erv.comps[0].ravel(),
                        erv.mask.ravel().astype(np.float64)]
    _write_csv(path, header, columns)


def _marginal_histogram(state: CatalogState) -> tuple[list[str], list[np.ndarray]]:
    measure = born_measure(state)
    axis0 = marginal(measure, [0]) if measure.grid.dim > 1 else measure
    h = axis0.grid.spacing[0]
    centers = axis0.grid.axis_coords(0)
    return (["bin_lo", "bin_hi", "mass"],
            [centers - h / 2, centers + h / 2, axis0.cell_mass])


# ---------------------------------------------------------------------------
# commands

def _cmd_list_states(cfg: RunConfig):
    states = [
        {"kind": "hydrogen", "parameters": "n, l, m, points, box_half",
         "description": "hydrogen eigenstate in atomic units on a cube"},
        {"kind": "harmonic", "parameters": "n (per axis), omega",
         "description": "harmonic oscillator eigenstate (Hermite functions)"},
        {"kind": "gaussian", "parameters": "center, sigma, k0",
         "description": "Gaussian packet with plane phase"},
        {"kind": "free_gaussian", "parameters": "center, sigma, k0, t",
         "description": "freely spread Gaussian at time t, closed form"},
        {"kind": "superposition", "parameters": "coefficients, states",
         "description": "normalized linear combination of catalog states"},
    ]
    return {"states": states}, {}, None, None


def _cmd_expect(cfg: RunConfig):
    state = _build_state(cfg)
    model = state.model
    measure = born_measure(state)
    tol_id = cfg.tol("identity", 1e-10)
    checks = {}
    metrics = {}

    for a in range(model.n_bodies):
        vrv = drift_velocity(state, model, a)
        mean_v = expectation(vrv, measure)
        mean_v = np.atleast_1d(mean_v)
        p_qm = qm_momentum_expect(state, model, a)
        worst = max(_rel(model.masses[a] * mv, pq)
                    for mv, pq in zip(mean_v, p_qm))
        checks[f"momentum_identity_body{a}"] = _num(
            worst, tol_id, "identity", worst <= tol_id)
        for i, pq in enumerate(p_qm):
            metrics[f"p_qm_body{a}_axis{i}"] = _num(pq, 0.0, "identity")

    erv = energy_rv(state, model)
    e_mean = expectation(erv, measure)
    e_qm = qm_energy_expect(state, model)
    diff = _rel(e_mean, e_qm)
    checks["energy_identity"] = _num(diff, tol_id, "identity", diff <= tol_id)
    metrics["energy_mean"] = _num(e_mean, 0.0, "identity")

    if state.eigen_energy is not None:
        var_e = expectation(erv, measure, order=2, central=True)
        bound = cfg.tol("dirac", 1e-10) * state.eigen_energy ** 2
        checks["energy_variance_dirac"] = _num(
            var_e, bound, "threshold", var_e <= bound)
        metrics["eigen_energy"] = _num(state.eigen_energy, 0.0, "oracle")

    if (model.body_dim == 3 and state.quantum_numbers is not None
            and len(state.quantum_numbers) == 3):
        lz = expectation(angular_momentum(state, model, 0), measure)[2]
        m_qn = state.quantum_numbers[2]
        target = m_qn * model.hbar
        tol_lz = cfg.tol("closed_form", 1e-6)
        checks["L_z"] = _num(lz, tol_lz, "oracle", abs(lz - target) <= tol_lz)

    return {"state": state.label}, {**checks, **metrics}, state, \
        _marginal_histogram(state)


def _cmd_evolve(cfg: RunConfig):
    state = _build_state(cfg)
    model = state.model
    evo = cfg.raw.get("evolution")
    if evo is None:
        raise ConfigError("evolve needs an evolution section")
    steps = evo.get("steps", 100)
    record = split_step(state, model, evo["dt"], steps,
                        stride=evo.get("stride"))

    drift = float(np.abs(record.norms - record.norms[0]).max())
    tol_norm = cfg.tol("unitarity", 1e-10) * max(1.0, steps / 1e4)
    e0 = qm_energy_expect(state, model)
    e1 = qm_energy_expect(record.final, model)
    e_drift = _rel(e0, e1)
    tol_e = cfg.tol("energy_drift", 1e-6)
    checks = {
        "unitarity": _num(drift, tol_norm, "threshold", drift <= tol_norm),
        "energy_conservation": _num(e_drift, tol_e, "threshold",
                                    e_drift <= tol_e),
    }
    final_state = CatalogState(f"{state.label}+evolved", model, record.final)
    extra = {"state": state.label, "steps": steps, "dt": evo["dt"]}
    return extra, checks, final_state, _marginal_histogram(final_state)


def _snapshot_triple(state: CatalogState, model: Model, dt: float,
                     center: float = 0.0):
    leaves = state.components if state.components else ((1, state),)
    if all(leaf.eigen_energy is not None for _, leaf in leaves):
        snaps = [analytic_evolve(state, center + t).field
                 for t in (-dt, 0.0, dt)]
        return snaps, "analytic"
    if center != 0.0:
        raise ConfigError("evolution.t needs a state made of eigenstates")
    record = split_step(state, model, dt, 2, stride=1)
    return record.fields, "split_step"


def _cmd_madelung_check(cfg: RunConfig):
    state = _build_state(cfg)
    model = state.model
    evo = cfg.raw.get("evolution") or {"dt": 1e-4}
    dt = evo["dt"]
    snaps, source = _snapshot_triple(state, model, dt,
                                     center=evo.get("t", 0.0))

    cont = continuity_residual(snaps, dt, model)
    force = force_residual(snaps, dt, model, a=cfg.raw.get("body", 0))
    vort = vorticity_residual(snaps[1], model)

    tol_res = cfg.tol("residual", 1e-8 if source == "analytic" else 1e-3)
    tol_vort = cfg.tol("vorticity", 1e-6)
    checks = {
        "continuity_residual": _num(cont.norm_l2, tol_res, "oracle",
                                    cont.norm_l2 <= tol_res),
        "force_residual": _num(force.norm_l2, tol_res, "oracle",
                               force.norm_l2 <= tol_res),
        "vorticity_residual": _num(vort.norm_l2, tol_vort, "oracle",
                                   vort.norm_l2 <= tol_vort),
        "masked_fraction": _num(force.masked_fraction, MASK_FRACTION_LIMIT,
                                "threshold",
                                force.masked_fraction < MASK_FRACTION_LIMIT),
    }
    extra = {"state": state.label, "snapshots": source, "dt": dt}
    return extra, checks, state, _marginal_histogram(state)


def _cmd_double_slit(cfg: RunConfig):
    result = run_double_slit(cfg.raw.get("double_slit"))
    frac = result.config["fringe_prominence"]
    n_double = count_fringes(result.double, frac)
    n_mix = count_fringes(result.mixture, frac)
    mirror = mirror_l1(result.left, result.right)

    tol_dist = cfg.tol("distance", 0.1)
    tol_mirror = cfg.tol("mirror", 1e-3)
    tol_budget = cfg.tol("budget", 1e-3)
    checks = {
        "mixture_distance": _num(result.distance, tol_dist, "threshold",
                                 result.distance >= tol_dist),
        "fringes_double": _num(n_double, 3, "threshold", n_double >= 3),
        "fringes_mixture": _num(n_mix, 2, "threshold", n_mix <= 2),
        "mirror_symmetry": _num(mirror, tol_mirror, "threshold",
                                mirror <= tol_mirror),
    }
    for which, budget in result.budgets.items():
        total = budget["detector"] + budget["remaining"] + budget["absorbed"]
        checks[f"budget_{which}"] = _num(
            total, tol_budget, "threshold", abs(total - 1.0) <= tol_budget)

    hist_cols = (["y", "double", "left", "right", "mixture"],
                 [result.double.centers, result.double.normalized,
                  result.left.normalized, result.right.normalized,
                  result.mixture])
    return {"config": result.config}, checks, None, hist_cols


def _cmd_moments(cfg: RunConfig):
    state = _build_state(cfg)
    model = state.model
    table = moment_divergence_report(state, model, cfg.raw.get("k_max", 4))

    tol_k1 = cfg.tol("moment_k1", 1e-10)
    tol_pos = cfg.tol("moment_position", 1e-9)
    row1 = table.row("energy", 1)
    rel1 = _rel(row1.kolmogorov_value, row1.qm_value)
    pos_rel = max(_rel(r.kolmogorov_value, r.qm_value)
                  for r in table.rows if r.observable.startswith("position"))
    checks = {
        "energy_k1_identity": _num(rel1, tol_k1, "identity", rel1 <= tol_k1),
        "position_moments": _num(pos_rel, tol_pos, "identity",
                                 pos_rel <= tol_pos),
    }
    metrics = {}
    for r in table.rows:
        key = f"{r.observable}_k{r.k}"
        metrics[f"{key}_kolmogorov"] = _num(r.kolmogorov_value, 0.0, "identity")
        metrics[f"{key}_qm"] = _num(r.qm_value, 0.0, "identity")

    obs_code = [0.0 if r.observable == "energy" else 1.0 for r in table.rows]
    hist = (["observable_code", "k", "kolmogorov", "qm", "abs_diff"],
            [np.array(obs_code),
             np.array([r.k for r in table.rows], dtype=float),
             np.array([r.kolmogorov_value for r in table.rows]),
             np.array([r.qm_value for r in table.rows]),
             np.array([r.abs_diff for r in table.rows])])
    return {"state": state.label}, {**checks, **metrics}, state, hist


def _cmd_uncertainty(cfg: RunConfig):
    state = _build_state(cfg)
    model = state.model
    rep = uncertainty_report(state, model, a=cfg.raw.get("body", 0))
    tol = cfg.tol("decomposition", 1e-6)
    checks = {
        "variance_decomposition": _num(rep.decomposition_check, tol,
                                       "identity",
                                       rep.decomposition_check <= tol),
    }
    metrics = {
        "sigma_x": _num(rep.sigma_x, 0.0, "identity"),
        "sigma_p_qm": _num(rep.sigma_p_qm, 0.0, "identity"),
        "m_sigma_v": _num(rep.m_sigma_v, 0.0, "identity"),
        "m_sigma_u": _num(rep.m_sigma_u, 0.0, "identity"),
        "qm_product": _num(rep.qm_product, 0.0, "identity"),
        "drift_product": _num(rep.drift_product, 0.0, "identity"),
    }
    return ({"state": state.label, "axis": rep.axis},
            {**checks, **metrics}, state, _marginal_histogram(state))


def _cmd_sample(cfg: RunConfig):
    state = _build_state(cfg)
    measure = born_measure(state)
    n = cfg.raw.get("samples", 100000)
    seed = cfg.seed

    pts = sample(measure, n, seed)
    pts_again = sample(measure, n, seed)
    reproducible = bool(np.array_equal(pts, pts_again))

    # chi-square over 64 roughly equal-probability CDF bins of the flat cells
    mass = measure.cell_mass.ravel()
    cdf = kernels.running_sum(mass)
    cdf = cdf / cdf[-1]
    n_bins = 64
    bin_of_cell = np.minimum((cdf * n_bins).astype(np.int64), n_bins - 1)
    expected = np.bincount(bin_of_cell, weights=mass, minlength=n_bins)

    grid = measure.grid
    idx = []
    for axis in range(grid.dim):
        lo = grid.extents[axis][0]
        h = grid.spacing[axis]
        j = np.rint((pts[:, axis] - lo) / h).astype(np.int64)
        idx.append(np.clip(j, 0, grid.points[axis] - 1))
    flat = np.ravel_multi_index(idx, grid.shape)
    observed = np.bincount(bin_of_cell[flat], minlength=n_bins).astype(float)

    keep = expected > 0
    chi_p = float(chisquare(observed[keep],
                            expected[keep] / expected[keep].sum() * n).pvalue)
    tol_p = cfg.tol("chi_square_p", 1e-3)
    checks = {
        "reproducible": _num(0.0 if reproducible else 1.0, 0.0, "identity",
                             reproducible),
        "chi_square_p": _num(chi_p, tol_p, "threshold", chi_p > tol_p),
    }
    hist = (["bin", "observed", "expected"],
            [np.arange(n_bins, dtype=float), observed,
             expected / expected.sum() * n])
    return ({"state": state.label, "samples": n, "seed": seed},
            checks, state, hist)


_DISPATCH = {
    "list-states": _cmd_list_states,
    "expect": _cmd_expect,
    "evolve": _cmd_evolve,
    "madelung-check": _cmd_madelung_check,
    "double-slit": _cmd_double_slit,
    "moments": _cmd_moments,
    "uncertainty": _cmd_uncertainty,
    "sample": _cmd_sample,
}


def run(config: RunConfig) -> int:
    """Execute one command, write artifacts, and return the exit code."""
    extra, entries, field_state, hist = _DISPATCH[config.command](config)

    checks = {k: v for k, v in entries.items() if "pass" in v}
    failures = sorted(k for k, v in checks.items() if not v["pass"])
    summary = {
        "command": config.command,
        "name": config.name,
        "backend": kernels.backend(),
        "checks": entries,
        "failures": failures,
        "pass": not failures,
        **extra,
    }

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "summary.json", summary)
    if field_state is not None:
        _write_fields_csv(out / "fields.csv", field_state,
                          field_state.model)
    if hist is not None:
        _write_csv(out / "histogram.csv", hist[0], hist[1])
    return 0 if not failures else 1


def main(argv=None) -> int:
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"bornlab: {exc}", file=sys.stderr)
        return 2
    try:
        return run(config)
    except FloatingPointError as exc:
        print(f"bornlab: numerical abort: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"bornlab: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"bornlab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
