"""End-to-end experiments: the double-slit flux statistics, the divergence of
higher moments from their operator counterparts, and the ensemble reading of
the uncertainty relation."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field as dc_field
from importlib import resources
from typing import Optional

import numpy as np
from scipy.signal import find_peaks

from . import kernels
from .catalog import CatalogState, Model, double_slit_model, gaussian_packet
from .grid import ComplexField, gradient, inner_product, make_grid
from .observables import (coordinate_rv, drift_velocity, energy_rv,
                          osmotic_velocity, qm_momentum_expect)
from .probability import born_measure, expectation
from .propagate import split_step

__all__ = [
    "DetectorHistogram",
    "DoubleSlitResult",
    "MomentRow",
    "MomentTable",
    "UncertaintyReport",
    "default_double_slit_config",
    "run_double_slit",
    "count_fringes",
    "mirror_l1",
    "moment_divergence_report",
    "uncertainty_report",
]


@dataclass
class DetectorHistogram:
    """Arrival mass along the detector line, one bin per grid cell.

    ``mass_per_bin`` is raw transmitted probability (its sum is at most one
    because part of the packet never arrives); ``normalized`` rescales it to
    a distribution over arrival positions.
    """

    axis: str
    bin_edges: np.ndarray
    mass_per_bin: np.ndarray
    collection: str
    clipped_mass: float = 0.0

    def __post_init__(self) -> None:
        if np.any(self.mass_per_bin < 0):
            raise ValueError("bin masses must be nonnegative")
        if self.total > 1.0 + 1e-6:
            raise ValueError(f"detector mass {self.total} exceeds 1")

    @property
    def total(self) -> float:
        return float(kernels.pairwise_sum(self.mass_per_bin))

    @property
    def normalized(self) -> np.ndarray:
        return self.mass_per_bin / self.total

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


@dataclass
class DoubleSlitResult:
    config: dict
    double: DetectorHistogram
    left: DetectorHistogram
    right: DetectorHistogram
    distance: float
    budgets: dict = dc_field(default_factory=dict)

    def histogram(self, which: str) -> DetectorHistogram:
        return {"double": self.double, "left": self.left,
                "right": self.right}[which]

    @property
    def mixture(self) -> np.ndarray:
        return 0.5 * (self.left.normalized + self.right.normalized)


def default_double_slit_config() -> dict:
    text = resources.files("bornlab").joinpath(
        "data/double_slit_default.json").read_text()
    return json.loads(text)


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in out:
            raise KeyError(f"unknown config key {key!r}")
        if isinstance(out[key], dict) and isinstance(val, dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _one_slit_run(cfg: dict, which: str) -> tuple[DetectorHistogram, dict]:
    grid = make_grid(cfg["grid"]["extents"], cfg["grid"]["points"])
    bar = cfg["barrier"]
    model = double_slit_model(bar["x"], tuple(bar["slit_centers"]),
                              bar["slit_width"], bar["height"],
                              which, thickness=bar["thickness"])
    pk = cfg["packet"]
    packet = gaussian_packet(pk["center"], pk["sigma"], pk["k0"], model, grid)

    x_axis = grid.axis_coords(0)
    ix = int(np.argmin(np.abs(x_axis - cfg["detector_x"])))
    kx = grid.wavenumbers(0).reshape(-1, 1)
    hbar = model.hbar
    mass = model.masses[0]
    dt = cfg["evolution"]["dt"]
    hy = grid.spacing[1]

    ny = grid.points[1]
    pos = np.zeros(ny)
    neg = np.zeros(ny)

    def watch_flux(step, psi):
        dpsi_col = np.fft.ifft(1j * kx * np.fft.fft(psi, axis=0), axis=0)[ix]
        j_x = (hbar / mass) * (np.conj(psi[ix]) * dpsi_col).imag
        np.add(pos, np.clip(j_x, 0.0, None) * dt, out=pos)
        np.add(neg, np.clip(-j_x, 0.0, None) * dt, out=neg)

    record = split_step(packet, model, dt, cfg["evolution"]["steps"],
                        on_step=watch_flux)

    net = float(kernels.pairwise_sum((pos - neg) * hy))
    if net < 1e-3:
        raise ValueError(
            f"transmitted mass {net:.2e} < 1e-3: packet never reaches the detector")

    final_mass = kernels.abs2(record.final.values) * grid.cell_volume
    left_cells = x_axis < x_axis[ix]
    remaining = float(kernels.pairwise_sum(
        np.ascontiguousarray(final_mass[left_cells, :])))

    y0 = grid.axis_coords(1)[0]
    edges = y0 - hy / 2.0 + hy * np.arange(ny + 1)
    hist = DetectorHistogram("y", edges, pos * hy, "time-integrated",
                             clipped_mass=float(kernels.pairwise_sum(neg * hy)))
    budget = {"detector": net, "remaining": remaining, "absorbed": 0.0}
    return hist, budget


def run_double_slit(config: Optional[dict] = None) -> DoubleSlitResult:
    """Propagate the same packet against both-slit, left-only and right-only
    barriers and histogram the flux through the detector line.

    ``config`` entries override the packaged default geometry; unknown keys
    are rejected.  The distance is the L1 difference between the normalized
    both-slit arrival distribution and the equal mixture of the single-slit
    ones.
    """
    cfg = default_double_slit_config()
    if config:
        cfg = _deep_merge(cfg, config)
    if cfg["detector_x"] <= cfg["barrier"]["x"] + cfg["barrier"]["thickness"]:
        raise ValueError("detector must sit strictly downstream of the barrier")

    runs = {}
    budgets = {}
    for which in ("both", "left", "right"):
        runs[which], budgets[which] = _one_slit_run(cfg, which)

    mixture = 0.5 * (runs["left"].normalized + runs["right"].normalized)
    distance = float(np.abs(runs["both"].normalized - mixture).sum())
    return DoubleSlitResult(cfg, runs["both"], runs["left"], runs["right"],
                            distance, budgets)


def count_fringes(hist_or_values, prominence_fraction: float = 0.25) -> int:
    """Number of local maxima with prominence above a fraction of the peak."""
    vals = (hist_or_values.normalized
            if isinstance(hist_or_values, DetectorHistogram)
            else np.asarray(hist_or_values, dtype=np.float64))
    peaks, _ = find_peaks(vals, prominence=prominence_fraction * vals.max())
    return int(len(peaks))


def mirror_l1(a: DetectorHistogram, b: DetectorHistogram) -> float:
    """L1 distance between ``a`` and the mirror image of ``b`` about y = 0.

    Grid coordinates are cell centers with the reflection axis on a cell
    boundary, so the mirror of cell j is cell (n - j) mod n.
    """
    mirrored = np.roll(b.normalized[::-1], 1)
    return float(np.abs(a.normalized - mirrored).sum())


@dataclass
class MomentRow:
    observable: str
    k: int
    kolmogorov_value: float
    qm_value: float

    @property
    def abs_diff(self) -> float:
        return abs(self.kolmogorov_value - self.qm_value)


@dataclass
class MomentTable:
    state_label: str
    rows: list[MomentRow]

    def row(self, observable: str, k: int) -> MomentRow:
        for r in self.rows:
            if r.observable == observable and r.k == k:
                return r
        raise KeyError(f"no row ({observable}, {k})")


def moment_divergence_report(state: CatalogState, model: Model,
                             k_max: int) -> MomentTable:
    """Moments of the pointwise energy against operator moments <H^k>, with
    position moments as the control that must agree.

    The operator side needs the spectral decomposition, so the state must be
    an eigenstate or a superposition of them.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    leaves = state.components if state.components else ((1.0 + 0.0j, state),)
    for _, leaf in leaves:
        if leaf.eigen_energy is None:
            raise ValueError(
                "operator energy moments need an eigenstate superposition")
    weights = [(abs(c) ** 2, leaf.eigen_energy) for c, leaf in leaves]

    measure = born_measure(state)
    erv = energy_rv(state, model)
    xrv = coordinate_rv(state, axis=0)
    f = state.field
    x = np.broadcast_to(f.grid.meshes()[0], f.grid.shape)

    rows = []
    for k in range(1, k_max + 1):
        kolm_e = expectation(erv, measure, order=k)
        qm_e = sum(w * e ** k for w, e in weights)
        rows.append(MomentRow("energy", k, float(kolm_e), float(qm_e)))
    for k in range(1, k_max + 1):
        kolm_x = expectation(xrv, measure, order=k)
        xk_field = ComplexField(f.grid, x ** k * f.values)
        qm_x = inner_product(f, xk_field).real
        rows.append(MomentRow("position[0]", k, float(kolm_x), float(qm_x)))
    return MomentTable(state.label, rows)


@dataclass
class UncertaintyReport:
    """Position spread against the quantum and drift-only momentum spreads.

    ``decomposition_check`` is the relative residual of
    sigma_p_qm^2 = m^2 (sigma_v^2 + E[u^2]); the drift-only product
    sigma_x * m sigma_v may drop below hbar/2, the full product may not.
    """

    axis: int
    sigma_x: float
    sigma_p_qm: float
    m_sigma_v: float
    m_sigma_u: float
    decomposition_check: float

    @property
    def qm_product(self) -> float:
        return self.sigma_x * self.sigma_p_qm

    @property
    def drift_product(self) -> float:
        return self.sigma_x * self.m_sigma_v


def uncertainty_report(state, model: Model, a: int = 0,
                       axis: Optional[int] = None) -> UncertaintyReport:
    axes = tuple(model.axes_of(a))
    axis = axes[0] if axis is None else int(axis)
    if axis not in axes:
        raise ValueError(f"axis {axis} does not belong to body {a}")
    comp = axis - axes[0]
    m = model.masses[a]

    measure = born_measure(state)
    xrv = coordinate_rv(state, axis)
    var_x = expectation(xrv, measure, order=2, central=True)

    vrv = drift_velocity(state, model, a)
    var_v = expectation(vrv, measure, order=2, central=True)
    var_v = float(var_v[comp]) if vrv.n_comps > 1 else float(var_v)

    urv = osmotic_velocity(state, model, a)
    e_u2 = expectation(urv, measure, order=2)
    e_u2 = float(e_u2[comp]) if urv.n_comps > 1 else float(e_u2)

    field = state.field if isinstance(state, CatalogState) else state
    dpsi = gradient(field, axis)
    p_mean = qm_momentum_expect(state, model, a)[comp]
    var_p = (model.hbar ** 2 * inner_product(dpsi, dpsi).real - p_mean ** 2)

    decomposition = abs(var_p - m * m * (var_v + e_u2)) / var_p
    return UncertaintyReport(
        axis=axis,
        sigma_x=float(np.sqrt(var_x)),
        sigma_p_qm=float(np.sqrt(var_p)),
        m_sigma_v=float(m * np.sqrt(var_v)),
        m_sigma_u=float(m * np.sqrt(e_u2)),
        decomposition_check=float(decomposition),
    )
