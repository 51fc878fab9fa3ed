"""Residuals of the hydrodynamic equations satisfied by the Born flow.

Velocity and quantum-force fields blow up polynomially toward nodes and box
edges, so they are never differentiated directly.  Every derivative is
assembled from derivatives of psi and rho, which decay; the few divisions by
rho happen last, on cells that clear the node threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .catalog import CatalogState, Model
from .grid import ComplexField, gradient, laplacian
from .observables import NODE_THRESHOLD

__all__ = [
    "ResidualReport",
    "ConvergenceStudy",
    "continuity_residual",
    "force_residual",
    "vorticity_residual",
    "convergence_study",
]

MASK_FRACTION_LIMIT = 0.2


@dataclass
class ResidualReport:
    """Norms of one equation's residual at one resolution."""

    equation: str
    norm_l2: float
    norm_max: float
    resolution: dict
    masked_fraction: float

    @property
    def reliable(self) -> bool:
        return self.masked_fraction < MASK_FRACTION_LIMIT


def _field(state) -> ComplexField:
    return state.field if isinstance(state, CatalogState) else state


def _norms(residual: np.ndarray, mask: Optional[np.ndarray],
           cell_volume: float) -> tuple[float, float]:
    vals = residual if mask is None else residual[mask]
    if vals.size == 0:
        return 0.0, 0.0
    l2 = math.sqrt(kernels.pairwise_sum(np.ascontiguousarray(vals * vals))
                   * cell_volume)
    return l2, float(np.abs(vals).max())


class _Atoms:
    """Lazy derivatives of one field: d_i psi, d_ij psi, lap_b psi, d_i lap_b psi.

    Closed-form evaluators are used as far as they reach; anything missing
    falls back to spectral differentiation of an already-computed atom.
    """

    def __init__(self, f: ComplexField):
        self.f = f
        self.grid = f.grid
        self.psi = f.values
        self._coords = f.grid.meshes()
        self._dpsi: dict = {}
        self._hess: dict = {}
        self._lap: dict = {}
        self._dlap: dict = {}

    def _sample(self, arr) -> np.ndarray:
        return np.broadcast_to(arr, self.grid.shape).astype(np.complex128)

    def dpsi(self, axis: int) -> np.ndarray:
        if axis not in self._dpsi:
            self._dpsi[axis] = gradient(self.f, axis).values
        return self._dpsi[axis]

    def hess(self, i: int, j: int) -> np.ndarray:
        key = (min(i, j), max(i, j))
        if key not in self._hess:
            an = self.f.analytic
            if an is not None and getattr(an, "has_hessian", False):
                self._hess[key] = self._sample(an.hessian(self._coords, *key))
            else:
                df = ComplexField(self.grid, self.dpsi(key[0]))
                self._hess[key] = gradient(df, key[1]).values
        return self._hess[key]

    def lap(self, axes: tuple) -> np.ndarray:
        if axes not in self._lap:
            self._lap[axes] = laplacian(self.f, axes=axes).values
        return self._lap[axes]

    def dlap(self, axis: int, axes: tuple) -> np.ndarray:
        key = (axis, axes)
        if key not in self._dlap:
            an = self.f.analytic
            if an is not None and getattr(an, "has_grad_laplacian", False):
                self._dlap[key] = self._sample(
                    an.grad_laplacian(self._coords, axis, axes))
            else:
                lf = ComplexField(self.grid, self.lap(axes))
                self._dlap[key] = gradient(lf, axis).values
        return self._dlap[key]

    # real density atoms built on the complex ones ------------------------

    @property
    def rho(self) -> np.ndarray:
        return kernels.abs2(self.psi)

    def drho(self, i: int) -> np.ndarray:
        return 2.0 * (np.conj(self.psi) * self.dpsi(i)).real

    def ddrho(self, i: int, j: int) -> np.ndarray:
        return 2.0 * ((np.conj(self.dpsi(j)) * self.dpsi(i)).real
                      + (np.conj(self.psi) * self.hess(i, j)).real)

    def dlaprho(self, i: int, axes: tuple) -> np.ndarray:
        out = 2.0 * ((np.conj(self.dpsi(i)) * self.lap(axes)).real
                     + (np.conj(self.psi) * self.dlap(i, axes)).real)
        for j in axes:
            out += 4.0 * (np.conj(self.dpsi(j)) * self.hess(i, j)).real
        return out


def _snapshot_fields(snapshots) -> tuple[ComplexField, ComplexField, ComplexField]:
    if len(snapshots) != 3:
        raise ValueError("need exactly three snapshots: t-dt, t, t+dt")
    before, center, after = (_field(s) for s in snapshots)
    if before.grid != center.grid or after.grid != center.grid:
        raise ValueError("snapshots must share one grid")
    return before, center, after


def continuity_residual(snapshots, dt: float, model: Model) -> ResidualReport:
    """d rho/dt + sum_a div_a(rho v_a), with the flux divergence taken in the
    node-safe form (hbar/m_a) Im(conj(psi) lap_a psi)."""
    before, center, after = _snapshot_fields(snapshots)
    if dt <= 0:
        raise ValueError("dt must be positive")
    drho_dt = (kernels.abs2(after.values) - kernels.abs2(before.values)) / (2 * dt)
    flux_div = np.zeros(center.grid.shape)
    for a in range(model.n_bodies):
        lap = laplacian(center, axes=tuple(model.axes_of(a))).values
        flux_div += (model.hbar / model.masses[a]) * (
            np.conj(center.values) * lap).imag
    residual = drho_dt + flux_div
    l2, mx = _norms(residual, None, center.grid.cell_volume)
    return ResidualReport(
        "continuity", l2, mx,
        {"h": max(center.grid.spacing), "dt": dt}, 0.0)


def _velocity_and_jacobian(atoms: _Atoms, model: Model, mask: np.ndarray):
    """Drift components and all d_q v_p on masked cells, via the quotient rule."""
    grid = atoms.grid
    rho = atoms.rho
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_rho = np.where(mask, 1.0 / rho, 0.0)
    num = {}
    v = {}
    for p in range(grid.dim):
        num[p] = (model.hbar / model.mass_of_axis(p)) * (
            np.conj(atoms.psi) * atoms.dpsi(p)).imag
        v[p] = num[p] * inv_rho

    def dnum(p, q):
        return (model.hbar / model.mass_of_axis(p)) * (
            (np.conj(atoms.dpsi(q)) * atoms.dpsi(p)).imag
            + (np.conj(atoms.psi) * atoms.hess(p, q)).imag)

    def jac(p, q):
        return (dnum(p, q) - v[p] * atoms.drho(q)) * inv_rho

    return v, jac


def force_residual(snapshots, dt: float, model: Model,
                   a: int = 0) -> ResidualReport:
    """Balance of body a: m_a Dv_a/Dt against
    -grad_a V + sum_b hbar^2/(2 m_b) grad_a(lap_b sqrt(rho)/sqrt(rho)).

    All spatial derivatives are assembled from psi and rho atoms of the center
    snapshot; the time derivative is a centered difference of the drift field.
    """
    before, center, after = _snapshot_fields(snapshots)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if model.potential.grad is None:
        raise ValueError("force residual needs a potential gradient")
    grid = center.grid
    coords = grid.meshes()

    rho_c = kernels.abs2(center.values)
    mask = rho_c > NODE_THRESHOLD * rho_c.max()
    for side in (before, after):
        rho_s = kernels.abs2(side.values)
        mask &= rho_s > NODE_THRESHOLD * rho_s.max()

    atoms = _Atoms(center)
    v, jac = _velocity_and_jacobian(atoms, model, mask)
    rho = atoms.rho
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_rho = np.where(mask, 1.0 / rho, 0.0)

    def side_velocity(f: ComplexField, p: int) -> np.ndarray:
        rho_s = kernels.abs2(f.values)
        num = (model.hbar / model.mass_of_axis(p)) * (
            np.conj(f.values) * gradient(f, p).values).imag
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(mask, num / rho_s, 0.0)

    # grad of the curvature term, one entry per (axis, source body)
    def dcurv(i: int, axes: tuple) -> np.ndarray:
        lap_rho = sum(atoms.ddrho(j, j) for j in axes)
        grad_rho_sq = sum(atoms.drho(j) ** 2 for j in axes)
        cross = sum(atoms.drho(j) * atoms.ddrho(i, j) for j in axes)
        return (atoms.dlaprho(i, axes) * inv_rho * 0.5
                - lap_rho * atoms.drho(i) * inv_rho ** 2 * 0.5
                - cross * inv_rho ** 2 * 0.5
                + grad_rho_sq * atoms.drho(i) * inv_rho ** 3 * 0.5)

    worst_l2 = 0.0
    worst_max = 0.0
    m_a = model.masses[a]
    for i in model.axes_of(a):
        dv_dt = (side_velocity(after, i) - side_velocity(before, i)) / (2 * dt)
        advect = np.zeros(grid.shape)
        for q in range(grid.dim):
            advect += v[q] * jac(i, q)
        lhs = m_a * (dv_dt + advect)
        rhs = -np.broadcast_to(model.potential.grad(coords, i), grid.shape)
        rhs = rhs.astype(np.float64).copy()
        for b in range(model.n_bodies):
            rhs += (model.hbar ** 2 / (2.0 * model.masses[b])) * dcurv(
                i, tuple(model.axes_of(b)))
        l2, mx = _norms(lhs - rhs, mask, grid.cell_volume)
        worst_l2 = max(worst_l2, l2)
        worst_max = max(worst_max, mx)

    return ResidualReport(
        "force", worst_l2, worst_max,
        {"h": max(grid.spacing), "dt": dt}, 1.0 - float(mask.mean()))


def vorticity_residual(state, model: Model,
                       velocity_override: Optional[tuple] = None) -> ResidualReport:
    """Antisymmetry check: m_p d_q v_p - m_q d_p v_q over all axis pairs.

    ``velocity_override`` replaces the Born drift with external callables
    ``(field_fn, jacobian_fn)``; a rigidly rotating field then serves as a
    negative control with a known nonzero residual.
    """
    f = _field(state)
    grid = f.grid

    if velocity_override is not None:
        _, jacobian_fn = velocity_override
        coords = grid.meshes()

        def jac(p, q):
            return np.broadcast_to(jacobian_fn(coords, p, q),
                                   grid.shape).astype(np.float64)

        mask = np.ones(grid.shape, dtype=bool)
        fraction = 0.0
    else:
        rho = kernels.abs2(f.values)
        mask = rho > NODE_THRESHOLD * rho.max()
        atoms = _Atoms(f)
        _, jac = _velocity_and_jacobian(atoms, model, mask)
        fraction = 1.0 - float(mask.mean())

    worst_l2 = 0.0
    worst_max = 0.0
    for p in range(grid.dim):
        for q in range(p + 1, grid.dim):
            r_pq = (model.mass_of_axis(p) * jac(p, q)
                    - model.mass_of_axis(q) * jac(q, p))
            l2, mx = _norms(r_pq, mask, grid.cell_volume)
            worst_l2 = max(worst_l2, l2)
            worst_max = max(worst_max, mx)

    return ResidualReport(
        "vorticity", worst_l2, worst_max,
        {"h": max(grid.spacing), "dt": 0.0}, fraction)


@dataclass
class ConvergenceStudy:
    """Residual norms across refinements and the fitted decay orders."""

    resolutions: list
    reports: dict
    orders: dict

    SATURATION = 1e-12


def convergence_study(model: Model, state_builder: Callable,
                      resolutions: Sequence[tuple]) -> ConvergenceStudy:
    """Run all three residuals over a geometric refinement.

    ``state_builder(h, dt)`` must return the three snapshots at t-dt, t, t+dt.
    ``resolutions`` is a sequence of (h, dt) pairs, at least three entries,
    with dt strictly decreasing.  Orders are least-squares slopes of
    log(norm_l2) against log(dt); residuals already at rounding level report
    the string "saturated" instead of a meaningless slope.
    """
    if len(resolutions) < 3:
        raise ValueError("need at least three resolutions")
    dts = [float(dt) for _, dt in resolutions]
    ratios = [dts[i] / dts[i + 1] for i in range(len(dts) - 1)]
    if any(r <= 1.0 for r in ratios):
        raise ValueError("resolutions must refine dt monotonically")

    reports: dict = {"continuity": [], "force": [], "vorticity": []}
    for h, dt in resolutions:
        snaps = state_builder(h, dt)
        reports["continuity"].append(continuity_residual(snaps, dt, model))
        reports["force"].append(force_residual(snaps, dt, model))
        reports["vorticity"].append(vorticity_residual(snaps[1], model))

    orders: dict = {}
    for eq, reps in reports.items():
        norms = np.array([r.norm_l2 for r in reps])
        if np.all(norms < ConvergenceStudy.SATURATION):
            orders[eq] = "saturated"
            continue
        slope = np.polyfit(np.log(dts), np.log(norms), 1)[0]
        orders[eq] = float(slope)

    return ConvergenceStudy(list(resolutions), reports, orders)
