"""Random variables of the hybrid description: drift and osmotic velocity,
pointwise energy, angular momentum, plus their quantum counterparts.

Each builder returns a :class:`~bornlab.probability.RandomVariable` whose
``numer`` holds the per-cell products f * |psi|^2 in closed form.  Those
products stay finite at nodes, and first moments computed from them reduce to
the same pairwise sums as the corresponding quantum inner products, so the
expectation identities hold to rounding rather than to quadrature accuracy.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from . import kernels
from .catalog import CatalogState, Model
from .grid import ComplexField, RealField, gradient, laplacian
from .probability import RandomVariable

__all__ = [
    "NODE_THRESHOLD",
    "node_mask",
    "apply_hamiltonian",
    "drift_velocity",
    "osmotic_velocity",
    "energy_rv",
    "angular_momentum",
    "coordinate_rv",
    "qm_momentum_expect",
    "qm_energy_expect",
    "quantum_potential",
    "madelung_energy",
]

NODE_THRESHOLD = 1e-12


def _field(state) -> ComplexField:
    return state.field if isinstance(state, CatalogState) else state


def node_mask(state, threshold: float = NODE_THRESHOLD) -> np.ndarray:
    """True where the density clears ``threshold`` relative to its peak."""
    f = _field(state)
    rho = kernels.abs2(f.values)
    return rho > threshold * rho.max()


def apply_hamiltonian(state, model: Model) -> ComplexField:
    """H psi = -sum_a hbar^2/(2 m_a) lap_a psi + V psi."""
    f = _field(state)
    out = model.potential_values(f.grid).astype(np.complex128) * f.values
    for a in range(model.n_bodies):
        lap = laplacian(f, axes=tuple(model.axes_of(a)))
        out -= model.hbar ** 2 / (2.0 * model.masses[a]) * lap.values
    return ComplexField(f.grid, out)


def drift_velocity(state, model: Model, a: int = 0) -> RandomVariable:
    """v_a = (hbar/m_a) Im(grad_a psi / psi) on non-node cells."""
    f = _field(state)
    rho = kernels.abs2(f.values)
    mask = rho > NODE_THRESHOLD * rho.max()
    scale = model.hbar / model.masses[a]
    comps = []
    numer = []
    for axis in model.axes_of(a):
        dpsi = gradient(f, axis).values
        num = scale * (np.conj(f.values) * dpsi).imag
        with np.errstate(divide="ignore", invalid="ignore"):
            comps.append(np.where(mask, num / rho, 0.0))
        numer.append(num)
    return RandomVariable(f.grid, tuple(comps), mask, tuple(numer),
                          name=f"drift_velocity[{a}]")


def osmotic_velocity(state, model: Model, a: int = 0) -> RandomVariable:
    """u_a = (hbar / 2 m_a) grad_a rho / rho on non-node cells."""
    f = _field(state)
    rho = kernels.abs2(f.values)
    mask = rho > NODE_THRESHOLD * rho.max()
    scale = model.hbar / model.masses[a]
    comps = []
    numer = []
    for axis in model.axes_of(a):
        dpsi = gradient(f, axis).values
        num = scale * (np.conj(f.values) * dpsi).real
        with np.errstate(divide="ignore", invalid="ignore"):
            comps.append(np.where(mask, num / rho, 0.0))
        numer.append(num)
    return RandomVariable(f.grid, tuple(comps), mask, tuple(numer),
                          name=f"osmotic_velocity[{a}]")


def energy_rv(state, model: Model) -> RandomVariable:
    """Pointwise energy: kinetic of the drift flow, potential, and the
    curvature term -sum_a hbar^2/(2 m_a) lap_a sqrt(rho)/sqrt(rho).

    The three terms combine into Re(conj(psi) H psi) / rho, which is what is
    evaluated; the numerator is therefore exactly the quantum energy density.
    """
    f = _field(state)
    rho = kernels.abs2(f.values)
    mask = rho > NODE_THRESHOLD * rho.max()
    hpsi = apply_hamiltonian(f, model).values
    num = (np.conj(f.values) * hpsi).real
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(mask, num / rho, 0.0)
    return RandomVariable(f.grid, (vals,), mask, (num,), name="energy")


def angular_momentum(state, model: Model, a: int = 0,
                     r0: Optional[Sequence[float]] = None) -> RandomVariable:
    """L_a = m_a (r - r0) x v_a for a 3D body; components (L_x, L_y, L_z)."""
    if model.body_dim != 3:
        raise ValueError("angular momentum needs three coordinates per body")
    f = _field(state)
    v = drift_velocity(state, model, a)
    axes = tuple(model.axes_of(a))
    origin = (0.0, 0.0, 0.0) if r0 is None else tuple(float(c) for c in r0)
    meshes = f.grid.meshes()
    rel = [np.broadcast_to(meshes[axes[i]] - origin[i], f.grid.shape)
           for i in range(3)]
    m = model.masses[a]
    comps = []
    numer = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        comps.append(m * (rel[j] * v.comps[k] - rel[k] * v.comps[j]))
        numer.append(m * (rel[j] * v.numer[k] - rel[k] * v.numer[j]))
    return RandomVariable(f.grid, tuple(comps), v.mask, tuple(numer),
                          name=f"angular_momentum[{a}]")


def coordinate_rv(state, axis: int) -> RandomVariable:
    """The coordinate x_axis as a random variable (defined on every cell)."""
    f = _field(state)
    x = np.broadcast_to(f.grid.meshes()[axis], f.grid.shape).astype(np.float64)
    rho = kernels.abs2(f.values)
    mask = np.ones(f.grid.shape, dtype=bool)
    return RandomVariable(f.grid, (x.copy(),), mask, (x * rho,),
                          name=f"x[{axis}]")


def qm_momentum_expect(state, model: Model, a: int = 0) -> np.ndarray:
    """Re <psi, -i hbar grad_a psi>, one entry per coordinate of body a."""
    f = _field(state)
    out = []
    for axis in model.axes_of(a):
        dpsi = gradient(f, axis).values
        s = kernels.pairwise_sum_complex(np.conj(f.values) * dpsi)
        out.append((-1j * model.hbar * s * f.grid.cell_volume).real)
    return np.array(out)


def qm_energy_expect(state, model: Model) -> float:
    """<psi, H psi> (real part; the imaginary part is rounding noise)."""
    f = _field(state)
    hpsi = apply_hamiltonian(f, model).values
    s = kernels.pairwise_sum_complex(np.conj(f.values) * hpsi)
    return float((s * f.grid.cell_volume).real)


def _sqrt_rho_curvature(f: ComplexField, model: Model, a: int,
                        rho: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """lap_a sqrt(rho) / sqrt(rho) without differentiating sqrt(rho) itself."""
    axes = tuple(model.axes_of(a))
    analytic = f.analytic
    if analytic is not None and getattr(analytic, "has_hessian", False):
        coords = f.grid.meshes()
        psi = f.values
        grad_rho_sq = np.zeros(f.grid.shape)
        lap_rho = np.zeros(f.grid.shape)
        for axis in axes:
            dpsi = np.broadcast_to(analytic.gradient(coords, axis), f.grid.shape)
            ddpsi = np.broadcast_to(analytic.hessian(coords, axis, axis),
                                    f.grid.shape)
            drho = 2.0 * (np.conj(psi) * dpsi).real
            grad_rho_sq += drho * drho
            lap_rho += 2.0 * ((np.conj(dpsi) * dpsi).real
                              + (np.conj(psi) * ddpsi).real)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = lap_rho / (2.0 * rho) - grad_rho_sq / (4.0 * rho * rho)
        return np.where(mask, out, 0.0)
    sqrt_rho = ComplexField(f.grid, np.sqrt(rho).astype(np.complex128))
    lap = laplacian(sqrt_rho, axes=axes).values.real
    with np.errstate(divide="ignore", invalid="ignore"):
        out = lap / np.sqrt(rho)
    return np.where(mask, out, 0.0)


def quantum_potential(state, model: Model) -> RealField:
    """-sum_a hbar^2/(2 m_a) lap_a sqrt(rho)/sqrt(rho) on non-node cells."""
    f = _field(state)
    rho = kernels.abs2(f.values)
    mask = rho > NODE_THRESHOLD * rho.max()
    out = np.zeros(f.grid.shape)
    for a in range(model.n_bodies):
        curv = _sqrt_rho_curvature(f, model, a, rho, mask)
        out -= model.hbar ** 2 / (2.0 * model.masses[a]) * curv
    return RealField(f.grid, out, mask)


def madelung_energy(state, model: Model) -> RealField:
    """Energy assembled term by term: sum_a m_a v_a^2 / 2 + V + Q.

    Cross-checks :func:`energy_rv`, which evaluates the same quantity through
    the quantum energy density instead.
    """
    f = _field(state)
    q = quantum_potential(state, model)
    total = model.potential_values(f.grid) + q.values
    for a in range(model.n_bodies):
        v = drift_velocity(state, model, a)
        for comp in v.comps:
            total = total + 0.5 * model.masses[a] * comp * comp
    return RealField(f.grid, np.where(q.mask, total, 0.0), q.mask)
