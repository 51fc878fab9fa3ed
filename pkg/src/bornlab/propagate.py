"""Time evolution: exact phase rotation for eigen-superpositions and a
Strang-split spectral stepper for everything else."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .catalog import CatalogState, Model, SumAnalytic
from .grid import ComplexField, inner_product

__all__ = ["EvolutionRecord", "analytic_evolve", "split_step"]


@dataclass
class EvolutionRecord:
    """Snapshots of a propagated field, with their times and norms."""

    times: np.ndarray
    fields: list[ComplexField]
    norms: np.ndarray
    method: str
    dt: float
    steps: int = 0
    extras: dict = dc_field(default_factory=dict)

    @property
    def final(self) -> ComplexField:
        return self.fields[-1]


def analytic_evolve(state: CatalogState, t: float) -> CatalogState:
    """Rotate each eigencomponent by exp(-i E t / hbar), exactly.

    Raises if the state (or any component of a superposition) does not carry
    an exact energy.
    """
    hbar = state.model.hbar
    leaves = state.components if state.components else ((1.0 + 0.0j, state),)
    for _, leaf in leaves:
        if leaf.eigen_energy is None:
            raise ValueError(
                f"state {leaf.label!r} has no exact energy; use split_step")

    vals = np.zeros(state.grid.shape, dtype=np.complex128)
    phased = []
    for c, leaf in leaves:
        ph = c * np.exp(-1j * leaf.eigen_energy * t / hbar)
        vals += ph * leaf.values
        phased.append((ph, leaf))

    analytic = None
    if all(leaf.field.analytic is not None for _, leaf in phased):
        analytic = SumAnalytic(tuple((ph, leaf.field.analytic)
                                     for ph, leaf in phased))
    out_field = ComplexField(state.grid, vals, analytic)
    comps = tuple(phased) if state.components else None
    return CatalogState(f"{state.label}@t={t}", state.model, out_field,
                        eigen_energy=state.eigen_energy,
                        quantum_numbers=state.quantum_numbers,
                        components=comps)


def _kinetic_phase(grid, model: Model, dt: float) -> np.ndarray:
    disp = np.zeros(grid.shape, dtype=np.float64)
    for axis in range(grid.dim):
        k = grid.wavenumbers(axis)
        shape = [1] * grid.dim
        shape[axis] = k.size
        disp = disp + (model.hbar * k.reshape(shape) ** 2
                       / (2.0 * model.mass_of_axis(axis)))
    return np.exp(-1j * dt * disp)


def split_step(state, model: Model, dt: float, steps: int,
               stride: int | None = None,
               on_step=None) -> EvolutionRecord:
    """Second-order split-step propagation with periodic boundaries.

    Snapshots are kept at step 0, every ``stride`` steps, and the final step.
    Raises on the first step at which the field stops being finite.
    ``on_step(step, psi)``, when given, observes the raw array after each
    step; it must not mutate it.
    """
    field = state.field if isinstance(state, CatalogState) else state
    grid = field.grid
    grid.require_spectral()
    if steps < 1 or dt <= 0:
        raise ValueError("need dt > 0 and at least one step")
    if stride is not None and stride < 1:
        raise ValueError("stride must be positive")

    v_vals = model.potential_values(grid)
    if not np.all(np.isfinite(v_vals)):
        raise ValueError("potential is not finite on this grid")
    exp_v = np.exp(-0.5j * dt * v_vals / model.hbar)
    exp_k = _kinetic_phase(grid, model, dt)

    psi = field.values.astype(np.complex128, copy=True)
    times = [0.0]
    fields = [ComplexField(grid, psi.copy())]

    for step in range(1, steps + 1):
        kernels.phase_multiply(psi, exp_v)
        psi_k = np.fft.fftn(psi)
        kernels.phase_multiply(psi_k, exp_k)
        psi = np.fft.ifftn(psi_k)
        kernels.phase_multiply(psi, exp_v)
        if not np.all(np.isfinite(psi)):
            raise FloatingPointError(
                f"propagation produced non-finite values at step {step}")
        if on_step is not None:
            on_step(step, psi)
        if (stride is not None and step % stride == 0) or step == steps:
            times.append(step * dt)
            fields.append(ComplexField(grid, psi.copy()))

    norms = np.array([np.sqrt(inner_product(f, f).real) for f in fields])
    return EvolutionRecord(np.array(times), fields, norms,
                           method="split_step", dt=dt, steps=steps)
