"""Time evolution: phase rotation for eigenstates, split-step properties."""

import numpy as np
import pytest

import bornlab as bl
from bornlab.grid import ComplexField
from bornlab.observables import qm_energy_expect
from bornlab.propagate import analytic_evolve, split_step


def _ho_superposition(grid=None):
    model = bl.harmonic_model(1.0)
    g = grid or bl.make_grid([(-12.0, 12.0)], [256])
    a = bl.harmonic_eigenstate(0, 1.0, model, grid=g)
    b = bl.harmonic_eigenstate(2, 1.0, model, grid=g)
    return bl.superpose([2**-0.5, 2**-0.5], [a, b]), model


def test_analytic_evolve_identity_at_zero():
    sup, _ = _ho_superposition()
    evolved = analytic_evolve(sup, 0.0)
    assert np.allclose(evolved.values, sup.values, rtol=0, atol=1e-15)


def test_analytic_evolve_preserves_norm_and_density_period():
    sup, _ = _ho_superposition()
    ev = analytic_evolve(sup, 1.234)
    assert abs(bl.inner_product(ev.field, ev.field) - 1.0) < 1e-12
    # the 0/2 beat has period pi in the density
    again = analytic_evolve(sup, 1.234 + np.pi)
    assert np.allclose(np.abs(again.values) ** 2, np.abs(ev.values) ** 2,
                       atol=1e-12)


def test_analytic_evolve_needs_eigenstates():
    model = bl.free_model()
    pk = bl.gaussian_packet(0.0, 1.0, 1.0, model)
    with pytest.raises(ValueError):
        analytic_evolve(pk, 0.5)


def test_split_step_matches_analytic_evolution():
    sup, model = _ho_superposition()
    t_final = 0.7
    record = split_step(sup, model, dt=0.0007, steps=1000)
    exact = analytic_evolve(sup, t_final)
    err = np.max(np.abs(record.final.values - exact.values))
    assert err < 5e-6


def test_split_step_matches_free_gaussian_closed_form():
    model = bl.free_model()
    g = bl.make_grid([(-25.0, 25.0)], [512])
    pk = bl.gaussian_packet(-3.0, 1.5, 1.0, model, grid=g)
    record = split_step(pk, model, dt=0.002, steps=1000)
    exact = bl.free_gaussian_state(-3.0, 1.5, 1.0, 2.0, model, g)
    err = np.max(np.abs(record.final.values - exact.values))
    # kinetic steps are exact; the floor is the periodic image tail
    assert err < 1e-5


def test_split_step_second_order_in_dt():
    sup, model = _ho_superposition()
    t_final = 0.64
    errs = []
    dts = [0.016, 0.008, 0.004]
    exact = analytic_evolve(sup, t_final)
    for dt in dts:
        record = split_step(sup, model, dt=dt, steps=int(round(t_final / dt)))
        errs.append(np.max(np.abs(record.final.values - exact.values)))
    order = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert 1.8 < order < 2.2


def test_split_step_unitarity():
    sup, model = _ho_superposition()
    record = split_step(sup, model, dt=0.01, steps=2000, stride=500)
    assert np.max(np.abs(np.asarray(record.norms) - 1.0)) < 1e-12


def test_split_step_conserves_energy():
    sup, model = _ho_superposition()
    e0 = qm_energy_expect(sup, model)
    record = split_step(sup, model, dt=0.001, steps=700)
    e1 = qm_energy_expect(record.final, model)
    assert abs(e1 - e0) / abs(e0) < 1e-6


def test_split_step_snapshot_schedule():
    sup, model = _ho_superposition()
    record = split_step(sup, model, dt=0.01, steps=10, stride=4)
    assert np.allclose(record.times, [0.0, 0.04, 0.08, 0.1], rtol=1e-15)
    assert len(record.fields) == 4
    assert record.method == "split_step"
    assert record.dt == 0.01 and record.steps == 10


def test_split_step_on_step_observer():
    sup, model = _ho_superposition()
    seen = []
    split_step(sup, model, dt=0.01, steps=5,
               on_step=lambda step, psi: seen.append((step, psi.shape)))
    assert [s for s, _ in seen] == [1, 2, 3, 4, 5]
    assert all(shape == sup.values.shape for _, shape in seen)


def test_split_step_aborts_on_non_finite_field():
    model = bl.free_model()
    g = bl.make_grid([(-10.0, 10.0)], [64])
    vals = np.full(64, np.nan, dtype=np.complex128)
    bad = ComplexField(g, vals)
    with pytest.raises(FloatingPointError, match="step 1"):
        split_step(bad, model, dt=0.01, steps=3)


def test_split_step_needs_power_of_two_grid():
    model = bl.harmonic_model(1.0)
    g = bl.make_grid([(-10.0, 10.0)], [100])
    st = bl.harmonic_eigenstate(0, 1.0, model, grid=g)
    with pytest.raises(ValueError):
        split_step(st, model, dt=0.01, steps=2)


def test_split_step_rejects_non_finite_potential():
    # a grid whose origin cell makes the Coulomb term blow up
    model = bl.coulomb_model()
    g = bl.make_grid([(-8.0, 8.0)] * 3, [8, 8, 8])
    vals = np.zeros((8, 8, 8), dtype=np.complex128)
    vals[0, 0, 0] = 1.0
    st = ComplexField(g, vals / np.sqrt(g.cell_volume))
    with np.errstate(divide="ignore"):
        with pytest.raises(ValueError, match="potential"):
            split_step(st, model, dt=0.01, steps=1)
