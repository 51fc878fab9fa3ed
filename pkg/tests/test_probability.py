"""Measure axioms, event algebra, expectations, and the cell sampler."""

import numpy as np
import pytest
from scipy import special

import bornlab as bl
from bornlab.grid import ComplexField
from bornlab.observables import coordinate_rv, drift_velocity
from bornlab.probability import (Event, RandomVariable, born_measure,
                                 condition, expectation, marginal, prob,
                                 sample)


def _gaussian_1d(points=512, half=10.0, shift=True):
    model = bl.free_model()
    h = 2 * half / points
    lo = -half + (h / 2 if shift else 0.0)
    g = bl.make_grid([(lo, lo + 2 * half)], [points])
    return bl.gaussian_packet(0.0, 1.0, 0.0, model, grid=g)


def test_born_measure_total_mass():
    st = _gaussian_1d()
    measure = born_measure(st)
    assert abs(float(measure.cell_mass.sum()) - 1.0) < 1e-12
    assert measure.total_mass == pytest.approx(1.0, abs=1e-9)


def test_born_measure_rejects_unnormalized_fields():
    g = bl.make_grid([(-5.0, 5.0)], [64])
    (x,) = g.meshes()
    with pytest.raises(ValueError):
        born_measure(ComplexField(g, 2.0 * np.exp(-x**2)))


def test_measure_axioms_on_random_boxes(rng):
    st = _gaussian_1d()
    measure = born_measure(st)
    (lo, hi), = st.grid.extents
    for _ in range(100):
        bounds = np.sort(rng.uniform(lo - 1, hi + 1, size=4))
        a = Event(boxes=[[(bounds[0], bounds[2])]])
        b = Event(boxes=[[(bounds[1], bounds[3])]])
        pa, pb = prob(measure, a), prob(measure, b)
        pu = prob(measure, a.union(b))
        pi = prob(measure, a.intersect(b))
        assert 0.0 <= pa <= 1.0 and 0.0 <= pb <= 1.0
        assert pu + pi == pytest.approx(pa + pb, abs=1e-15)
        assert pu >= max(pa, pb) - 1e-15  # monotone in set inclusion
        assert prob(measure, a.complement()) == pytest.approx(1 - pa,
                                                              abs=1e-12)


def test_half_space_probability_is_exact_on_shifted_grid():
    st = _gaussian_1d(shift=True)
    measure = born_measure(st)
    (lo, hi), = st.grid.extents
    right = Event(boxes=[[(0.0, hi + 1.0)]])
    assert prob(measure, right) == pytest.approx(0.5, abs=1e-12)


def test_interval_probability_matches_error_function():
    # cell edges land on +-2 exactly, so only quadrature error remains
    st = _gaussian_1d(points=500, half=10.0, shift=True)
    measure = born_measure(st)
    p = prob(measure, Event(boxes=[[(-2.0, 2.0)]]))
    exact = special.erf(2.0 / (np.sqrt(2) * 1.0))
    assert abs(p - exact) < 5e-4


def test_empty_event_has_zero_probability():
    st = _gaussian_1d()
    measure = born_measure(st)
    assert prob(measure, Event(boxes=[[(50.0, 60.0)]])) == 0.0


def test_event_resolution_lower_closed_upper_open():
    g = bl.make_grid([(0.0, 8.0)], [8])
    ev = Event(boxes=[[(1.0, 3.0)]])
    cells = ev.resolve(g)
    # centers are 0.5, 1.5, ...; [1, 3) catches 1.5 and 2.5 only
    assert np.array_equal(np.flatnonzero(cells), [1, 2])


def test_marginal_matches_direct_1d_density():
    model2 = bl.free_model(body_dim=2)
    g2 = bl.make_grid([(-8.0, 8.0), (-6.0, 6.0)], [128, 64])
    st = bl.gaussian_packet((0.5, -0.3), (1.0, 0.7), (0.0, 0.0), model2,
                            grid=g2)
    measure = born_measure(st)
    marg = marginal(measure, keep_axes=(0,))
    direct = measure.cell_mass.sum(axis=1)
    assert np.allclose(marg.cell_mass, direct, atol=1e-15)
    assert abs(float(marg.cell_mass.sum()) - 1.0) < 1e-12


def test_condition_renormalizes():
    st = _gaussian_1d()
    measure = born_measure(st)
    (lo, hi), = st.grid.extents
    ev = Event(boxes=[[(0.0, hi + 1.0)]])
    cond = condition(measure, ev)
    assert abs(float(cond.cell_mass.sum()) - 1.0) < 1e-12
    outside = Event(boxes=[[(lo - 1.0, 0.0)]])
    assert prob(cond, outside) == 0.0


def test_condition_on_null_event_raises():
    st = _gaussian_1d()
    measure = born_measure(st)
    with pytest.raises(ZeroDivisionError):
        condition(measure, Event(boxes=[[(400.0, 500.0)]]))


# ---------------------------------------------------------------------------
# expectations

def test_expectation_requires_matching_grid():
    st = _gaussian_1d()
    other = _gaussian_1d(points=256)
    rv = coordinate_rv(st, 0)
    with pytest.raises(ValueError):
        expectation(rv, born_measure(other))


def test_expectation_order_validation():
    st = _gaussian_1d()
    rv = coordinate_rv(st, 0)
    with pytest.raises(ValueError):
        expectation(rv, born_measure(st), order=0)


def test_excluded_cells_must_be_light():
    st = _gaussian_1d()
    measure = born_measure(st)
    rv = coordinate_rv(st, 0)
    mask = rv.mask.copy()
    mask[st.grid.points[0] // 2] = False  # hide the cell at the peak
    heavy = RandomVariable(rv.grid, rv.comps, mask, rv.numer, rv.name)
    with pytest.raises(ValueError, match="excluded"):
        expectation(heavy, measure)


def test_moments_of_position_match_normal_law():
    st = _gaussian_1d()
    measure = born_measure(st)
    rv = coordinate_rv(st, 0)
    assert expectation(rv, measure) == pytest.approx(0.0, abs=1e-12)
    assert expectation(rv, measure, order=2,
                       central=True) == pytest.approx(1.0, rel=1e-10)
    assert expectation(rv, measure, order=4) == pytest.approx(3.0, rel=1e-9)


def test_second_moment_survives_node_aligned_cells():
    # odd state on a symmetric grid: the origin cell holds exactly zero
    # density, yet nearby ratio values are huge; the product form keeps
    # the second moment finite and accurate.
    model = bl.harmonic_model(1.0)
    g = bl.make_grid([(-12.0, 12.0)], [512])
    st = bl.harmonic_eigenstate(1, 1.0, model, grid=g)
    measure = born_measure(st)
    urv = bl.osmotic_velocity(st, model, 0)
    e_u2 = expectation(urv, measure, order=2)
    # continuum value is <p^2>/m^2 = 3/2; the zero-mass origin cell
    # contributes nothing, removing exactly h * psi'(0)^2
    h = g.spacing[0]
    slope2 = 2.0 / np.sqrt(np.pi)  # psi'(0)^2 for the first excited state
    assert e_u2 == pytest.approx(1.5 - h * slope2, rel=1e-10)
    # on a half-cell-shifted grid no cell center sits on the node
    gs = bl.make_grid([(-12.0 + h / 2, 12.0 + h / 2)], [512])
    sts = bl.harmonic_eigenstate(1, 1.0, model, grid=gs)
    e_u2s = expectation(bl.osmotic_velocity(sts, model, 0),
                        born_measure(sts), order=2)
    assert e_u2s == pytest.approx(1.5, rel=1e-12)


def test_variance_clamped_at_zero():
    model = bl.harmonic_model(1.0)
    st = bl.harmonic_eigenstate(0, 1.0, model)
    measure = born_measure(st)
    vrv = drift_velocity(st, model, 0)
    var = expectation(vrv, measure, order=2, central=True)
    assert var >= 0.0


# ---------------------------------------------------------------------------
# sampling

def test_sampler_is_deterministic():
    st = _gaussian_1d()
    measure = born_measure(st)
    a = sample(measure, 5000, seed=42)
    b = sample(measure, 5000, seed=42)
    assert a.tobytes() == b.tobytes()
    c = sample(measure, 5000, seed=43)
    assert a.tobytes() != c.tobytes()


def test_sampler_requires_seed():
    st = _gaussian_1d()
    measure = born_measure(st)
    with pytest.raises(TypeError):
        sample(measure, 100)


def test_samples_lie_inside_the_box():
    st = _gaussian_1d()
    measure = born_measure(st)
    pts = sample(measure, 20000, seed=3)
    (lo, hi), = st.grid.extents
    assert pts.shape == (20000, 1)
    assert pts.min() >= lo - st.grid.spacing[0] / 2
    assert pts.max() <= hi


def test_sampler_frequencies_match_cell_masses():
    st = _gaussian_1d(points=64)
    measure = born_measure(st)
    n = 200000
    pts = sample(measure, n, seed=11)
    h = st.grid.spacing[0]
    lo = st.grid.extents[0][0]
    idx = np.clip(((pts[:, 0] - lo) / h + 0.5).astype(int), 0, 63)
    counts = np.bincount(idx, minlength=64)
    for j in range(64):
        expect_n = n * measure.cell_mass[j]
        if expect_n < 50:
            continue
        sdev = np.sqrt(expect_n * (1 - measure.cell_mass[j]))
        assert abs(counts[j] - expect_n) < 5 * sdev, j


def test_sample_empirical_half_space(rng):
    st = _gaussian_1d()
    measure = born_measure(st)
    pts = sample(measure, 100000, seed=5)
    frac = float(np.mean(pts[:, 0] >= 0.0))
    assert abs(frac - 0.5) < 0.01
