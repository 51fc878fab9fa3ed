"""Probability measures induced by a normalized field, and expectations of
random variables over them.

Grid nodes are treated as centers of half-open cells [x - h/2, x + h/2), so
box events select cells by center with lower edges closed and upper edges
open.  All reductions run through the fixed-order pairwise kernel, which
makes every probability and expectation reproducible to the bit across
backends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .grid import ComplexField, Grid, make_grid

__all__ = [
    "ProbabilityMeasure",
    "Event",
    "RandomVariable",
    "born_measure",
    "prob",
    "condition",
    "marginal",
    "sample",
    "expectation",
]

NORM_TOLERANCE = 1e-6
EXCLUDED_MASS_BOUND = 1e-9


@dataclass
class ProbabilityMeasure:
    """Nonnegative density on a grid whose cell masses sum to one."""

    grid: Grid
    density: np.ndarray
    cell_mass: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(kernels.pairwise_sum(self.cell_mass.ravel()))


class Event:
    """Grid event: union of coordinate boxes, explicit cells, or both composed.

    A box is one (lo, hi) pair per axis; a cell belongs to it when its center
    satisfies lo <= x < hi on every axis.
    """

    def __init__(self, boxes: Optional[Sequence[Sequence[tuple]]] = None,
                 cells: Optional[np.ndarray] = None,
                 _resolver: Optional[Callable[[Grid], np.ndarray]] = None,
                 description: str = ""):
        if sum(x is not None for x in (boxes, cells, _resolver)) != 1:
            raise ValueError("give exactly one of boxes, cells, or a resolver")
        self._boxes = None
        if boxes is not None:
            self._boxes = tuple(tuple((float(lo), float(hi)) for lo, hi in box)
                                for box in boxes)
        self._cells = None if cells is None else np.asarray(cells, dtype=bool)
        self._resolver = _resolver
        self.description = description

    def resolve(self, grid: Grid) -> np.ndarray:
        if self._cells is not None:
            if self._cells.shape != grid.shape:
                raise ValueError("cell mask shape does not match grid")
            return self._cells
        if self._resolver is not None:
            return self._resolver(grid)
        mask = np.zeros(grid.shape, dtype=bool)
        for box in self._boxes:
            if len(box) != grid.dim:
                raise ValueError(
                    f"box has {len(box)} axes, grid has {grid.dim}")
            inside = np.ones(grid.shape, dtype=bool)
            for axis, (lo, hi) in enumerate(box):
                x = grid.axis_coords(axis)
                shape = [1] * grid.dim
                shape[axis] = x.size
                sel = ((x >= lo) & (x < hi)).reshape(shape)
                inside &= np.broadcast_to(sel, grid.shape)
            mask |= inside
        return mask

    def complement(self) -> "Event":
        return Event(_resolver=lambda g: ~self.resolve(g),
                     description=f"not ({self.description})")

    def union(self, other: "Event") -> "Event":
        return Event(_resolver=lambda g: self.resolve(g) | other.resolve(g),
                     description=f"({self.description}) or ({other.description})")

    def intersect(self, other: "Event") -> "Event":
        return Event(_resolver=lambda g: self.resolve(g) & other.resolve(g),
                     description=f"({self.description}) and ({other.description})")


@dataclass
class RandomVariable:
    """Cell-valued observable with an optional validity mask.

    ``numer`` optionally stores per-cell numerators f * density, defined on
    every cell; first moments then integrate the numerator directly, which
    avoids the 0/0 cells entirely.
    """

    grid: Grid
    comps: tuple[np.ndarray, ...]
    mask: np.ndarray
    numer: Optional[tuple[np.ndarray, ...]] = None
    name: str = ""

    def __post_init__(self) -> None:
        if not self.comps:
            raise ValueError("random variable needs at least one component")
        for c in self.comps:
            if c.shape != self.grid.shape:
                raise ValueError("component shape does not match grid")
        if self.mask.shape != self.grid.shape:
            raise ValueError("mask shape does not match grid")
        if self.numer is not None and len(self.numer) != len(self.comps):
            raise ValueError("need one numerator per component")

    @property
    def n_comps(self) -> int:
        return len(self.comps)


def born_measure(state) -> ProbabilityMeasure:
    """|psi|^2 as a probability measure; rejects badly normalized fields.

    Fields within NORM_TOLERANCE of unit mass are silently renormalized;
    anything further off raises.
    """
    field = state if isinstance(state, ComplexField) else state.field
    density = kernels.abs2(field.values)
    cell_mass = density * field.grid.cell_volume
    total = float(kernels.pairwise_sum(cell_mass.ravel()))
    if abs(total - 1.0) > NORM_TOLERANCE:
        raise ValueError(
            f"field mass {total} is further than {NORM_TOLERANCE} from 1")
    return ProbabilityMeasure(field.grid, density / total, cell_mass / total)


def prob(measure: ProbabilityMeasure, event: Event) -> float:
    mask = event.resolve(measure.grid)
    selected = measure.cell_mass[mask]
    if selected.size == 0:
        return 0.0
    return float(kernels.pairwise_sum(np.ascontiguousarray(selected)))


def condition(measure: ProbabilityMeasure, event: Event) -> ProbabilityMeasure:
    """Measure restricted to an event and rescaled by its probability."""
    p = prob(measure, event)
    if p == 0.0:
        raise ZeroDivisionError("cannot condition on a null event")
    mask = event.resolve(measure.grid)
    density = np.where(mask, measure.density, 0.0) / p
    cell_mass = np.where(mask, measure.cell_mass, 0.0) / p
    return ProbabilityMeasure(measure.grid, density, cell_mass)


def marginal(measure: ProbabilityMeasure, keep_axes: Sequence[int]) -> ProbabilityMeasure:
    keep = tuple(sorted(set(int(a) for a in keep_axes)))
    if not keep or any(a < 0 or a >= measure.grid.dim for a in keep):
        raise ValueError("keep_axes must be a nonempty subset of grid axes")
    drop = tuple(a for a in range(measure.grid.dim) if a not in keep)
    if not drop:
        return measure
    mass = measure.cell_mass.sum(axis=drop)
    sub = make_grid([measure.grid.extents[a] for a in keep],
                    [measure.grid.points[a] for a in keep])
    return ProbabilityMeasure(sub, mass / sub.cell_volume, mass)


def sample(measure: ProbabilityMeasure, n: int, seed: int) -> np.ndarray:
    """Draw n points by inverse transform over cells plus in-cell jitter.

    One uniform block of shape (n, 1 + dim) is consumed: column 0 picks the
    cell through the cumulative mass, the rest place the point uniformly
    inside it.  Output is fully determined by the seed.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    grid = measure.grid
    rng = np.random.default_rng(seed)
    u = rng.random((n, 1 + grid.dim))
    cdf = kernels.running_sum(measure.cell_mass.ravel())
    cdf = cdf / cdf[-1]
    flat = kernels.find_cells(cdf, np.ascontiguousarray(u[:, 0]))
    multi = np.unravel_index(flat, grid.shape)
    out = np.empty((n, grid.dim), dtype=np.float64)
    for axis in range(grid.dim):
        h = grid.spacing[axis]
        centers = grid.axis_coords(axis)[multi[axis]]
        out[:, axis] = centers + (u[:, 1 + axis] - 0.5) * h
    return out


def _masked_moment(values: np.ndarray, cell_mass: np.ndarray,
                   mask: np.ndarray, order: int, shift: float) -> float:
    sel = (values[mask] - shift) ** order * cell_mass[mask]
    return float(kernels.pairwise_sum(np.ascontiguousarray(sel)))


def expectation(rv: RandomVariable, measure: ProbabilityMeasure,
                order: int = 1, central: bool = False):
    """Moment of order ``order``; central moments subtract the exact mean.

    Variables built as ratios against the density carry the product
    f*rho in ``numer``; first and second moments then use that product
    directly, which stays finite where the ratio itself blows up near
    zeros of the density.  Higher moments fall back to the masked
    pointwise values.  Cells excluded by the variable's mask may each
    carry at most EXCLUDED_MASS_BOUND of probability, otherwise the
    moment is ill-defined on this grid and the call raises.  Returns a
    float for scalar variables and an array with one entry per
    component otherwise.
    """
    if rv.grid != measure.grid:
        raise ValueError("random variable and measure live on different grids")
    if order < 1:
        raise ValueError("order must be >= 1")
    excluded = ~rv.mask
    if excluded.any():
        worst = float(measure.cell_mass[excluded].max())
        if worst > EXCLUDED_MASS_BOUND:
            raise ValueError(
                f"an excluded cell carries mass {worst:.3e} > "
                f"{EXCLUDED_MASS_BOUND}; refine the grid or shrink the mask")

    vol = measure.grid.cell_volume
    out = []
    for idx in range(rv.n_comps):
        use_numer = rv.numer is not None

        def first_moment():
            if use_numer:
                return float(kernels.pairwise_sum(rv.numer[idx].ravel())) * vol
            return _masked_moment(rv.comps[idx], measure.cell_mass,
                                  rv.mask, 1, 0.0)

        def second_moment():
            # numer^2 / rho equals f^2 * rho and stays bounded at nodes.
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(measure.density > 0.0,
                             rv.numer[idx] ** 2 / measure.density, 0.0)
            return float(kernels.pairwise_sum(q.ravel())) * vol

        if order == 1 and not central:
            out.append(first_moment())
        elif order == 2 and use_numer:
            raw = second_moment()
            if central:
                # exact-zero variances can round to small negatives
                raw = max(raw - first_moment() ** 2, 0.0)
            out.append(raw)
        elif central:
            out.append(_masked_moment(rv.comps[idx], measure.cell_mass,
                                      rv.mask, order, first_moment()))
        else:
            out.append(_masked_moment(rv.comps[idx], measure.cell_mass,
                                      rv.mask, order, 0.0))
    if rv.n_comps == 1:
        return out[0]
    return np.array(out)
