"""Uniform Cartesian grids, midpoint quadrature, and spectral derivatives.

Fields live on periodic grids with sample points ``x_j = lo + j*h``; each
sample point is the center of a cell of volume ``prod(h_i)``.  Derivatives are
spectral (FFT) unless the field carries closed-form evaluators, in which case
the exact derivative is sampled instead.  All grid sums go through the fixed
pairwise reduction in :mod:`bornlab.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from . import kernels

__all__ = [
    "Grid",
    "ComplexField",
    "RealField",
    "make_grid",
    "gradient",
    "laplacian",
    "inner_product",
    "l2_normalize",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic Cartesian grid over a box."""

    extents: tuple[tuple[float, float], ...]
    points: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.extents, self.points))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def size(self) -> int:
        return math.prod(self.points)

    def axis_coords(self, axis: int) -> np.ndarray:
        (lo, _), n, h = self.extents[axis], self.points[axis], self.spacing[axis]
        return lo + h * np.arange(n)

    def meshes(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        return tuple(
            self.axis_coords(a).reshape([-1 if i == a else 1 for i in range(self.dim)])
            for a in range(self.dim)
        )

    def wavenumbers(self, axis: int) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points[axis], self.spacing[axis])

    def require_spectral(self) -> None:
        for n in self.points:
            if n & (n - 1):
                raise ValueError(
                    f"spectral operation needs power-of-two points, got {self.points}"
                )


@dataclass
class ComplexField:
    """Complex amplitude on a grid, optionally backed by closed-form evaluators.

    The ``analytic`` object, when present, must provide ``value(coords)``,
    ``gradient(coords, axis)`` and ``laplacian(coords, axes)`` plus a
    ``scaled(c)`` copy constructor; richer backends add ``hessian`` and
    ``grad_laplacian``.  ``coords`` is the tuple from :meth:`Grid.meshes`.
    """

    grid: Grid
    values: np.ndarray
    analytic: Optional[object] = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} != grid shape {self.grid.shape}"
            )


@dataclass
class RealField:
    """Real-valued field with an optional validity mask (True = defined)."""

    grid: Grid
    values: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} != grid shape {self.grid.shape}"
            )
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)


def make_grid(extents: Sequence[Sequence[float]], points: Sequence[int]) -> Grid:
    if len(extents) != len(points):
        raise ValueError("extents and points must have equal length")
    ext = []
    pts = []
    for (lo, hi), n in zip(extents, points):
        lo, hi = float(lo), float(hi)
        n = int(n)
        if not hi > lo:
            raise ValueError(f"axis extent ({lo}, {hi}) is empty")
        if n < 4:
            raise ValueError(f"need at least 4 points per axis, got {n}")
        ext.append((lo, hi))
        pts.append(n)
    return Grid(tuple(ext), tuple(pts))


def _spectral_gradient(grid: Grid, values: np.ndarray, axis: int) -> np.ndarray:
    grid.require_spectral()
    k = grid.wavenumbers(axis).reshape(
        [-1 if i == axis else 1 for i in range(grid.dim)]
    )
    return np.fft.ifft(1j * k * np.fft.fft(values, axis=axis), axis=axis)


def gradient(f: ComplexField, axis: int) -> ComplexField:
    """Partial derivative along one axis (analytic when available, else FFT)."""
    if not 0 <= axis < f.grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {f.grid.dim}")
    if f.analytic is not None:
        vals = np.broadcast_to(
            f.analytic.gradient(f.grid.meshes(), axis), f.grid.shape
        ).astype(np.complex128)
        return ComplexField(f.grid, vals.copy())
    return ComplexField(f.grid, _spectral_gradient(f.grid, f.values, axis))


def laplacian(f: ComplexField, axes: Optional[Sequence[int]] = None) -> ComplexField:
    """Sum of second derivatives over ``axes`` (default: all axes)."""
    use_axes = tuple(range(f.grid.dim)) if axes is None else tuple(axes)
    for a in use_axes:
        if not 0 <= a < f.grid.dim:
            raise ValueError(f"axis {a} out of range for dim {f.grid.dim}")
    if f.analytic is not None:
        vals = np.broadcast_to(
            f.analytic.laplacian(f.grid.meshes(), use_axes), f.grid.shape
        ).astype(np.complex128)
        return ComplexField(f.grid, vals.copy())
    f.grid.require_spectral()
    out = np.zeros(f.grid.shape, dtype=np.complex128)
    for a in use_axes:
        k = f.grid.wavenumbers(a).reshape(
            [-1 if i == a else 1 for i in range(f.grid.dim)]
        )
        out += np.fft.ifft(-(k * k) * np.fft.fft(f.values, axis=a), axis=a)
    return ComplexField(f.grid, out)


def inner_product(f: ComplexField, g: ComplexField) -> complex:
    """Midpoint-quadrature L2 pairing, conjugate-linear in the first slot."""
    if f.grid != g.grid:
        raise ValueError("inner_product requires identical grids")
    prod = np.conj(f.values) * g.values
    return kernels.pairwise_sum_complex(prod) * f.grid.cell_volume


def l2_normalize(f: ComplexField) -> ComplexField:
    nrm2 = kernels.pairwise_sum(kernels.abs2(f.values)) * f.grid.cell_volume
    if nrm2 <= 0.0:
        raise ValueError("cannot normalize a zero field")
    scale = 1.0 / math.sqrt(nrm2)
    analytic = f.analytic.scaled(scale) if f.analytic is not None else None
    return ComplexField(f.grid, f.values * scale, analytic)
