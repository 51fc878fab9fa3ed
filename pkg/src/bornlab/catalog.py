"""Closed-form models and states: hydrogen, harmonic oscillator, Gaussians.

Every state is sampled on a grid and discretely l2-normalized, with the same
scale factor folded into its closed-form evaluators so that sampled values and
analytic derivatives stay mutually consistent.  Hydrogen states are assembled
as solid-harmonic polynomial times a radial factor that is smooth at the
origin, which yields exact Cartesian derivatives for any (n, l, m); their
grids are shifted by half a cell so no sample point hits r = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import eval_genlaguerre, roots_legendre

from .grid import ComplexField, Grid, inner_product, l2_normalize, make_grid

__all__ = [
    "Potential",
    "Model",
    "CatalogState",
    "free_model",
    "harmonic_model",
    "coulomb_model",
    "double_slit_model",
    "hydrogen_state",
    "hydrogen_radial_state",
    "gaussian_packet",
    "free_gaussian_state",
    "harmonic_eigenstate",
    "superpose",
]


# ---------------------------------------------------------------------------
# models

@dataclass(frozen=True)
class Potential:
    """Real potential V as a callable over mesh coordinate tuples."""

    label: str
    func: Callable[[tuple], np.ndarray]
    grad: Optional[Callable[[tuple, int], np.ndarray]] = None
    params: tuple = ()


@dataclass(frozen=True)
class Model:
    """Body count, masses, hbar and the potential of a Hamiltonian."""

    n_bodies: int
    masses: tuple[float, ...]
    hbar: float
    potential: Potential
    body_dim: int

    def __post_init__(self) -> None:
        if self.n_bodies < 1 or len(self.masses) != self.n_bodies:
            raise ValueError("need one positive mass per body")
        if any(m <= 0 for m in self.masses) or self.hbar <= 0:
            raise ValueError("masses and hbar must be positive")

    @property
    def dim(self) -> int:
        return self.n_bodies * self.body_dim

    def axes_of(self, a: int) -> range:
        if not 0 <= a < self.n_bodies:
            raise ValueError(f"body index {a} out of range")
        return range(a * self.body_dim, (a + 1) * self.body_dim)

    def mass_of_axis(self, axis: int) -> float:
        return self.masses[axis // self.body_dim]

    def potential_values(self, grid: Grid) -> np.ndarray:
        vals = self.potential.func(grid.meshes())
        return np.broadcast_to(np.asarray(vals, dtype=np.float64), grid.shape).copy()


def free_model(n_bodies: int = 1, body_dim: int = 1,
               masses: Optional[Sequence[float]] = None, hbar: float = 1.0) -> Model:
    masses = tuple(masses) if masses is not None else (1.0,) * n_bodies
    pot = Potential("free", lambda coords: np.zeros(()),
                    grad=lambda coords, axis: np.zeros(()))
    return Model(n_bodies, masses, hbar, pot, body_dim)


def harmonic_model(omega: float, n_bodies: int = 1, body_dim: int = 1,
                   masses: Optional[Sequence[float]] = None, hbar: float = 1.0) -> Model:
    if omega <= 0:
        raise ValueError("omega must be positive")
    masses = tuple(masses) if masses is not None else (1.0,) * n_bodies

    def vfunc(coords):
        total = 0.0
        for axis, x in enumerate(coords):
            m = masses[axis // body_dim]
            total = total + 0.5 * m * omega ** 2 * x * x
        return total

    def vgrad(coords, axis):
        m = masses[axis // body_dim]
        return m * omega ** 2 * coords[axis]

    pot = Potential("harmonic", vfunc, grad=vgrad, params=(("omega", omega),))
    return Model(n_bodies, masses, hbar, pot, body_dim)


def coulomb_model(mass: float = 1.0, hbar: float = 1.0) -> Model:
    """One reduced body in 3D with V = -1/r (atomic units)."""

    def vfunc(coords):
        x, y, z = coords
        r = np.sqrt(x * x + y * y + z * z)
        return -1.0 / r

    def vgrad(coords, axis):
        x, y, z = coords
        r = np.sqrt(x * x + y * y + z * z)
        return coords[axis] / r ** 3

    pot = Potential("coulomb", vfunc, grad=vgrad)
    return Model(1, (mass,), hbar, pot, body_dim=3)


def double_slit_model(barrier_x: float, slit_centers: tuple[float, float],
                      slit_width: float, barrier_height: float,
                      which_slits: str, thickness: float = 1.5) -> Model:
    """2D one-body model: a potential slab with one or two open gaps."""
    if slit_width <= 0:
        raise ValueError("slit_width must be positive")
    if barrier_height <= 0 or thickness <= 0:
        raise ValueError("barrier_height and thickness must be positive")
    c_left, c_right = sorted(float(c) for c in slit_centers)
    if c_right - c_left <= slit_width:
        raise ValueError("slits overlap")
    if which_slits not in ("both", "left", "right"):
        raise ValueError(f"which_slits must be both|left|right, got {which_slits!r}")
    open_centers = {"both": (c_left, c_right),
                    "left": (c_left,), "right": (c_right,)}[which_slits]

    def vfunc(coords):
        x, y = coords
        in_slab = (x >= barrier_x) & (x < barrier_x + thickness)
        is_open = np.zeros(np.broadcast_shapes(x.shape, y.shape), dtype=bool)
        for c in open_centers:
            is_open |= np.broadcast_to(np.abs(y - c) < slit_width / 2.0,
                                       is_open.shape)
        return barrier_height * (in_slab & ~is_open)

    pot = Potential("barrier", vfunc, params=(
        ("barrier_x", barrier_x), ("thickness", thickness),
        ("height", barrier_height), ("slit_centers", (c_left, c_right)),
        ("slit_width", slit_width), ("which_slits", which_slits)))
    return Model(1, (1.0,), 1.0, pot, body_dim=2)


# ---------------------------------------------------------------------------
# analytic evaluators

@dataclass(frozen=True)
class GaussianAnalytic:
    """exp(-(x-c)^2/(4a) + i k x) products; ``a`` may be complex (free spread)."""

    center: tuple[float, ...]
    a: tuple[complex, ...]
    k: tuple[float, ...]
    amp: complex

    has_hessian = True
    has_grad_laplacian = True

    def scaled(self, c: complex) -> "GaussianAnalytic":
        return replace(self, amp=self.amp * c)

    def _g(self, coords, i):
        return -(coords[i] - self.center[i]) / (2.0 * self.a[i]) + 1j * self.k[i]

    def value(self, coords):
        expo = 0.0
        for i, x in enumerate(coords):
            dx = x - self.center[i]
            expo = expo - dx * dx / (4.0 * self.a[i]) + 1j * self.k[i] * x
        return self.amp * np.exp(expo)

    def gradient(self, coords, axis):
        return self._g(coords, axis) * self.value(coords)

    def hessian(self, coords, i, j):
        gi = self._g(coords, i)
        gj = self._g(coords, j)
        corr = 1.0 / (2.0 * self.a[i]) if i == j else 0.0
        return (gi * gj - corr) * self.value(coords)

    def laplacian(self, coords, axes):
        s = 0.0
        for i in axes:
            gi = self._g(coords, i)
            s = s + gi * gi - 1.0 / (2.0 * self.a[i])
        return s * self.value(coords)

    def grad_laplacian(self, coords, axis, axes):
        s = 0.0
        for i in axes:
            gi = self._g(coords, i)
            s = s + gi * gi - 1.0 / (2.0 * self.a[i])
        gm = self._g(coords, axis)
        extra = -gm / self.a[axis] if axis in tuple(axes) else 0.0
        return (s * gm + extra) * self.value(coords)


def _hermite_functions(xi: np.ndarray, nmax: int) -> list[np.ndarray]:
    """Normalized Hermite functions phi_0..phi_nmax on xi."""
    out = [np.pi ** (-0.25) * np.exp(-0.5 * xi * xi)]
    if nmax >= 1:
        out.append(np.sqrt(2.0) * xi * out[0])
    for kk in range(1, nmax):
        nxt = (xi * math.sqrt(2.0 / (kk + 1)) * out[kk]
               - math.sqrt(kk / (kk + 1)) * out[kk - 1])
        out.append(nxt)
    return out


def _hermite_derivs(xi: np.ndarray, n: int) -> tuple[np.ndarray, ...]:
    """phi_n and its first three xi-derivatives via the ladder identity."""
    phis = _hermite_functions(xi, n + 3)

    def phi(kk):
        return phis[kk] if kk >= 0 else np.zeros_like(xi)

    def d1(kk):
        if kk < 0:
            return np.zeros_like(xi)
        return math.sqrt(kk / 2.0) * phi(kk - 1) - math.sqrt((kk + 1) / 2.0) * phi(kk + 1)

    def d2(kk):
        if kk < 0:
            return np.zeros_like(xi)
        return math.sqrt(kk / 2.0) * d1(kk - 1) - math.sqrt((kk + 1) / 2.0) * d1(kk + 1)

    def d3(kk):
        return math.sqrt(kk / 2.0) * d2(kk - 1) - math.sqrt((kk + 1) / 2.0) * d2(kk + 1)

    return phi(n), d1(n), d2(n), d3(n)


@dataclass(frozen=True)
class HermiteProductAnalytic:
    """Product of normalized Hermite functions phi_{n_i}(alpha_i x_i)."""

    n: tuple[int, ...]
    alphas: tuple[float, ...]
    amp: complex

    has_hessian = True
    has_grad_laplacian = True

    def scaled(self, c: complex) -> "HermiteProductAnalytic":
        return replace(self, amp=self.amp * c)

    def _tables(self, coords):
        return [
            _hermite_derivs(self.alphas[i] * np.asarray(coords[i], dtype=np.float64),
                            self.n[i])
            for i in range(len(self.n))
        ]

    def _product(self, tables, orders):
        out = self.amp
        for i, tab in enumerate(tables):
            out = out * tab[orders[i]] * self.alphas[i] ** orders[i]
        return out

    def value(self, coords):
        return self._product(self._tables(coords), [0] * len(self.n))

    def gradient(self, coords, axis):
        orders = [0] * len(self.n)
        orders[axis] = 1
        return self._product(self._tables(coords), orders)

    def hessian(self, coords, i, j):
        orders = [0] * len(self.n)
        orders[i] += 1
        orders[j] += 1
        return self._product(self._tables(coords), orders)

    def laplacian(self, coords, axes):
        tables = self._tables(coords)
        out = 0.0
        for a in axes:
            orders = [0] * len(self.n)
            orders[a] = 2
            out = out + self._product(tables, orders)
        return out

    def grad_laplacian(self, coords, axis, axes):
        tables = self._tables(coords)
        out = 0.0
        for a in axes:
            orders = [0] * len(self.n)
            orders[a] = 2
            orders[axis] += 1
            out = out + self._product(tables, orders)
        return out


# --- solid harmonics as exact monomial tables ------------------------------

_Poly = dict  # {(i, j, k): complex coefficient} for x^i y^j z^k


def _p_add(a: _Poly, b: _Poly, cb: complex = 1.0) -> _Poly:
    out = dict(a)
    for mono, c in b.items():
        out[mono] = out.get(mono, 0.0) + cb * c
    return {m: c for m, c in out.items() if c != 0}


def _p_shift(a: _Poly, di: int, dj: int, dk: int, factor: complex = 1.0) -> _Poly:
    return {(i + di, j + dj, k + dk): factor * c for (i, j, k), c in a.items()}


def _p_mul_r2(a: _Poly) -> _Poly:
    out = _p_shift(a, 2, 0, 0)
    out = _p_add(out, _p_shift(a, 0, 2, 0))
    return _p_add(out, _p_shift(a, 0, 0, 2))


def _p_diff(a: _Poly, axis: int) -> _Poly:
    out = {}
    for (i, j, k), c in a.items():
        expo = (i, j, k)[axis]
        if expo:
            mono = list((i, j, k))
            mono[axis] = expo - 1
            out[tuple(mono)] = out.get(tuple(mono), 0.0) + expo * c
    return out


def _p_eval(a: _Poly, x, y, z):
    out = 0.0
    for (i, j, k), c in a.items():
        out = out + c * x ** i * y ** j * z ** k
    return out


def _solid_harmonic(l: int, m: int) -> _Poly:
    """Unnormalized solid harmonic r^l Y_lm as a monomial table."""
    am = abs(m)
    sgn = 1.0 if m >= 0 else -1.0
    seed: _Poly = {}
    for j in range(am + 1):
        seed[(am - j, j, 0)] = math.comb(am, j) * (sgn * 1j) ** j
    if l == am:
        return seed
    prev2 = seed
    prev = _p_shift(seed, 0, 0, 1, factor=2 * am + 1)
    if l == am + 1:
        return prev
    for ll in range(am + 2, l + 1):
        new = _p_add(_p_shift(prev, 0, 0, 1, factor=2 * ll - 1),
                     _p_mul_r2(prev2), cb=-(ll + am - 1))
        new = {mono: c / (ll - am) for mono, c in new.items()}
        prev2, prev = prev, new
    return prev


def _angular_norm(poly: _Poly, l: int) -> float:
    """Exact integral of |S(omega)|^2 over the unit sphere.

    |S|^2 is phi-independent and polynomial of degree <= 2l in cos(theta),
    so Gauss-Legendre in cos(theta) with l+1 nodes is exact.
    """
    nodes, weights = roots_legendre(l + 2)
    sin_t = np.sqrt(1.0 - nodes ** 2)
    vals = _p_eval(poly, sin_t, np.zeros_like(nodes), nodes)
    return float(2.0 * np.pi * np.sum(weights * np.abs(vals) ** 2))


def _radial_g(n: int, l: int):
    """g(r) = R_nl(r)/r^l up to scale, with first and second derivatives."""
    k = n - l - 1
    alpha = 2 * l + 1

    def lag(kk, aa, u):
        if kk < 0:
            return np.zeros_like(u)
        return eval_genlaguerre(kk, aa, u)

    def g(r):
        u = 2.0 * r / n
        return np.exp(-r / n) * lag(k, alpha, u)

    def gp(r):
        u = 2.0 * r / n
        e = np.exp(-r / n)
        return e * (-lag(k, alpha, u) / n - (2.0 / n) * lag(k - 1, alpha + 1, u))

    def gpp(r):
        u = 2.0 * r / n
        e = np.exp(-r / n)
        return e * (lag(k, alpha, u) / n ** 2
                    + (4.0 / n ** 2) * lag(k - 1, alpha + 1, u)
                    + (4.0 / n ** 2) * lag(k - 2, alpha + 2, u))

    return g, gp, gpp


@dataclass(frozen=True)
class HydrogenAnalytic:
    """psi = amp * S_lm(x,y,z) * g(r) with polynomial S and smooth radial g."""

    n: int
    l: int
    m: int
    amp: complex

    has_hessian = True
    has_grad_laplacian = False

    def scaled(self, c: complex) -> "HydrogenAnalytic":
        return replace(self, amp=self.amp * c)

    def _parts(self):
        poly = _solid_harmonic(self.l, self.m)
        g, gp, gpp = _radial_g(self.n, self.l)
        return poly, g, gp, gpp

    @staticmethod
    def _r(coords):
        x, y, z = coords
        return np.sqrt(x * x + y * y + z * z)

    def value(self, coords):
        poly, g, _, _ = self._parts()
        return self.amp * _p_eval(poly, *coords) * g(self._r(coords))

    def gradient(self, coords, axis):
        poly, g, gp, _ = self._parts()
        r = self._r(coords)
        s = _p_eval(poly, *coords)
        si = _p_eval(_p_diff(poly, axis), *coords)
        return self.amp * (si * g(r) + s * coords[axis] * gp(r) / r)

    def laplacian(self, coords, axes):
        if tuple(axes) != (0, 1, 2):
            raise ValueError("hydrogen states are one 3D body")
        poly, g, gp, gpp = self._parts()
        r = self._r(coords)
        s = _p_eval(poly, *coords)
        return self.amp * s * (gpp(r) + 2.0 * (self.l + 1) * gp(r) / r)

    def hessian(self, coords, i, j):
        poly, g, gp, gpp = self._parts()
        r = self._r(coords)
        s = _p_eval(poly, *coords)
        si = _p_eval(_p_diff(poly, i), *coords)
        sj = _p_eval(_p_diff(poly, j), *coords)
        sij = _p_eval(_p_diff(_p_diff(poly, i), j), *coords)
        xi, xj = coords[i], coords[j]
        out = sij * g(r) + si * xj * gp(r) / r + sj * xi * gp(r) / r
        out = out + s * xi * xj * (gpp(r) - gp(r) / r) / (r * r)
        if i == j:
            out = out + s * gp(r) / r
        return self.amp * out

    def grad_laplacian(self, coords, axis, axes):
        raise NotImplementedError("third derivatives not provided for hydrogen")


@dataclass(frozen=True)
class SumAnalytic:
    """Linear combination of analytic backends."""

    terms: tuple[tuple[complex, object], ...]

    @property
    def has_hessian(self):
        return all(getattr(t, "has_hessian", False) for _, t in self.terms)

    @property
    def has_grad_laplacian(self):
        return all(getattr(t, "has_grad_laplacian", False) for _, t in self.terms)

    def scaled(self, c: complex) -> "SumAnalytic":
        return SumAnalytic(tuple((cc * c, t) for cc, t in self.terms))

    def _combine(self, fn):
        out = 0.0
        for c, t in self.terms:
            out = out + c * fn(t)
        return out

    def value(self, coords):
        return self._combine(lambda t: t.value(coords))

    def gradient(self, coords, axis):
        return self._combine(lambda t: t.gradient(coords, axis))

    def laplacian(self, coords, axes):
        return self._combine(lambda t: t.laplacian(coords, axes))

    def hessian(self, coords, i, j):
        return self._combine(lambda t: t.hessian(coords, i, j))

    def grad_laplacian(self, coords, axis, axes):
        return self._combine(lambda t: t.grad_laplacian(coords, axis, axes))


@dataclass(frozen=True)
class FuncAnalytic:
    """Closed-form backing from user callables (value mandatory)."""

    value_fn: Callable
    gradient_fn: Optional[Callable] = None
    laplacian_fn: Optional[Callable] = None
    amp: complex = 1.0 + 0.0j

    has_hessian = False
    has_grad_laplacian = False

    def scaled(self, c: complex) -> "FuncAnalytic":
        return replace(self, amp=self.amp * c)

    def value(self, coords):
        return self.amp * self.value_fn(coords)

    def gradient(self, coords, axis):
        if self.gradient_fn is None:
            raise NotImplementedError("no gradient callable supplied")
        return self.amp * self.gradient_fn(coords, axis)

    def laplacian(self, coords, axes):
        if self.laplacian_fn is None:
            raise NotImplementedError("no laplacian callable supplied")
        return self.amp * self.laplacian_fn(coords, axes)

    def hessian(self, coords, i, j):
        raise NotImplementedError

    def grad_laplacian(self, coords, axis, axes):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# catalog states

@dataclass
class CatalogState:
    """A normalized state with optional exact energy and quantum numbers."""

    label: str
    model: Model
    field: ComplexField
    eigen_energy: Optional[float] = None
    quantum_numbers: Optional[tuple] = None
    components: Optional[tuple[tuple[complex, "CatalogState"], ...]] = None

    @property
    def grid(self) -> Grid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @property
    def analytic_derivatives(self) -> bool:
        return self.field.analytic is not None


def _finalize(label, model, grid, analytic, eigen_energy=None,
              quantum_numbers=None, components=None) -> CatalogState:
    vals = np.broadcast_to(analytic.value(grid.meshes()), grid.shape)
    raw = ComplexField(grid, np.array(vals, dtype=np.complex128), analytic)
    field = l2_normalize(raw)
    return CatalogState(label, model, field, eigen_energy, quantum_numbers,
                        components)


def hydrogen_state(n: int, l: int, m: int, points: int = 128,
                   box_half: Optional[float] = None) -> CatalogState:
    """Hydrogen eigenstate in atomic units on a half-cell-shifted cube."""
    if not (isinstance(n, int) and isinstance(l, int) and isinstance(m, int)):
        raise ValueError("quantum numbers must be integers")
    if n < 1 or not 0 <= l < n or abs(m) > l:
        raise ValueError(f"invalid quantum numbers (n,l,m)=({n},{l},{m})")
    half = 20.0 * n * n if box_half is None else float(box_half)
    h = 2.0 * half / points
    extents = [(-half + h / 2.0, half + h / 2.0)] * 3
    grid = make_grid(extents, [points] * 3)

    poly = _solid_harmonic(l, m)
    _, g, _, _ = HydrogenAnalytic(n, l, m, 1.0)._parts()
    radial2, _ = quad(lambda r: r ** (2 * l + 2) * g(r) ** 2, 0.0, 60.0 * n,
                      limit=200)
    amp = 1.0 / math.sqrt(radial2 * _angular_norm(poly, l))
    analytic = HydrogenAnalytic(n, l, m, amp)
    model = coulomb_model()
    energy = -1.0 / (2.0 * n * n)
    return _finalize(f"hydrogen({n},{l},{m})", model, grid, analytic,
                     eigen_energy=energy, quantum_numbers=(n, l, m))


def hydrogen_radial_state(n: int, l: int, r_max: float = 32.0,
                          points: int = 1024) -> CatalogState:
    """Reduced radial state u = r R_nl on (0, r_max), cell edges at 0.

    The induced 1D density u^2 equals the radial probability density of the
    3D state, so radial events and radial overlaps are exact 1D computations.
    """
    if n < 1 or not 0 <= l < n:
        raise ValueError(f"invalid quantum numbers (n,l)=({n},{l})")
    h = r_max / points
    grid = make_grid([(h / 2.0, r_max + h / 2.0)], [points])
    _, g, gp, _ = HydrogenAnalytic(n, l, 0, 1.0)._parts()
    radial2, _ = quad(lambda r: r ** (2 * l + 2) * g(r) ** 2, 0.0, 60.0 * n,
                      limit=200)
    amp = 1.0 / math.sqrt(radial2)

    def val(coords):
        r = coords[0]
        return r ** (l + 1) * g(r) + 0.0j

    def grd(coords, axis):
        r = coords[0]
        return (l + 1) * r ** l * g(r) + r ** (l + 1) * gp(r) + 0.0j

    analytic = FuncAnalytic(val, gradient_fn=grd, amp=amp)
    model = free_model(n_bodies=1, body_dim=1)
    return _finalize(f"hydrogen_radial({n},{l})", model, grid, analytic,
                     quantum_numbers=(n, l))


def _as_tuple(x, dim: int, name: str) -> tuple[float, ...]:
    if np.isscalar(x):
        return (float(x),) * dim
    t = tuple(float(v) for v in x)
    if len(t) != dim:
        raise ValueError(f"{name} needs {dim} entries, got {len(t)}")
    return t


def _default_points(dim: int) -> int:
    return {1: 512, 2: 256}.get(dim, 64)


def gaussian_packet(center, sigma, k0, model: Model,
                    grid: Optional[Grid] = None) -> CatalogState:
    """Normalized Gaussian with plane phase: exp(-(x-c)^2/4s^2 + i k0 x)."""
    dim = model.dim
    c = _as_tuple(center, dim, "center")
    s = _as_tuple(sigma, dim, "sigma")
    k = _as_tuple(k0, dim, "k0")
    if any(si <= 0 for si in s):
        raise ValueError("sigma must be positive")
    if grid is None:
        pts = _default_points(dim)
        grid = make_grid([(ci - 10 * si, ci + 10 * si) for ci, si in zip(c, s)],
                         [pts] * dim)
    amp = math.prod((2.0 * math.pi * si ** 2) ** (-0.25) for si in s)
    analytic = GaussianAnalytic(c, tuple(si ** 2 + 0.0j for si in s), k, amp)
    return _finalize(f"gaussian(sigma={sigma}, k0={k0})", model, grid, analytic)


def free_gaussian_state(center, sigma, k0, t: float, model: Model,
                        grid: Grid) -> CatalogState:
    """The freely evolved Gaussian at time t, in closed form.

    Requires a free model; each axis spreads as a_i(t) = s_i^2 + i hbar t/2m
    while the center translates by hbar k0 t / m.
    """
    if model.potential.label != "free":
        raise ValueError("free_gaussian_state needs a free model")
    dim = model.dim
    c0 = _as_tuple(center, dim, "center")
    s = _as_tuple(sigma, dim, "sigma")
    k = _as_tuple(k0, dim, "k0")
    if any(si <= 0 for si in s):
        raise ValueError("sigma must be positive")
    a = []
    c = []
    amp = 1.0 + 0.0j
    for i in range(dim):
        mass = model.mass_of_axis(i)
        ai = s[i] ** 2 + 0.5j * model.hbar * t / mass
        a.append(ai)
        c.append(c0[i] + model.hbar * k[i] * t / mass)
        amp = amp * (2.0 * math.pi * s[i] ** 2) ** (-0.25) * np.sqrt(s[i] ** 2 / ai)
        amp = amp * np.exp(-0.5j * model.hbar * k[i] ** 2 * t / mass)
    analytic = GaussianAnalytic(tuple(c), tuple(a), k, amp)
    return _finalize(f"free_gaussian(t={t})", model, grid, analytic)


def harmonic_eigenstate(n_per_axis, omega: float, model: Model,
                        grid: Optional[Grid] = None) -> CatalogState:
    """Hermite-function eigenstate with energy hbar omega (sum n_i + d/2)."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    dim = model.dim
    if np.isscalar(n_per_axis):
        ns = (int(n_per_axis),) * dim
    else:
        ns = tuple(int(v) for v in n_per_axis)
    if len(ns) != dim or any(v < 0 for v in ns):
        raise ValueError("quantum numbers must be nonnegative, one per axis")
    alphas = tuple(
        math.sqrt(model.mass_of_axis(i) * omega / model.hbar) for i in range(dim)
    )
    if grid is None:
        pts = _default_points(dim)
        ext = [( -(math.sqrt(2 * ns[i] + 1) + 8.0) / alphas[i],
                 (math.sqrt(2 * ns[i] + 1) + 8.0) / alphas[i]) for i in range(dim)]
        grid = make_grid(ext, [pts] * dim)
    amp = math.prod(math.sqrt(al) for al in alphas)
    analytic = HermiteProductAnalytic(ns, alphas, amp)
    energy = model.hbar * omega * (sum(ns) + dim / 2.0)
    return _finalize(f"harmonic{ns}", model, grid, analytic,
                     eigen_energy=energy, quantum_numbers=ns)


def superpose(coeffs: Sequence[complex], states: Sequence[CatalogState]) -> CatalogState:
    """Normalized linear combination; keeps exact energy only if shared."""
    if len(coeffs) == 0 or len(coeffs) != len(states):
        raise ValueError("need one coefficient per state, at least one")
    grid = states[0].grid
    model = states[0].model
    for s in states[1:]:
        if s.grid != grid:
            raise ValueError("superpose requires a common grid")

    leaves: list[tuple[complex, CatalogState]] = []
    for c, s in zip(coeffs, states):
        if s.components:
            leaves.extend((complex(c) * c2, s2) for c2, s2 in s.components)
        else:
            leaves.append((complex(c), s))

    raw = np.zeros(grid.shape, dtype=np.complex128)
    for c, s in leaves:
        raw += c * s.values
    raw_field = ComplexField(grid, raw)
    norm2 = float(inner_product(raw_field, raw_field).real)
    if norm2 < 1e-12 * sum(abs(c) ** 2 for c, _ in leaves):
        raise ValueError("superposition cancels to zero")
    scale = 1.0 / math.sqrt(norm2)

    analytic = None
    if all(s.field.analytic is not None for _, s in leaves):
        analytic = SumAnalytic(tuple((c * scale, s.field.analytic)
                                     for c, s in leaves))
    field = ComplexField(grid, raw * scale, analytic)

    energies = [s.eigen_energy for _, s in leaves]
    eigen = energies[0] if (None not in energies
                            and all(e == energies[0] for e in energies)) else None
    comps = tuple((c * scale, s) for c, s in leaves)
    return CatalogState("superposition", model, field, eigen_energy=eigen,
                        components=comps)
