"""Numeric kernels with twin numba and pure-numpy implementations.

The numba lane is used by default when numba imports cleanly; setting the
environment variable ``BORNLAB_NO_NUMBA=1`` (before import) selects the numpy
lane instead.  Both lanes implement the exact same arithmetic:

* reductions use a fixed adjacent-pair tree, so sums are bit-identical across
  backends and independent of threading,
* the sampler's CDF search reproduces ``searchsorted(..., side="right")``
  comparisons one-to-one.

``benchmarks/bench_kernels.py`` times one lane against the other.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "backend",
    "use_backend",
    "pairwise_sum",
    "pairwise_sum_complex",
    "abs2",
    "phase_multiply",
    "running_sum",
    "find_cells",
]


# ---------------------------------------------------------------------------
# pure-numpy lane

def _pairwise_sum_np(x: np.ndarray) -> float:
    work = np.ravel(x).astype(np.float64, copy=True)
    n = work.size
    if n == 0:
        return 0.0
    while n > 1:
        half = n // 2
        folded = work[0 : 2 * half : 2] + work[1 : 2 * half : 2]
        if n % 2:
            work = np.append(folded, work[n - 1])
        else:
            work = folded
        n = work.size
    return float(work[0])


def _pairwise_sum_complex_np(x: np.ndarray) -> complex:
    work = np.ravel(x).astype(np.complex128, copy=True)
    n = work.size
    if n == 0:
        return 0.0 + 0.0j
    while n > 1:
        half = n // 2
        folded = work[0 : 2 * half : 2] + work[1 : 2 * half : 2]
        if n % 2:
            work = np.append(folded, work[n - 1])
        else:
            work = folded
        n = work.size
    return complex(work[0])


def _abs2_np(z: np.ndarray) -> np.ndarray:
    re = np.ascontiguousarray(z).real
    im = np.ascontiguousarray(z).imag
    return re * re + im * im


def _phase_multiply_np(z: np.ndarray, phase: np.ndarray) -> None:
    # componentwise form; numpy's fused complex multiply rounds differently
    a, b = z.real.copy(), z.imag.copy()
    c, d = phase.real, phase.imag
    z.real[...] = a * c - b * d
    z.imag[...] = a * d + b * c


def _running_sum_np(x: np.ndarray) -> np.ndarray:
    return np.cumsum(x.astype(np.float64, copy=False))


def _find_cells_np(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, cdf.size - 1).astype(np.int64)


_NUMPY_LANE = {
    "pairwise_sum": _pairwise_sum_np,
    "pairwise_sum_complex": _pairwise_sum_complex_np,
    "abs2": _abs2_np,
    "phase_multiply": _phase_multiply_np,
    "running_sum": _running_sum_np,
    "find_cells": _find_cells_np,
}


# ---------------------------------------------------------------------------
# numba lane

def _build_numba_lane():
    from numba import njit

    @njit(cache=True)
    def _pairwise_sum_nb(x):
        flat = x.ravel()
        n = flat.size
        if n == 0:
            return 0.0
        buf = flat.astype(np.float64)
        while n > 1:
            half = n // 2
            for i in range(half):
                buf[i] = buf[2 * i] + buf[2 * i + 1]
            if n % 2:
                buf[half] = buf[n - 1]
                n = half + 1
            else:
                n = half
        return buf[0]

    @njit(cache=True)
    def _pairwise_sum_complex_nb(x):
        flat = x.ravel()
        n = flat.size
        if n == 0:
            return 0.0 + 0.0j
        buf = flat.astype(np.complex128)
        while n > 1:
            half = n // 2
            for i in range(half):
                buf[i] = buf[2 * i] + buf[2 * i + 1]
            if n % 2:
                buf[half] = buf[n - 1]
                n = half + 1
            else:
                n = half
        return buf[0]

    @njit(cache=True)
    def _abs2_flat_nb(z, out):
        for i in range(z.size):
            re = z[i].real
            im = z[i].imag
            out[i] = re * re + im * im

    def _abs2_nb(z):
        zc = np.ascontiguousarray(z)
        out = np.empty(zc.shape, dtype=np.float64)
        _abs2_flat_nb(zc.ravel(), out.ravel())
        return out

    @njit(cache=True)
    def _phase_multiply_flat_nb(z, phase):
        for i in range(z.size):
            z[i] = z[i] * phase[i]

    def _phase_multiply_nb(z, phase):
        _phase_multiply_flat_nb(z.ravel(), np.ascontiguousarray(phase).ravel())

    @njit(cache=True)
    def _running_sum_nb(x):
        out = np.empty(x.size, dtype=np.float64)
        acc = 0.0
        for i in range(x.size):
            acc = acc + x[i]
            out[i] = acc
        return out

    @njit(cache=True)
    def _find_cells_nb(cdf, u):
        n = cdf.size
        out = np.empty(u.size, dtype=np.int64)
        for k in range(u.size):
            lo = 0
            hi = n
            while lo < hi:
                mid = (lo + hi) // 2
                if u[k] < cdf[mid]:
                    hi = mid
                else:
                    lo = mid + 1
            if lo > n - 1:
                lo = n - 1
            out[k] = lo
        return out

    return {
        "pairwise_sum": _pairwise_sum_nb,
        "pairwise_sum_complex": _pairwise_sum_complex_nb,
        "abs2": _abs2_nb,
        "phase_multiply": _phase_multiply_nb,
        "running_sum": _running_sum_nb,
        "find_cells": _find_cells_nb,
    }


_NUMBA_LANE = None
if os.environ.get("BORNLAB_NO_NUMBA", "") != "1":
    try:
        _NUMBA_LANE = _build_numba_lane()
    except ImportError:
        _NUMBA_LANE = None

_active_name = "numba" if _NUMBA_LANE is not None else "numpy"
_active = _NUMBA_LANE if _NUMBA_LANE is not None else _NUMPY_LANE


def backend() -> str:
    """Name of the active lane, ``"numba"`` or ``"numpy"``."""
    return _active_name


def use_backend(name: str) -> None:
    """Select a lane explicitly (used by tests and benchmarks)."""
    global _active, _active_name
    if name == "numpy":
        _active, _active_name = _NUMPY_LANE, "numpy"
    elif name == "numba":
        if _NUMBA_LANE is None:
            raise RuntimeError("numba lane unavailable (import failed or disabled)")
        _active, _active_name = _NUMBA_LANE, "numba"
    else:
        raise ValueError(f"unknown backend {name!r}")


def pairwise_sum(x: np.ndarray) -> float:
    """Sum of a real array by a fixed adjacent-pair tree (bit-reproducible)."""
    return _active["pairwise_sum"](np.ravel(x))


def pairwise_sum_complex(x: np.ndarray) -> complex:
    """Complex counterpart of :func:`pairwise_sum`, same tree per component."""
    return _active["pairwise_sum_complex"](np.ravel(x))


def abs2(z: np.ndarray) -> np.ndarray:
    """Elementwise squared magnitude ``re*re + im*im``."""
    return _active["abs2"](z)


def phase_multiply(z: np.ndarray, phase: np.ndarray) -> None:
    """In-place elementwise complex multiply ``z *= phase``."""
    _active["phase_multiply"](z, phase)


def running_sum(x: np.ndarray) -> np.ndarray:
    """Sequential cumulative sum (the sampler's CDF)."""
    return _active["running_sum"](np.ravel(x))


def find_cells(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Right-bisect each ``u`` into the CDF; clipped to the last cell."""
    return _active["find_cells"](np.ravel(cdf), np.ravel(u))
