"""Scalar kernels: real Gamma, generalized Laguerre and Jacobi polynomials.

The polynomial kernels accept a complex scalar or any numpy array of complex
arguments and evaluate by forward three-term recurrence. They return a
Python complex for scalar input and a complex ndarray otherwise.
"""
from __future__ import annotations

import math
from typing import Union

import numpy as np

from ..errors import DegenerateRecurrence, ParameterError, PoleError

ComplexLike = Union[complex, float, np.ndarray]

MAX_DEGREE = 64

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _sinpi(x: float) -> float:
    # x - 2*round(x/2) is exact, so sin(pi*x) keeps full relative accuracy near the poles
    r = x - 2.0 * round(0.5 * x)
    if r > 0.5:
        r = 1.0 - r
    elif r < -0.5:
        r = -1.0 - r
    return math.sin(math.pi * r)


def gamma(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ParameterError(f"gamma argument must be finite (got {x})")
    if x <= 0.0 and x == math.floor(x):
        raise PoleError(f"gamma has a pole at non-positive integer {x:g}")
    if x < 0.5:
        return math.pi / (_sinpi(x) * gamma(1.0 - x))

    z = x - 1.0
    series = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        series += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    # split the power so t**(z+1/2) cannot overflow before exp(-t) scales it down
    half = t ** (0.5 * (z + 0.5))
    return _SQRT_2PI * half * (half * math.exp(-t)) * series


def _check_degree(n: int) -> None:
    if int(n) != n or n < 0:
        raise ParameterError(f"polynomial degree must be a non-negative integer (got {n})")
    if n > MAX_DEGREE:
        raise ParameterError(f"polynomial degree {n} exceeds the supported cap {MAX_DEGREE}")


def _as_complex(z: ComplexLike) -> np.ndarray:
    zz = np.asarray(z, dtype=np.complex128)
    if not np.all(np.isfinite(zz)):
        raise ParameterError("polynomial argument must be finite")
    return zz


def _finish(values: np.ndarray) -> ComplexLike:
    if values.ndim == 0:
        return complex(values)
    return values


def laguerre(n: int, a: float, z: ComplexLike) -> ComplexLike:
    """L_n^{(a)}(z) for any real a, including negative non-integers."""
    _check_degree(n)
    zz = _as_complex(z)
    prev = np.ones_like(zz)
    if n == 0:
        return _finish(prev)
    cur = 1.0 + a - zz
    for k in range(1, n):
        nxt = ((2 * k + 1 + a - zz) * cur - (k + a) * prev) / (k + 1)
        prev, cur = cur, nxt
    return _finish(cur)


def jacobi(n: int, lam: float, mu: float, z: ComplexLike) -> ComplexLike:
    """P_n^{(lam, mu)}(z) by the standard recurrence."""
    return jacobi_scaled(n, lam, mu, z, 1.0)


def jacobi_scaled(n: int, lam: float, mu: float, zeta: ComplexLike, inv: ComplexLike) -> ComplexLike:
    """P_n^{(lam, mu)}(zeta * w) / w^n, given zeta = z / w and inv = 1 / w.

    Runs the recurrence on p_k / w^k, so arguments whose n-th power overflows
    stay finite as long as w grows with them.
    """
    _check_degree(n)
    zz = _as_complex(zeta)
    iw = _as_complex(inv)
    prev = np.ones(np.broadcast(zz, iw).shape, dtype=np.complex128)
    if n == 0:
        return _finish(prev)
    cur = 0.5 * (lam - mu) * iw + 0.5 * (lam + mu + 2.0) * zz
    for k in range(2, n + 1):
        s = 2.0 * k + lam + mu
        a1 = 2.0 * k * (k + lam + mu) * (s - 2.0)
        if abs(a1) < 1e-12:
            raise DegenerateRecurrence(
                f"jacobi recurrence denominator vanishes at k={k} (lam={lam}, mu={mu})"
            )
        b1 = (s - 1.0) * (s * (s - 2.0) * zz + (lam * lam - mu * mu) * iw)
        c1 = 2.0 * (k + lam - 1.0) * (k + mu - 1.0) * s
        prev, cur = cur, (b1 * cur - c1 * iw * iw * prev) / a1
    return _finish(cur)
