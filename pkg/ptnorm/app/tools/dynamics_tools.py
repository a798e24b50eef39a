"""Time evolution of psi under H = -d^2/dx^2 + V(x) with a complex PT-symmetric V.

The grid is always symmetric about x = 0, so psi(-x) is the reversed sample
array. Crank-Nicolson with Dirichlet zero boundaries; the interior system is
tridiagonal and solved with scipy's banded solver.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_banded

from ..errors import BlowUp, GridMismatch, ParameterError, PreconditionError
from .model_tools import Eigenstate, ModelSpec, eigenfunction, potential

log = logging.getLogger(__name__)

MIN_POINTS = 16
BLOWUP_FACTOR = 1e6
BOUNDARY_RATIO = 1e-8


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    num_points: int

    def __post_init__(self) -> None:
        if self.num_points < MIN_POINTS:
            raise ParameterError(f"grid needs num_points >= {MIN_POINTS} (got {self.num_points})")
        if not self.x_max > 0:
            raise ParameterError(f"grid needs x_max > 0 (got x_max={self.x_max})")
        if self.x_min != -self.x_max:
            raise ParameterError(
                f"grid must be symmetric, x_min = -x_max (got [{self.x_min}, {self.x_max}])"
            )

    @classmethod
    def symmetric(cls, half_width: float, points: int) -> "Grid":
        return cls(x_min=-float(half_width), x_max=float(half_width), num_points=int(points))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.num_points - 1)

    @property
    def xs(self) -> np.ndarray:
        # built from a centred index so that xs[::-1] == -xs holds exactly
        return (np.arange(self.num_points) - 0.5 * (self.num_points - 1)) * self.dx

    def refined(self, factor: int = 2) -> "Grid":
        return Grid.symmetric(self.x_max, factor * (self.num_points - 1) + 1)


@dataclass(frozen=True)
class GridWavefunction:
    grid: Grid
    samples: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        arr = np.array(self.samples, dtype=np.complex128)
        if arr.shape != (self.grid.num_points,):
            raise GridMismatch(
                f"samples have shape {arr.shape}, grid has {self.grid.num_points} points"
            )
        if not np.all(np.isfinite(arr)):
            raise ParameterError("wavefunction samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def reflected_conj(self) -> np.ndarray:
        """psi*(-x) on the same grid."""
        return np.conj(self.samples[::-1])


@dataclass(frozen=True)
class DensityPair:
    p_pt: np.ndarray
    j_pt: np.ndarray
    t: float


@dataclass(frozen=True)
class RefinementLevel:
    dx: float
    dt: float
    residual: float
    drift: float


# -------------------------
# Initial states
# -------------------------
def sample_state(state: Eigenstate, grid: Grid, t: float = 0.0, normalized: bool = True) -> GridWavefunction:
    """u(x) e^{-iEt} on the grid."""
    vals = np.asarray(eigenfunction(state, grid.xs, normalized=normalized), dtype=np.complex128)
    if t:
        vals = vals * np.exp(-1j * state.energy * t)
    return GridWavefunction(grid=grid, samples=vals, t=t)


def superpose(parts: Sequence[Tuple[complex, GridWavefunction]]) -> GridWavefunction:
    if not parts:
        raise PreconditionError("superposition needs at least one component")
    grid, t = parts[0][1].grid, parts[0][1].t
    total = np.zeros(grid.num_points, dtype=np.complex128)
    for coeff, psi in parts:
        if psi.grid != grid or psi.t != t:
            raise GridMismatch("superposed components must share grid and time")
        total += complex(coeff) * psi.samples
    return GridWavefunction(grid=grid, samples=total, t=t)


def gaussian_packet(
    grid: Grid,
    center: float = 0.0,
    width: float = 1.0,
    momentum: float = 0.0,
    t: float = 0.0,
) -> GridWavefunction:
    """Free Gaussian packet, exact at time t for V = 0 (hbar = 2m = 1).

    |psi(x, 0)|^2 has standard deviation `width`; the packet moves at 2 * momentum.
    """
    if not width > 0:
        raise ParameterError(f"packet width must be positive (got {width})")
    x = grid.xs
    s = width * width + 1j * t
    shifted = x - center - 2.0 * momentum * t
    envelope = (2.0 * math.pi * width * width) ** -0.25 * np.sqrt(width * width / s)
    vals = envelope * np.exp(-shifted * shifted / (4.0 * s) + 1j * momentum * x - 1j * momentum * momentum * t)
    return GridWavefunction(grid=grid, samples=vals, t=t)


# -------------------------
# Evolution
# -------------------------
def _potential_on(model: Optional[ModelSpec], xs: np.ndarray) -> np.ndarray:
    if model is None:
        return np.zeros(xs.shape, dtype=np.complex128)
    return np.asarray(potential(model, xs), dtype=np.complex128)


def iter_evolve(
    psi0: GridWavefunction,
    model: Optional[ModelSpec],
    dt: float,
    steps: int,
) -> Iterator[GridWavefunction]:
    """Yield psi0 and then one snapshot per time step.

    model=None evolves the free particle.
    """
    if not dt > 0:
        raise PreconditionError(f"time step must satisfy dt > 0 (got dt={dt})")
    if steps < 0:
        raise PreconditionError(f"steps must be >= 0 (got {steps})")
    grid = psi0.grid
    dx = grid.dx
    if dt > 10.0 * dx * dx:
        log.warning("dt=%g exceeds 10*dx^2=%g; the scheme stays stable but phases lose accuracy", dt, 10.0 * dx * dx)

    psi = np.array(psi0.samples, dtype=np.complex128)
    peak0 = float(np.max(np.abs(psi)))
    if peak0 == 0.0:
        raise PreconditionError("initial wavefunction is identically zero")
    edge = max(abs(psi[0]), abs(psi[-1]))
    if edge > BOUNDARY_RATIO * peak0:
        log.warning("boundary |psi| = %.2e is not negligible; enlarge the box", edge)

    inner = _potential_on(model, grid.xs[1:-1])
    a = 0.5j * dt
    diag = 2.0 / (dx * dx) + inner
    off = -1.0 / (dx * dx)
    ab = np.zeros((3, inner.size), dtype=np.complex128)
    ab[0, 1:] = a * off
    ab[1, :] = 1.0 + a * diag
    ab[2, :-1] = a * off

    yield psi0
    t0 = psi0.t
    for k in range(1, steps + 1):
        u = psi[1:-1]
        h_u = diag * u
        h_u[:-1] += off * u[1:]
        h_u[1:] += off * u[:-1]
        nxt = np.zeros_like(psi)
        nxt[1:-1] = solve_banded((1, 1), ab, u - a * h_u, check_finite=False)
        peak = float(np.max(np.abs(nxt)))
        growth = peak / peak0
        if not math.isfinite(peak) or growth > BLOWUP_FACTOR:
            raise BlowUp(step=k, growth=growth)
        psi = nxt
        if k % 256 == 0:
            log.debug("evolve step %d/%d, max|psi| growth %.3g", k, steps, growth)
        yield GridWavefunction(grid=grid, samples=psi, t=t0 + k * dt)


def evolve(
    psi0: GridWavefunction,
    model: Optional[ModelSpec],
    dt: float,
    steps: int,
    every: int = 1,
) -> List[GridWavefunction]:
    """Snapshots at t = k*dt for every `every`-th step, always including the last."""
    if every < 1:
        raise PreconditionError(f"snapshot stride must be >= 1 (got {every})")
    out: List[GridWavefunction] = []
    for k, snap in enumerate(iter_evolve(psi0, model, dt, steps)):
        if k % every == 0 or k == steps:
            out.append(snap)
    return out


# -------------------------
# Densities and conservation
# -------------------------
def _derivative(f: np.ndarray, dx: float, order: int = 2) -> np.ndarray:
    d = np.gradient(f, dx, edge_order=2)
    if order == 4:
        d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * dx)
    elif order != 2:
        raise ParameterError(f"derivative stencil order must be 2 or 4 (got {order})")
    return d


def _check_same_grid(psi1: GridWavefunction, psi2: GridWavefunction) -> None:
    if psi1.grid != psi2.grid:
        raise GridMismatch(f"grids differ: {psi1.grid} vs {psi2.grid}")
    if not math.isclose(psi1.t, psi2.t, rel_tol=0.0, abs_tol=1e-12):
        raise GridMismatch(f"time stamps differ: {psi1.t} vs {psi2.t}")


def cross_densities(psi1: GridWavefunction, psi2: GridWavefunction, order: int = 2) -> DensityPair:
    """psi2*(-x) psi1(x) and its current (1/i)[r psi1' - psi1 r'] with r = psi2*(-x)."""
    _check_same_grid(psi1, psi2)
    dx = psi1.grid.dx
    r = psi2.reflected_conj
    u = psi1.samples
    p = r * u
    j = -1j * (r * _derivative(u, dx, order) - u * _derivative(r, dx, order))
    return DensityPair(p_pt=p, j_pt=j, t=psi1.t)


def densities(psi: GridWavefunction, order: int = 2) -> DensityPair:
    return cross_densities(psi, psi, order=order)


def l2_densities(psi: GridWavefunction, order: int = 2) -> DensityPair:
    """Standard |psi|^2 and 2 Im(psi* psi'), stored as complex arrays."""
    u = psi.samples
    rho = np.abs(u) ** 2
    cur = 2.0 * np.imag(np.conj(u) * _derivative(u, psi.grid.dx, order))
    return DensityPair(p_pt=rho.astype(np.complex128), j_pt=cur.astype(np.complex128), t=psi.t)


def continuity_residual(
    snapshots: Sequence[GridWavefunction],
    partner: Optional[Sequence[GridWavefunction]] = None,
    edge: int = 2,
) -> float:
    """max |dP/dt + dJ/dx| over interior points from three consecutive snapshots.

    With `partner` the densities are the two-solution ones, P = psi2*(-x) psi1(x).
    """
    if len(snapshots) != 3:
        raise PreconditionError(f"continuity residual needs three snapshots (got {len(snapshots)})")
    others = snapshots if partner is None else partner
    if len(others) != 3:
        raise PreconditionError("partner run needs three snapshots as well")
    s0, s1, s2 = snapshots
    h1, h2 = s1.t - s0.t, s2.t - s1.t
    if not h1 > 0 or not math.isclose(h1, h2, rel_tol=1e-9, abs_tol=0.0):
        raise PreconditionError(f"snapshots must be equally spaced in time (got steps {h1}, {h2})")
    dens = [cross_densities(a, b) for a, b in zip(snapshots, others)]
    dp_dt = (dens[2].p_pt - dens[0].p_pt) / (2.0 * h1)
    dj_dx = _derivative(dens[1].j_pt, s1.grid.dx)
    res = np.abs(dp_dt + dj_dx)[edge:-edge]
    return float(np.max(res))


def conserved_overlap(
    run1: Sequence[GridWavefunction], run2: Sequence[GridWavefunction]
) -> np.ndarray:
    """S(t) = sum_i psi2*(-x_i, t) psi1(x_i, t) dx for each snapshot pair."""
    if len(run1) != len(run2):
        raise GridMismatch(f"runs have {len(run1)} and {len(run2)} snapshots")
    out = np.empty(len(run1), dtype=np.complex128)
    for k, (a, b) in enumerate(zip(run1, run2)):
        _check_same_grid(a, b)
        out[k] = np.sum(b.reflected_conj * a.samples) * a.grid.dx
    return out


def pseudo_projection(state: Eigenstate, psi: GridWavefunction, normalized: bool = True) -> complex:
    """sum_i u*(-x_i) psi(x_i) dx with the stationary profile u."""
    u = np.asarray(eigenfunction(state, psi.grid.xs, normalized=normalized), dtype=np.complex128)
    return complex(np.sum(np.conj(u[::-1]) * psi.samples) * psi.grid.dx)


def overlap_drift(series: np.ndarray) -> float:
    if series.size == 0:
        return 0.0
    return float(np.max(np.abs(series - series[0])))


# -------------------------
# Refinement
# -------------------------
def _run_level(
    initial: Callable[[Grid], GridWavefunction],
    model: Optional[ModelSpec],
    grid: Grid,
    dt: float,
    t_final: float,
) -> RefinementLevel:
    steps = max(2, int(round(t_final / dt)))
    window: deque = deque(maxlen=3)
    s0: Optional[complex] = None
    drift = 0.0
    for snap in iter_evolve(initial(grid), model, dt, steps):
        window.append(snap)
        s = complex(np.sum(snap.reflected_conj * snap.samples) * grid.dx)
        if s0 is None:
            s0 = s
        drift = max(drift, abs(s - s0))
    residual = continuity_residual(list(window))
    log.debug("refinement level dx=%g dt=%g: residual %.3e drift %.3e", grid.dx, dt, residual, drift)
    return RefinementLevel(dx=grid.dx, dt=dt, residual=residual, drift=drift)


def refinement_study(
    initial: Callable[[Grid], GridWavefunction],
    model: Optional[ModelSpec],
    grid: Grid,
    dt: float,
    t_final: float,
    levels: int = 3,
    jobs: int = 1,
) -> List[RefinementLevel]:
    """Continuity residual at t_final for (dx, dt), (dx/2, dt/2), ..."""
    if levels < 2:
        raise PreconditionError(f"refinement needs at least two levels (got {levels})")
    setups = []
    g, h = grid, dt
    for _ in range(levels):
        setups.append((g, h))
        g, h = g.refined(2), 0.5 * h
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda gh: _run_level(initial, model, gh[0], gh[1], t_final), setups))
    return [_run_level(initial, model, g_, h_, t_final) for g_, h_ in setups]


def convergence_order(levels: Sequence[RefinementLevel]) -> List[float]:
    """Observed order log(r_k / r_{k+1}) / log(dx_k / dx_{k+1}) for each refinement."""
    orders: List[float] = []
    for coarse, fine in zip(levels, levels[1:]):
        if coarse.residual <= 0 or fine.residual <= 0:
            orders.append(float("nan"))
            continue
        orders.append(math.log(coarse.residual / fine.residual) / math.log(coarse.dx / fine.dx))
    return orders
