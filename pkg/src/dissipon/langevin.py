"""Mean-trajectory solvers for the generalized Langevin equation.

The mean of the stochastic force vanishes in every reservoir eigenstate,
so the mean trajectory obeys the deterministic integro-differential
equation

    m x'' + integral_0^t dt' gamma(t - t') x'(t') = -grad v(x)

solved here with a velocity-Verlet-style step and a trapezoidal memory
sum (second order overall).  The Markovian specialisation replaces the
convolution by a local friction beta * x'.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StabilityError

__all__ = ["PotentialSpec", "Trajectory", "evolve_mean_volterra", "evolve_mean_markov"]


class PotentialSpec:
    """External potential: harmonic (1/2 m w^2 x^2) or a custom gradient."""

    def __init__(self, kind, *, m=None, omega=None, gradient=None):
        self.kind = kind
        if kind == "harmonic":
            if m is None or m <= 0:
                raise DomainError("harmonic potential requires m > 0")
            if omega is None or omega < 0:
                raise DomainError("harmonic potential requires omega >= 0")
            self.m = float(m)
            self.omega = float(omega)
        elif kind == "custom":
            if gradient is None:
                raise DomainError("custom potential requires a gradient callable")
            self._gradient = gradient
        else:
            raise DomainError(f"unknown potential kind {kind!r}")

    @classmethod
    def harmonic(cls, m, omega):
        return cls("harmonic", m=m, omega=omega)

    @classmethod
    def free(cls):
        return cls("custom", gradient=lambda x: np.zeros(3))

    @classmethod
    def custom(cls, gradient):
        return cls("custom", gradient=gradient)

    def gradient(self, x):
        if self.kind == "harmonic":
            return self.m * self.omega**2 * np.asarray(x, dtype=float)
        return np.asarray(self._gradient(x), dtype=float)


@dataclass
class Trajectory:
    """Positions and velocities on a uniform time grid."""

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        n = len(self.times)
        if not np.all(np.diff(self.times) > 0):
            raise DomainError("trajectory grid must be strictly increasing")
        if self.positions.shape != (n, 3) or self.velocities.shape != (n, 3):
            raise DomainError("positions/velocities must be (n, 3) arrays")
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.velocities))):
            raise DomainError("trajectory contains non-finite values")

    @property
    def step(self):
        return float(self.times[1] - self.times[0])

    def accelerations(self):
        """Second-order finite differences of the velocity samples."""
        return np.gradient(self.velocities, self.times, axis=0)

    def mechanical_energy(self, m, omega):
        """(1/2) m v^2 + (1/2) m w^2 x^2 along the trajectory."""
        kin = 0.5 * m * np.sum(self.velocities**2, axis=1)
        pot = 0.5 * m * omega**2 * np.sum(self.positions**2, axis=1)
        return kin + pot

    def write_csv(self, path):
        from .io import emit_table
        rows = (
            (self.times[i], *self.positions[i], *self.velocities[i])
            for i in range(len(self.times))
        )
        emit_table(path, ["t", "x1", "x2", "x3", "v1", "v2", "v3"], rows)


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise DomainError("time grid must be a 1-d array with at least 2 points")
    h = np.diff(grid)
    if not np.all(h > 0) or not np.allclose(h, h[0], rtol=1e-10, atol=0.0):
        raise DomainError("time grid must be uniform and increasing")
    return grid, float(h[0])


def _energy_guard(pot, m, x, v, e0, label):
    # beta >= 0 dynamics must not gain mechanical energy beyond discretisation
    if pot.kind != "harmonic" or e0 <= 0.0:
        return
    e = 0.5 * m * v @ v + 0.5 * pot.m * pot.omega**2 * (x @ x)
    if e > 1.05 * e0:
        raise StabilityError(
            f"{label}: mechanical energy grew by more than 5%; reduce the step")


def evolve_mean_markov(m, pot, beta, x0, v0, grid):
    """Integrate m x'' + beta x' = -grad v for the mean trajectory.

    Velocity Verlet with the friction half-step folded in implicitly, so
    the scheme stays second order for any beta >= 0.
    """
    if m <= 0:
        raise DomainError("mass must be positive")
    if beta < 0:
        raise DomainError("friction must be nonnegative")
    grid, h = _check_grid(grid)
    n = len(grid)
    x = np.empty((n, 3))
    v = np.empty((n, 3))
    x[0] = np.asarray(x0, dtype=float)
    v[0] = np.asarray(v0, dtype=float)
    e0 = 0.5 * m * v[0] @ v[0] + (
        0.5 * pot.m * pot.omega**2 * (x[0] @ x[0]) if pot.kind == "harmonic" else 0.0)
    damp = 1.0 + h * beta / (2.0 * m)
    f = -pot.gradient(x[0]) - beta * v[0]
    for i in range(n - 1):
        vh = v[i] + 0.5 * h * f / m
        x[i + 1] = x[i] + h * vh
        v[i + 1] = (vh - 0.5 * h * pot.gradient(x[i + 1]) / m) / damp
        f = -pot.gradient(x[i + 1]) - beta * v[i + 1]
        if i % 256 == 0:
            _energy_guard(pot, m, x[i + 1], v[i + 1], e0, "markov step")
    return Trajectory(grid, x, v)


def evolve_mean_volterra(m, pot, kernel, x0, v0, grid):
    """Integrate the full memory equation on a uniform grid.

    The kernel must be sampled at least as finely as the grid; it is
    resampled onto the step offsets internally.  The trapezoidal memory
    sum includes the current velocity implicitly (the term is linear, so
    the half-weight endpoint is solved for exactly), keeping the scheme
    second order.  History older than the point where |gamma| falls below
    abs_tol-scale relative to its peak is dropped.
    """
    if m <= 0:
        raise DomainError("mass must be positive")
    grid, h = _check_grid(grid)
    if kernel.step > h * (1.0 + 1e-9):
        raise DomainError("kernel must be sampled at least as finely as the grid")
    if grid[-1] - grid[0] > kernel.times[-1] + 1e-12:
        raise DomainError("kernel samples do not cover the integration window")
    n = len(grid)
    offsets = np.arange(n) * h
    gam = kernel.at(offsets)

    # memory truncation: drop lags where the kernel has decayed to noise level
    peak = np.max(np.abs(gam))
    significant = np.nonzero(np.abs(gam) >= 1e-10 * peak)[0]
    n_mem = int(significant[-1]) + 1 if len(significant) else 1

    x = np.empty((n, 3))
    v = np.empty((n, 3))
    x[0] = np.asarray(x0, dtype=float)
    v[0] = np.asarray(v0, dtype=float)
    e0 = 0.5 * m * v[0] @ v[0] + (
        0.5 * pot.m * pot.omega**2 * (x[0] @ x[0]) if pot.kind == "harmonic" else 0.0)
    conv0 = 0.5 * h * gam[0]  # implicit self-weight of the trapezoid endpoint
    damp = 1.0 + 0.5 * h * conv0 / m

    def memory_tail(i):
        """Trapezoid over past samples v_lo..v_{i-1} for the force at t_i."""
        lo = max(0, i - n_mem + 1)
        w = gam[i - np.arange(lo, i)]
        out = h * (w @ v[lo:i])
        if lo == 0:
            out -= 0.5 * h * gam[i] * v[0]
        return out

    a = -pot.gradient(x[0]) / m  # the memory integral is empty at t = 0
    for i in range(n - 1):
        vh = v[i] + 0.5 * h * a
        x[i + 1] = x[i] + h * vh
        tail = memory_tail(i + 1)
        rhs = vh + 0.5 * h * (-pot.gradient(x[i + 1]) - tail) / m
        v[i + 1] = rhs / damp
        a = (-pot.gradient(x[i + 1]) - tail - conv0 * v[i + 1]) / m
        if i % 256 == 0:
            _energy_guard(pot, m, x[i + 1], v[i + 1], e0, "volterra step")
    return Trajectory(grid, x, v)
