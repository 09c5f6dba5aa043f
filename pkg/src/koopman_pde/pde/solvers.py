"""Periodic spectral solvers for the heat, Burgers and Kuramoto-Sivashinsky equations.

Heat is propagated exactly in Fourier space. Burgers and KS use a Fourier
pseudospectral discretization with 2/3-rule dealiasing and fourth-order
exponential time differencing (ETDRK4, Cox & Matthews 2002) whose
phi-function coefficients are evaluated by contour integrals (Kassam &
Trefethen 2005). Solver entry points accept a single state ``(n,)`` or a batch
``(M, n)``; rows never interact.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, NumericError, SolverDivergence
from ..numerics import irfft, rfft
from .grid import Grid1D

HEAT_DOMAIN = (-np.pi, np.pi)
BURGERS_DOMAIN = (-np.pi, np.pi)
KS_DOMAIN = (-4 * np.pi, 4 * np.pi)


@dataclass
class Trajectory:
    grid: Grid1D
    dt: float
    states: np.ndarray

    def __post_init__(self):
        if self.states.ndim != 2 or self.states.shape[0] < 2:
            raise ValueError(f"trajectory needs states of shape (T >= 2, n), got {self.states.shape}")
        if self.states.shape[1] != self.grid.n:
            raise ValueError("trajectory width does not match grid")

    @property
    def times(self):
        return self.dt * np.arange(self.states.shape[0])


def _grid_for(u0, grid, domain):
    return grid if grid is not None else Grid1D.for_domain(np.shape(u0)[-1], domain)


# ---- heat ------------------------------------------------------------------------


def heat_solve(u0, t, grid=None, diffusivity=1.0):
    """Exact solution of ``u_t = diffusivity * u_xx`` at time ``t``."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    grid = _grid_for(u0, grid, HEAT_DOMAIN)
    decay = np.exp(-diffusivity * grid.wavenumbers**2 * t)
    return irfft(rfft(u0) * decay, grid.n)


# ---- Cole-Hopf ---------------------------------------------------------------------


def _check_zero_mean(u0):
    mean = np.mean(u0, axis=-1)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(u0))))
    if np.any(np.abs(mean) > tol):
        raise DataError(
            f"Cole-Hopf needs a zero-mean state (mean drift {np.max(np.abs(mean)):.3e} > {tol:.1e})"
        )


def colehopf_encode(u, epsilon, mu, grid=None, anchor=0.0):
    """``v = exp(-epsilon / (2 mu) * int_anchor^x u ds)`` for zero-mean ``u``."""
    grid = _grid_for(u, grid, BURGERS_DOMAIN)
    u = np.asarray(u, dtype=float)
    _check_zero_mean(u)
    prim = grid.antiderivative(u)
    prim = prim - np.expand_dims(grid.interpolate(prim, anchor), -1)
    return np.exp(-epsilon / (2 * mu) * prim)


def colehopf_decode(v, epsilon, mu, grid=None):
    """``u = -2 (mu / epsilon) v_x / v``."""
    grid = _grid_for(v, grid, BURGERS_DOMAIN)
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise NumericError("Cole-Hopf variable crossed zero; state is outside the transform's validity range")
    return -2.0 * (mu / epsilon) * grid.derivative(v) / v


def burgers_solve_colehopf(u0, epsilon, mu, t, grid=None):
    """Burgers solution via the heat equation in the Cole-Hopf variable."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if epsilon <= 0 or mu <= 0:
        raise ValueError("Cole-Hopf needs epsilon > 0 and mu > 0")
    grid = _grid_for(u0, grid, BURGERS_DOMAIN)
    v0 = colehopf_encode(u0, epsilon, mu, grid)
    return colehopf_decode(heat_solve(v0, t, grid, diffusivity=mu), epsilon, mu, grid)


# ---- ETDRK4 --------------------------------------------------------------------------


class ETDRK4:
    """Exponential RK4 for ``v_t = L v + N(v)`` with diagonal real ``L`` in Fourier space."""

    def __init__(self, linear, nonlinear, h, contour_points=32):
        self.nonlinear = nonlinear
        self.h = h
        lin = np.asarray(linear, dtype=float)
        self.E = np.exp(h * lin)
        self.E2 = np.exp(h * lin / 2)
        # upper half circle suffices since L is real
        roots = np.exp(1j * np.pi * (np.arange(1, contour_points + 1) - 0.5) / contour_points)
        lr = h * lin[:, None] + roots[None, :]
        elr = np.exp(lr)
        lr3 = lr**3
        self.Q = h * np.mean((np.exp(lr / 2) - 1) / lr, axis=1).real
        self.f1 = h * np.mean((-4 - lr + elr * (4 - 3 * lr + lr**2)) / lr3, axis=1).real
        self.f2 = h * np.mean((2 + lr + elr * (lr - 2)) / lr3, axis=1).real
        self.f3 = h * np.mean((-4 - 3 * lr - lr**2 + elr * (4 - lr)) / lr3, axis=1).real

    def step(self, v):
        N = self.nonlinear
        nv = N(v)
        a = self.E2 * v + self.Q * nv
        na = N(a)
        b = self.E2 * v + self.Q * na
        nb = N(b)
        c = self.E2 * a + self.Q * (2 * nb - nv)
        nc = N(c)
        return self.E * v + nv * self.f1 + 2 * (na + nb) * self.f2 + nc * self.f3


def _quadratic_flux(grid, coeff):
    """Fourier-space ``coeff * (u^2 / 2)_x`` with 2/3-rule dealiasing."""
    mask = grid.dealias_mask
    ik = 0.5j * coeff * grid.odd_wavenumbers * mask

    def nonlinear(v):
        u = irfft(v * mask, grid.n)
        return ik * rfft(u * u)

    return nonlinear


def integrate(u0, grid, linear, nonlinear, dt_solver, steps, save_every=1):
    """Batched ETDRK4 run; returns ``(states (M, T, n), diverged_at (M,))``.

    ``diverged_at`` holds the first solver step with a non-finite state, or -1.
    """
    u0 = np.atleast_2d(np.asarray(u0, dtype=float))
    if steps < 1 or save_every < 1:
        raise ValueError("need steps >= 1 and save_every >= 1")
    if steps % save_every:
        raise ValueError(f"steps={steps} is not a multiple of save_every={save_every}")
    stepper = ETDRK4(linear, nonlinear, dt_solver)
    n_save = steps // save_every + 1
    out = np.empty((u0.shape[0], n_save, grid.n))
    out[:, 0] = u0
    diverged = np.full(u0.shape[0], -1)
    v = rfft(u0)
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(1, steps + 1):
            v = stepper.step(v)
            if s % save_every == 0:
                u = irfft(v, grid.n)
                out[:, s // save_every] = u
                bad = ~np.all(np.isfinite(u), axis=1) & (diverged < 0)
                diverged[bad] = s
                if np.any(bad):
                    v[bad] = 0.0
    return out, diverged


def burgers_operators(grid, epsilon, mu):
    return -mu * grid.wavenumbers**2, _quadratic_flux(grid, -epsilon)


def ks_operators(grid):
    k = grid.wavenumbers
    return k**2 - k**4, _quadratic_flux(grid, -1.0)


def _single(u0, grid, ops, dt_solver, steps, save_every):
    u0 = np.asarray(u0, dtype=float)
    if u0.ndim != 1:
        raise ValueError("expected a single state of shape (n,); use integrate() for batches")
    states, diverged = integrate(u0, grid, *ops, dt_solver, steps, save_every)
    if diverged[0] >= 0:
        raise SolverDivergence(f"solver produced a non-finite state at step {diverged[0]}", step=int(diverged[0]))
    return Trajectory(grid, dt_solver * save_every, states[0])


def burgers_solve_numeric(u0, epsilon, mu, dt_solver, steps, grid=None, save_every=1):
    """Pseudospectral ETDRK4 solution of ``u_t + epsilon u u_x = mu u_xx``."""
    grid = _grid_for(u0, grid, BURGERS_DOMAIN)
    return _single(u0, grid, burgers_operators(grid, epsilon, mu), dt_solver, steps, save_every)


def ks_solve(u0, dt_solver, steps, grid=None, save_every=1):
    """Pseudospectral ETDRK4 solution of ``u_t = -u u_x - u_xx - u_xxxx``."""
    grid = _grid_for(u0, grid, KS_DOMAIN)
    return _single(u0, grid, ks_operators(grid), dt_solver, steps, save_every)
