"""Higher-order corrections to the packet profile and their assembly.

Each correction order solves a linear equation driven by the orders below
it: the homogeneous part is the same operator that propagates the
phase-absorbed profile, and the source terms are accumulated with a
midpoint-rule Duhamel step (one fixed-point refinement handles the term
that couples a correction back into its own source).  The correction
equations are free of the semiclassical parameter; it enters only when the
expansion is assembled.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable, Optional

import numpy as np

from ._stepping import time_nodes
from .classical import Trajectory
from .errors import NumericalError
from .grids import (
    RESCALED,
    WaveFunction,
    WaveSeries,
    apply_radial_rfft,
    radial_kernel_rfft,
)
from .potentials import ExternalPotential, PairPotential

__all__ = [
    "CorrectionSet",
    "evolve_correction_1",
    "evolve_correction_2",
    "assemble_expansion",
]

SourceFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


def separation_power_form(mu: np.ndarray, weight: np.ndarray, dx: float,
                          power: int) -> np.ndarray:
    """integral of (mu - eta)^power * weight(eta) d(eta) for even power,
    expanded binomially into plain moments of the (possibly signed) weight."""
    out = np.zeros_like(mu)
    for j in range(power + 1):
        moment = float(np.sum(weight * mu ** j) * dx)
        out += comb(power, j) * (-1.0) ** j * mu ** (power - j) * moment
    return out


def _coverage_check(series: WaveSeries, T: float, dt: float, who: str) -> None:
    if series.times[-1] < T - 1e-9:
        raise ValueError(f"{who} does not cover [0, {T}]")
    spacing = float(np.max(np.diff(series.times)))
    if spacing > dt * (1.0 + 1e-9):
        raise ValueError(
            f"{who} node spacing {spacing:g} is coarser than the correction "
            f"step {dt:g}"
        )


def _drive(a0_seq: WaveSeries, kappa: float, hess_fn: Callable[[float], float],
           source_fn: SourceFn, T: float, dt: float, *,
           picard: int = 1, label: str = "correction") -> WaveSeries:
    """Propagate a zero-initial-data linear problem with sources.

    Each step applies half of the homogeneous split propagator, deposits
    -i*dt*S evaluated at the midpoint (with `picard` fixed-point updates of
    the state entering S), then the second half.
    """
    grid = a0_seq.grid
    mu = grid.points
    x2_half = 0.5 * mu ** 2
    k2 = grid.wavenumbers ** 2
    khat = radial_kernel_rfft(lambda r: r * r, grid)
    half_kappa = 0.5 * kappa

    def quad_potential(a0_samples: np.ndarray, t: float) -> np.ndarray:
        density = a0_samples.real ** 2 + a0_samples.imag ** 2
        return (half_kappa * apply_radial_rfft(khat, density, grid)
                + hess_fn(t) * x2_half)

    times = time_nodes(T, dt)
    u = np.zeros(grid.n, dtype=np.complex128)
    data = np.empty((times.size, grid.n), dtype=np.complex128)
    data[0] = u

    h_prev = None
    kin_half = None
    v_left = quad_potential(a0_seq.interp_samples(times[0]), times[0])
    for j in range(times.size - 1):
        t0, t1 = times[j], times[j + 1]
        h = t1 - t0
        tm = t0 + 0.5 * h
        if h != h_prev:
            kin_half = np.exp(-0.25j * h * k2)  # kinetic phase over h/2
            h_prev = h
        a0_mid = a0_seq.interp_samples(tm)
        v_mid = quad_potential(a0_mid, tm)
        v_right = quad_potential(a0_seq.interp_samples(t1), t1)

        # first half of the homogeneous propagator: [t0, t0 + h/2]
        u = u * np.exp(-0.25j * h * v_left)
        u = np.fft.ifft(np.fft.fft(u) * kin_half)
        u = u * np.exp(-0.25j * h * v_mid)
        # midpoint Duhamel deposit
        s = source_fn(tm, u, a0_mid)
        for _ in range(picard):
            s = source_fn(tm, u - 0.5j * h * s, a0_mid)
        u = u - 1j * h * s
        # second half: [t0 + h/2, t1]
        u = u * np.exp(-0.25j * h * v_mid)
        u = np.fft.ifft(np.fft.fft(u) * kin_half)
        u = u * np.exp(-0.25j * h * v_right)

        if not np.all(np.isfinite(u)):
            raise NumericalError(f"{label}: non-finite samples at t={t1:.6g}")
        data[j + 1] = u
        v_left = v_right

    return WaveSeries(times, grid, RESCALED, data)


def evolve_correction_1(a0_seq: WaveSeries, phi: PairPotential,
                        U: ExternalPotential, trajectory: Trajectory,
                        T: float, dt: float) -> WaveSeries:
    """First correction: driven by the cubic term of the external potential
    along the trajectory, plus the quadratic interaction of the correction
    with the base profile (linear in the unknown, refreshed each step)."""
    _coverage_check(a0_seq, T, dt, "base profile sequence")
    grid = a0_seq.grid
    mu = grid.points
    dx = grid.dx
    mu3 = mu ** 3
    kappa = phi.second_deriv_at_0
    half_kappa = 0.5 * kappa

    def hess_fn(t: float) -> float:
        return float(U.hess(trajectory.q_at(t), t))

    def w3(t: float) -> float:
        return float(U.third(trajectory.q_at(t), t)) / 6.0

    def source(t: float, u: np.ndarray, a0: np.ndarray) -> np.ndarray:
        cross = 2.0 * (a0.real * u.real + a0.imag * u.imag)
        coupled = half_kappa * separation_power_form(mu, cross, dx, 2) * a0
        return coupled + w3(t) * mu3 * a0

    return _drive(a0_seq, kappa, hess_fn, source, T, dt, label="first correction")


def evolve_correction_2(a0_seq: WaveSeries, a1_seq: WaveSeries,
                        phi: PairPotential, U: ExternalPotential,
                        trajectory: Trajectory, T: float, dt: float) -> WaveSeries:
    """Second correction: quartic interaction and external terms against the
    base profile, quadratic terms against the first correction, and the
    coupled term in the unknown itself."""
    _coverage_check(a0_seq, T, dt, "base profile sequence")
    _coverage_check(a1_seq, T, dt, "first-correction sequence")
    grid = a0_seq.grid
    mu = grid.points
    dx = grid.dx
    mu3 = mu ** 3
    mu4 = mu ** 4
    kappa = phi.second_deriv_at_0
    half_kappa = 0.5 * kappa
    quartic_coeff = phi.fourth_deriv_at_0 / 24.0

    def hess_fn(t: float) -> float:
        return float(U.hess(trajectory.q_at(t), t))

    def source(t: float, u: np.ndarray, a0: np.ndarray) -> np.ndarray:
        q = trajectory.q_at(t)
        a1 = a1_seq.interp_samples(t)
        dens0 = a0.real ** 2 + a0.imag ** 2
        dens1 = a1.real ** 2 + a1.imag ** 2
        cross02 = 2.0 * (a0.real * u.real + a0.imag * u.imag)
        cross01 = 2.0 * (a0.real * a1.real + a0.imag * a1.imag)
        s = half_kappa * separation_power_form(mu, cross02, dx, 2) * a0
        s = s + (float(U.fourth(q, t)) / 24.0) * mu4 * a0
        s = s + quartic_coeff * separation_power_form(mu, dens0, dx, 4) * a0
        s = s + half_kappa * separation_power_form(mu, dens1, dx, 2) * a0
        s = s + half_kappa * separation_power_form(mu, cross01, dx, 2) * a1
        s = s + (float(U.third(q, t)) / 6.0) * mu3 * a1
        return s

    return _drive(a0_seq, kappa, hess_fn, source, T, dt, label="second correction")


@dataclass(frozen=True, eq=False)
class CorrectionSet:
    """Correction-order histories on a shared grid and shared nodes;
    index 0 is the base (phase-absorbed) profile."""

    orders: tuple

    def __post_init__(self):
        if not self.orders:
            raise ValueError("at least the base order is required")
        object.__setattr__(self, "orders", tuple(self.orders))


def assemble_expansion(cset: CorrectionSet, K: int, epsilon: float,
                       t: Optional[float] = None) -> WaveFunction:
    """Sum of eps^(k/2) * order_k at time t (final time by default)."""
    if K < 0 or K > 2:
        raise ValueError("expansion order K must be 0, 1, or 2")
    if K >= len(cset.orders):
        raise ValueError(
            f"missing correction orders: K={K} requested but only "
            f"{len(cset.orders) - 1} available"
        )
    base = cset.orders[0]
    grid = base.grid
    total = np.zeros(grid.n, dtype=np.complex128)
    for k in range(K + 1):
        series = cset.orders[k]
        wf = series.final if t is None else series.at_time(t)
        total = total + epsilon ** (k / 2.0) * wf.samples
    return WaveFunction(grid, total, RESCALED)
