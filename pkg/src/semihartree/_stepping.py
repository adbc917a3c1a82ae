"""Shared second-order split-step engine.

One Strang step over [t, t+h] applies a half potential phase sampled at t,
an exact spectral kinetic step, and a half potential phase sampled at t+h.
Self-consistent potentials are recomputed from the evolved density before
the trailing half phase; because the potential phase leaves |psi| unchanged,
that same evaluation serves as the leading half of the next step, so each
step costs one potential evaluation and one FFT round trip.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NumericalError
from .grids import Grid, boundary_mass

__all__ = ["time_nodes", "split_step_evolve"]


def time_nodes(T: float, dt: float) -> np.ndarray:
    """Node times 0, dt, 2dt, ..., T; the final step is shortened when dt
    does not divide T exactly."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    if T == 0:
        return np.array([0.0])
    n_full = int(np.floor(T / dt + 1e-9))
    times = dt * np.arange(n_full + 1)
    if T - times[-1] > 1e-9 * max(1.0, T):
        times = np.append(times, T)
    else:
        times[-1] = T
    return times


def _resolve_store(times: np.ndarray, store_times: Optional[Sequence[float]]) -> np.ndarray:
    if store_times is None:
        return np.arange(times.size)
    idx = sorted({int(np.argmin(np.abs(times - t))) for t in store_times})
    if times.size - 1 not in idx:
        idx.append(times.size - 1)
    return np.asarray(idx, dtype=int)


def split_step_evolve(
    samples0: np.ndarray,
    grid: Grid,
    T: float,
    dt: float,
    potential: Callable[[float, np.ndarray], np.ndarray],
    kinetic_scale: float = 1.0,
    store_times: Optional[Sequence[float]] = None,
    guard_cells: int = 12,
    guard_mass: float = 1e-8,
    label: str = "evolution",
):
    """Evolve i d(psi)/dt = kinetic_scale*(-Lap/2) psi + potential(t, psi) psi.

    `potential` must return a real array; it is evaluated once per step on
    the post-kinetic samples.  Returns (times, stored_times, stored_data,
    norm_drift) where norm_drift is the largest deviation of the L^2 norm
    from its initial value over every step, not just stored ones.

    Raises NumericalError when samples go non-finite or when more than
    `guard_mass` probability sits within `guard_cells` cells of a domain
    edge (the packet is escaping the window).
    """
    times = time_nodes(T, dt)
    store_idx = _resolve_store(times, store_times)
    store_pos = {int(j): pos for pos, j in enumerate(store_idx)}

    psi = np.array(samples0, dtype=np.complex128)
    dx = grid.dx
    k2 = grid.wavenumbers ** 2
    norm0 = np.sqrt(np.sum(psi.real ** 2 + psi.imag ** 2) * dx)
    drift = 0.0

    data = np.empty((store_idx.size, grid.n), dtype=np.complex128)
    if 0 in store_pos:
        data[store_pos[0]] = psi

    def check(t: float) -> None:
        if not np.all(np.isfinite(psi)):
            raise NumericalError(f"{label}: non-finite samples at t={t:.6g}")
        bm = boundary_mass(psi, grid, guard_cells)
        if bm > guard_mass:
            nrm2 = np.sum(psi.real ** 2 + psi.imag ** 2) * dx
            raise NumericalError(
                f"{label}: boundary mass fraction {bm / nrm2:.3e} at t={t:.6g} "
                f"exceeds guard {guard_mass:.1e}"
            )

    check(0.0)
    v = potential(times[0], psi)
    h_prev = None
    kin = None
    for j in range(times.size - 1):
        h = times[j + 1] - times[j]
        if h != h_prev:
            kin = np.exp(-0.5j * h * kinetic_scale * k2)
            h_prev = h
        psi = psi * np.exp(-0.5j * h * v)
        psi = np.fft.ifft(np.fft.fft(psi) * kin)
        v = potential(times[j + 1], psi)
        psi = psi * np.exp(-0.5j * h * v)

        check(times[j + 1])
        nrm = np.sqrt(np.sum(psi.real ** 2 + psi.imag ** 2) * dx)
        drift = max(drift, abs(nrm - norm0))
        if j + 1 in store_pos:
            data[store_pos[j + 1]] = psi

    return times, times[store_idx], data, drift
