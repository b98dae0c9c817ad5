"""Closed-form lossless dynamics and the synchronized detuning grid.

Without damping the conditional Hamiltonian is real symmetric, and the
evolution of ``|1,0>`` is a superposition of three dressed states with
frequencies ``0`` and ``(delta +- Omega')/2``.  Choosing the detuning so
that the fast and slow oscillations are commensurate makes the excited
amplitude vanish exactly at the end of a pi or pi/2 operation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ConditionalState,
    ModeIndex,
    OperationKind,
    ParameterError,
    SystemParams,
    epsilon_sign,
    require_lossless,
)


def generalized_rabi(params: SystemParams, n: int = 0) -> float:
    """``Omega' = sqrt(delta^2 + 4 g^2 (n+1) + 4 omega^2)``."""
    return float(np.sqrt(params.delta**2 + 4 * params.g**2 * (n + 1) + 4 * params.omega**2))


def lossless_hamiltonian(params: SystemParams, n: int = 0) -> np.ndarray:
    """Hamiltonian over ``(|1,n>, |0,n+1>, |2,n>)`` without damping."""
    gn = params.g * np.sqrt(n + 1)
    om = params.omega
    return np.array([[0, 0, om], [0, 0, gn], [om, gn, params.delta]], dtype=float)


@dataclass(frozen=True)
class DressedSet:
    """Dressed energies ``(w0, w+, w-)`` with matching eigenvectors.

    ``states`` rows are ``Psi_0, Psi_+, Psi_-`` over ``(|1,n>, |0,n+1>, |2,n>)``;
    ``angles`` is ``(sin theta, cos theta, sin phi, cos phi)``.
    """

    energies: tuple
    rabi: float
    states: np.ndarray
    angles: tuple


def dressed(params: SystemParams, n: int = 0) -> DressedSet:
    require_lossless(params)
    if n < 0:
        raise ParameterError(f"photon number must be non-negative, got {n}")
    rabi = generalized_rabi(params, n)
    gn = params.g * np.sqrt(n + 1)
    # equivalent to g~/sqrt(1+g~^2) and 1/sqrt(1+g~^2), but finite at omega = 0
    lam = np.hypot(gn, params.omega)
    sin_t, cos_t = gn / lam, params.omega / lam
    sin_p = np.sqrt((rabi + params.delta) / (2 * rabi))
    cos_p = np.sqrt((rabi - params.delta) / (2 * rabi))

    psi0 = np.array([-sin_t, cos_t, 0.0])
    psim = np.array([-sin_p * cos_t, -sin_p * sin_t, cos_p])
    psip = np.array([cos_p * cos_t, cos_p * sin_t, sin_p])
    w_plus = 0.5 * (params.delta + rabi)
    w_minus = 0.5 * (params.delta - rabi)
    return DressedSet(
        energies=(0.0, w_plus, w_minus),
        rabi=rabi,
        states=np.vstack([psi0, psip, psim]).astype(complex),
        angles=(sin_t, cos_t, sin_p, cos_p),
    )


def f_pm(params: SystemParams, t):
    """The two interference factors ``f+`` and ``f-`` at time(s) ``t``.

    Written with half angles so the zeros of ``f-`` at ``Omega' t = 2 pi m``
    stay at round-off level for large ``t``.
    """
    rabi = generalized_rabi(params)
    t = np.asarray(t, dtype=float)
    phase = np.exp(-0.5j * params.delta * t)
    half = 0.5 * rabi * t
    return phase * np.cos(half), -1j * phase * np.sin(half)


def evolve_lossless(params: SystemParams, t: float) -> ConditionalState:
    """Exact amplitudes of ``exp(-iHt)|1,0>`` for arbitrary ``g`` and ``omega``."""
    require_lossless(params)
    rabi = generalized_rabi(params)
    fp, fm = f_pm(params, t)
    lam_sq = params.g**2 + params.omega**2
    cos2 = params.omega**2 / lam_sq
    sincos = params.g * params.omega / lam_sq
    gt2 = params.g**2 / lam_sq  # cos^2(theta) * g~^2
    d = params.delta / rabi
    a = gt2 + cos2 * (fp - d * fm)
    b = sincos * (-1 + fp - d * fm)
    c = 2 * params.omega / rabi * fm
    return ConditionalState(complex(a), complex(b), complex(c), True)


def detuning_grid(mode: ModeIndex) -> float:
    """``|Delta_{k,l}|`` in units of ``2g`` (with ``omega = g``, vacuum cavity)."""
    x = 2 * mode.k / mode.l - 1
    return float(np.sqrt(2 * x * x / (2 * x + 1)))


@dataclass(frozen=True)
class GridPoint:
    """Synchronized operation point; all quantities in ``2g`` units.

    ``theta`` is ``Omega'/(2g)``, ``slow``/``fast`` are the frequencies
    ``(Omega' -+ |delta|)/2`` and ``period_slow``/``period_fast`` the
    corresponding periods of the populations.
    """

    mode: ModeIndex
    detuning_abs: float
    theta: float
    op_time: float
    slow: float
    fast: float
    period_slow: float
    period_fast: float

    def params(self, kappa=0.0, gamma=0.0, eps: int = 1) -> SystemParams:
        return SystemParams.internal(delta=eps * self.detuning_abs, kappa=kappa, gamma=gamma)


def _grid_point_from(mode: ModeIndex, detuning_abs: float, theta: float) -> GridPoint:
    op_time = 2 * np.pi * mode.k / theta
    slow = 0.5 * (theta - detuning_abs)
    return GridPoint(
        mode=mode,
        detuning_abs=detuning_abs,
        theta=theta,
        op_time=op_time,
        slow=slow,
        fast=0.5 * (theta + detuning_abs),
        period_slow=4 * op_time / mode.l,
        period_fast=op_time / mode.k,
    )


def grid_point(mode: ModeIndex) -> GridPoint:
    x = detuning_grid(mode)
    return _grid_point_from(mode, x, float(np.sqrt(x * x + 2)))


def slow_half_period(params: SystemParams, l: int) -> float:
    """``l pi / (Omega' - |delta|)``: the synchronized operation time for ``l``.

    On the grid this equals ``2 pi k / Omega'``; off the grid it is the time
    at which the slow Raman rotation completes ``l`` quarter periods.
    """
    rabi = generalized_rabi(params)
    return l * np.pi / (rabi - abs(params.delta))


def classify(mode: ModeIndex) -> OperationKind | None:
    if mode.l % 2 == 1:
        return OperationKind.PiHalf
    if (mode.l // 2) % 2 == 1:
        return OperationKind.Pi
    return None


def target_state(mode: ModeIndex, eps: int = 1) -> ConditionalState:
    """Ideal state reached at the synchronized time (``c = 0``)."""
    if eps not in (1, -1):
        raise ParameterError(f"eps must be +1 or -1, got {eps!r}")
    z = (1, 1j * eps, -1, -1j * eps)[mode.l % 4]  # (i eps)^l, exact
    return ConditionalState(0.5 * (1 + z), -0.5 * (1 - z), 0j, True)


def target_for(params: SystemParams, mode: ModeIndex) -> ConditionalState:
    return target_state(mode, epsilon_sign(params.delta))
