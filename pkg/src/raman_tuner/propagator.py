"""Numerical conditional evolution.

Constant drive is propagated spectrally: the 3x3 non-Hermitian Hamiltonian
is diagonalized once and ``exp(-iHt)`` applied exactly for any ``t``.  Shaped
pulses are integrated with an adaptive embedded Runge-Kutta pair, split at
the kinks of the envelope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .exact import GridPoint, _grid_point_from, detuning_grid
from .model import (
    ConditionalState,
    ModeIndex,
    NumericError,
    ParameterError,
    PulseShape,
    ShapeKind,
    SystemParams,
    require_balanced,
    to_internal,
)

# eigenvector matrices worse conditioned than this are treated as defective;
# propagation error grows like cond * eps
COND_LIMIT = 1e5
ODE_RTOL = 1e-10
ODE_ATOL = 1e-12


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """Conditional Hamiltonian over ``(|1,0>, |0,1>, |2,0>)``."""

    matrix: np.ndarray

    @property
    def hermitian(self) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, rtol=0, atol=0))


def hamiltonian(params: SystemParams) -> EffectiveHamiltonian:
    om, g = params.omega, params.g
    m = np.array(
        [
            [0, 0, om],
            [0, -1j * params.kappa, g],
            [om, g, params.delta - 1j * params.gamma],
        ],
        dtype=complex,
    )
    return EffectiveHamiltonian(m)


class SpectralPropagator:
    """``exp(-iHt)`` for a fixed Hamiltonian, reusable across times.

    Attributes
    ----------
    method : str
        ``"eig"`` when the eigenbasis is well conditioned, otherwise
        ``"expm"`` (scaling and squaring per call).
    residual : float
        Largest eigen-residual ``||Hv - lambda v||`` relative to ``||H||``.
    """

    def __init__(self, params: SystemParams):
        self.params = params
        self.H = hamiltonian(params).matrix
        self._hnorm = float(np.linalg.norm(self.H, 2)) or 1.0
        lam, vecs = np.linalg.eig(self.H)
        cond = np.linalg.cond(vecs)
        self.residual = float(
            max(np.linalg.norm(self.H @ vecs[:, j] - lam[j] * vecs[:, j]) / np.linalg.norm(vecs[:, j])
                for j in range(3)) / self._hnorm
        )
        if cond < COND_LIMIT and self.residual <= 1e-12:
            self.method = "eig"
            self._lam = lam
            self._vecs = vecs
            self._lu = scipy.linalg.lu_factor(vecs)
        else:
            self.method = "expm"
        self.condition = float(cond)

    def apply(self, t, initial=None) -> np.ndarray:
        """State vector(s) at time(s) ``t``; shape ``(3,)`` or ``(len(t), 3)``."""
        psi0 = np.array([1, 0, 0], dtype=complex) if initial is None else _as_vector(initial)
        ts = np.asarray(t, dtype=float)
        if np.any(ts < 0):
            raise ParameterError("evolution time must be non-negative")
        if self.method == "eig":
            coeff = scipy.linalg.lu_solve(self._lu, psi0)
            phases = np.exp(-1j * np.multiply.outer(ts, self._lam))
            out = (phases * coeff) @ self._vecs.T
        else:
            flat = [scipy.linalg.expm(-1j * self.H * tt) @ psi0 for tt in np.atleast_1d(ts)]
            out = np.array(flat).reshape(ts.shape + (3,))
        if ts.ndim == 0:
            out = np.where(ts == 0, psi0, out)
        else:
            out[ts == 0] = psi0
        return out

    def rate(self, psi: np.ndarray) -> np.ndarray:
        """``d psi / dt = -i H psi``."""
        return -1j * (psi @ self.H.T)

    def state(self, t: float, initial=None) -> ConditionalState:
        return ConditionalState.from_vector(self.apply(t, initial))


def _as_vector(initial) -> np.ndarray:
    if isinstance(initial, ConditionalState):
        return initial.vector
    return np.asarray(initial, dtype=complex).reshape(3)


def evolve_numeric(params: SystemParams, t: float, initial=None) -> ConditionalState:
    """Unnormalized ``exp(-iHt)`` applied to ``initial`` (default ``|1,0>``)."""
    return SpectralPropagator(params).state(t, initial)


@dataclass(frozen=True)
class Trajectory:
    """Sampled conditional evolution; ``states`` has shape ``(len(times), 3)``."""

    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.times.ndim != 1 or self.states.shape != (len(self.times), 3):
            raise ParameterError("trajectory times and states are inconsistent")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ParameterError("trajectory times must be strictly increasing")

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    @property
    def final(self) -> ConditionalState:
        return ConditionalState.from_vector(self.states[-1])

    def state(self, i: int) -> ConditionalState:
        return ConditionalState.from_vector(self.states[i])


def trajectory_numeric(params: SystemParams, times, initial=None) -> Trajectory:
    times = np.asarray(times, dtype=float)
    prop = SpectralPropagator(params)
    return Trajectory(times, prop.apply(times, initial), {"method": prop.method})


# --- pulse shapes -----------------------------------------------------------


def _breakpoints(shape: PulseShape, t_p: float) -> list:
    pts = [0.0, t_p]
    if shape.kind is ShapeKind.Trapezium:
        pts[1:1] = [shape.rise_frac * t_p, (1 - shape.fall_frac) * t_p]
    return sorted(set(pts))


def _check_window(t, t_p):
    if not t_p > 0:
        raise ParameterError(f"pulse duration must be positive, got {t_p!r}")
    ts = np.asarray(t, dtype=float)
    slack = 1e-12 * t_p
    if np.any(ts < -slack) or np.any(ts > t_p + slack):
        raise ParameterError(f"time outside pulse window [0, {t_p}]")
    return np.clip(ts, 0.0, t_p)


def pulse_value(shape: PulseShape, t, t_p: float):
    """Envelope ``F(t)`` normalized to the area of a unit rectangle."""
    ts = _check_window(t, t_p)
    if shape.kind is ShapeKind.Rectangular:
        out = np.ones_like(ts)
    elif shape.kind is ShapeKind.SineSquare:
        out = 2 * np.sin(np.pi * ts / t_p) ** 2
    else:
        s = shape.plateau
        tr, tf = shape.rise_frac * t_p, shape.fall_frac * t_p
        out = np.full(ts.shape, s)
        rising, falling = ts < tr, ts > t_p - tf
        out[rising] = s * ts[rising] / tr
        out[falling] = s * (t_p - ts[falling]) / tf
    return float(out) if out.ndim == 0 else out


def pulse_area(shape: PulseShape, t, t_p: float):
    """Closed-form ``int_0^t F(t') dt'``."""
    ts = _check_window(t, t_p)
    if shape.kind is ShapeKind.Rectangular:
        out = ts.copy()
    elif shape.kind is ShapeKind.SineSquare:
        out = ts - t_p / (2 * np.pi) * np.sin(2 * np.pi * ts / t_p)
    else:
        s = shape.plateau
        tr, tf = shape.rise_frac * t_p, shape.fall_frac * t_p
        t_fall = t_p - tf
        rise = s * np.minimum(ts, tr) ** 2 / (2 * tr) if tr > 0 else np.zeros_like(ts)
        flat = s * np.clip(ts - tr, 0, t_fall - tr)
        if tf > 0:
            u = np.clip(ts - t_fall, 0, tf)  # time spent in the fall segment
            fall = s * (u - u * u / (2 * tf))
        else:
            fall = np.zeros_like(ts)
        out = rise + flat + fall
    return float(out) if out.ndim == 0 else out


def pulse_mean_square(shape: PulseShape) -> float:
    """Time average of ``F^2`` over the pulse."""
    if shape.kind is ShapeKind.Rectangular:
        return 1.0
    if shape.kind is ShapeKind.SineSquare:
        return 1.5
    s = shape.plateau
    return s * (4 - s) / 3


def pulse_seed_time(params: SystemParams, mode: ModeIndex, shape: PulseShape) -> float:
    """Operation time estimated with the mean-square-averaged Rabi frequency."""
    p = to_internal(params)
    rabi_eff = math.sqrt(p.delta**2 + 2 * pulse_mean_square(shape))
    return mode.l * math.pi / (rabi_eff - abs(p.delta))


def pulse_grid_point(mode: ModeIndex, shape: PulseShape) -> GridPoint:
    """Grid point with ``Omega'`` replaced by its pulse-averaged value."""
    x = detuning_grid(mode)
    theta = math.sqrt(x * x + 2 * pulse_mean_square(shape))
    if shape.kind is ShapeKind.Rectangular:
        return _grid_point_from(mode, x, theta)
    op_time = mode.l * math.pi / (theta - x)
    return GridPoint(
        mode=mode,
        detuning_abs=x,
        theta=theta,
        op_time=op_time,
        slow=0.5 * (theta - x),
        fast=0.5 * (theta + x),
        period_slow=4 * op_time / mode.l,
        period_fast=op_time / mode.k,
    )


def evolve_pulsed(
    params: SystemParams,
    shape: PulseShape,
    t_p: float,
    grid,
    initial=None,
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
) -> Trajectory:
    """Integrate the amplitude equations with both couplings scaled by ``F(t)``.

    ``params`` may be in any units; integration runs in ``2g = 1`` units and
    ``grid`` and ``t_p`` are taken in those units.
    """
    require_balanced(params)
    p = to_internal(params)
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    _check_window(grid, t_p)
    if len(grid) > 1 and not np.all(np.diff(grid) > 0):
        raise ParameterError("output grid must be strictly increasing")
    psi = np.array([1, 0, 0], dtype=complex) if initial is None else _as_vector(initial).copy()

    couple = -1j * p.g * np.array([[0, 0, 1], [0, 0, 1], [1, 1, 0]], dtype=complex)
    drift = np.diag([0, -p.kappa, -p.gamma - 1j * p.delta]).astype(complex)

    out = np.empty((len(grid), 3), dtype=complex)
    filled = np.zeros(len(grid), dtype=bool)
    at_start = grid <= 0
    out[at_start] = psi
    filled |= at_start
    bps = _breakpoints(shape, t_p)
    nfev = 0
    for lo, hi in zip(bps[:-1], bps[1:]):
        if grid[-1] <= lo:
            break
        sel = (grid > lo) & (grid <= hi)
        # F is smooth on the open segment; evaluate the matching branch only
        env = _segment_envelope(shape, t_p, 0.5 * (lo + hi))

        def rhs(t, y, env=env):
            return (env(t) * couple + drift) @ y

        t_eval = np.union1d(grid[sel], [hi])
        sol = solve_ivp(rhs, (lo, hi), psi, method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol)
        if sol.status != 0:
            raise NumericError(f"pulse integration failed: {sol.message}")
        nfev += sol.nfev
        out[sel] = sol.y.T[np.searchsorted(t_eval, grid[sel])]
        filled |= sel
        psi = sol.y[:, -1]
    if not filled.all():
        raise NumericError("output grid not covered by integration")
    return Trajectory(grid, out, {"nfev": nfev, "shape": shape.kind.value, "t_p": t_p})


def _segment_envelope(shape: PulseShape, t_p: float, mid: float):
    if shape.kind is ShapeKind.Rectangular:
        return lambda t: 1.0
    if shape.kind is ShapeKind.SineSquare:
        w = math.pi / t_p
        return lambda t: 2 * math.sin(w * t) ** 2
    s = shape.plateau
    tr, tf = shape.rise_frac * t_p, shape.fall_frac * t_p
    if mid < tr:
        return lambda t: s * t / tr
    if mid > t_p - tf:
        return lambda t: s * (t_p - t) / tf
    return lambda t: s


def resonant_oracle(shape: PulseShape, t: float, t_p: float, params: SystemParams | None = None) -> ConditionalState:
    """Closed-form undamped resonant state after area ``int_0^t F``."""
    if params is not None:
        if params.delta != 0 or not params.lossless:
            raise ParameterError("resonant oracle needs delta = kappa = gamma = 0")
        require_balanced(params)
    phase = pulse_area(shape, t, t_p) / math.sqrt(2)
    fp, fm = math.cos(phase), -1j * math.sin(phase)
    return ConditionalState(0.5 * (1 + fp) + 0j, 0.5 * (-1 + fp) + 0j, fm / math.sqrt(2), True)
