"""Conditional fidelity and the fine-tuning searches.

All searches are deterministic: candidate times sit on the fast-oscillation
lattice ``n T'`` and every extremum is located by bracketed root finding on
the time derivative of the fidelity.

Detuning tuning aligns a fidelity maximum with the operation time predicted
by the damped analytic formulas, starting from the damping-corrected grid
detuning.  A plain nested maximization is available as ``method="maximize"``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import damped_analytic as da
from .exact import classify, generalized_rabi, grid_point, slow_half_period, target_for
from .model import (
    ConditionalState,
    ModeIndex,
    NumericError,
    OperationKind,
    ParameterError,
    PulseShape,
    SystemParams,
    TuningOutcome,
    epsilon_sign,
    require_balanced,
    to_internal,
)
from .propagator import SpectralPropagator, evolve_pulsed, pulse_seed_time

# above this damping parameter the linearized operation times are replaced
# by the exact eliminated-model times
LINEAR_ETA_LIMIT = 0.1
_FD_STEP = 1e-5


@dataclass(frozen=True)
class SearchConfig:
    window_periods: int = 5
    refine_tol: float = 1e-9
    detuning_span: float = 0.1
    max_evals: int = 20000
    scan_points: int = 201
    scale_range: tuple = (0.8, 1.5)

    def __post_init__(self):
        if self.window_periods <= 0 or self.refine_tol <= 0 or self.detuning_span <= 0:
            raise ParameterError("search settings must be positive")
        if self.max_evals < 50:
            raise ParameterError("max_evals must be at least 50")
        if self.scan_points < 3:
            raise ParameterError("scan_points must be at least 3")
        lo, hi = self.scale_range
        if not 0 < lo < hi:
            raise ParameterError("scale_range must be an increasing positive pair")


def normalize(state: ConditionalState) -> ConditionalState:
    n = state.norm
    if not n > 1e-150 or not math.isfinite(n):
        raise NumericError("cannot normalize a fully decayed state")
    v = state.vector / n
    return ConditionalState(complex(v[0]), complex(v[1]), complex(v[2]), True)


def overlap_fidelity(psi: np.ndarray, target: np.ndarray) -> float:
    nsq = float(np.vdot(psi, psi).real)
    if not nsq > 1e-300:
        raise NumericError("cannot score a fully decayed state")
    return float(min(1.0, abs(np.vdot(target, psi)) ** 2 / nsq))


def fidelity(state: ConditionalState, target: ConditionalState) -> float:
    """``|<target|psi>|^2`` with ``psi`` renormalized; ``target`` must be normalized."""
    if abs(target.norm_sq - 1) > 1e-10:
        raise ParameterError("fidelity target must be normalized")
    return overlap_fidelity(state.vector, target.vector)


class _Counter:
    def __init__(self, budget: int):
        self.budget = budget
        self.n = 0

    def tick(self, k: int = 1):
        self.n += k
        if self.n > self.budget:
            raise NumericError(f"evaluation budget of {self.budget} exhausted")


class FidelityEngine:
    """Fidelity and its time derivative for constant drive.

    ``engine="numeric"`` uses the spectral propagator with the exact
    derivative ``-iH psi``; ``engine="analytic"`` uses the perturbative
    amplitudes with a central difference.
    """

    def __init__(self, params: SystemParams, target: ConditionalState, engine: str = "numeric",
                 counter: _Counter | None = None):
        if engine not in ("numeric", "analytic"):
            raise ParameterError(f"unknown engine {engine!r}")
        self.params = params
        self.engine = engine
        self.target = target.vector
        self.counter = counter or _Counter(10**9)
        self._prop = SpectralPropagator(params) if engine == "numeric" else None

    def psi(self, t: float) -> np.ndarray:
        self.counter.tick()
        if self._prop is not None:
            return self._prop.apply(t)
        return da.evolve_perturbative(self.params, t).vector

    def fidelity(self, t: float) -> float:
        return overlap_fidelity(self.psi(t), self.target)

    def slope(self, t: float) -> float:
        if self._prop is None:
            return (self.fidelity(t + _FD_STEP) - self.fidelity(t - _FD_STEP)) / (2 * _FD_STEP)
        psi = self.psi(t)
        dpsi = self._prop.rate(psi)
        o = np.vdot(self.target, psi)
        do = np.vdot(self.target, dpsi)
        nsq = np.vdot(psi, psi).real
        dn = 2 * np.vdot(psi, dpsi).real
        return float((2 * (np.conj(o) * do).real * nsq - abs(o) ** 2 * dn) / nsq**2)


def _local_max(eng: FidelityEngine, lo: float, hi: float, tol: float):
    """Interior fidelity maximum in ``[lo, hi]`` or ``None``."""
    s_lo, s_hi = eng.slope(lo), eng.slope(hi)
    if s_lo > 0 > s_hi:
        t = brentq(eng.slope, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
        return t
    res = minimize_scalar(lambda t: -eng.fidelity(t), bounds=(lo, hi), method="bounded",
                          options={"xatol": tol})
    t = float(res.x)
    edge = 1e-3 * (hi - lo)
    if t - lo < edge or hi - t < edge:
        return None
    return t


def _resolve_time_model(time_model: str, eta_grid: float) -> str:
    if time_model == "auto":
        return "linear" if eta_grid < LINEAR_ETA_LIMIT else "full"
    if time_model not in ("linear", "full"):
        raise ParameterError(f"unknown time model {time_model!r}")
    return time_model


def analytic_time(params: SystemParams, mode: ModeIndex, kind: OperationKind, time_model: str = "auto") -> float:
    """Predicted damped operation time at ``params.delta`` (2g units).

    The base is the synchronized time ``l pi / (Omega' - |delta|)`` of the
    current detuning.  The linear model shifts it by the first-order factor
    with ``eta`` fixed at the grid point of ``mode``; the full model uses the
    eliminated-model factor at the current detuning.
    """
    p = to_internal(params)
    eta_grid = p.kappa * grid_point(mode).theta
    model = _resolve_time_model(time_model, eta_grid)
    base = slow_half_period(p, mode.l)
    if model == "linear":
        return base * da.linear_time_factor(kind, mode.l, eta_grid)
    return base * da.full_time_factor(kind, mode.l, da.damped_slow_ratio(p))


def _operation_kind(mode: ModeIndex) -> OperationKind:
    kind = classify(mode)
    if kind is None:
        raise ParameterError(f"mode ({mode.k}, {mode.l}) is not a pi or pi/2 operation")
    return kind


def fine_tuning_time(
    params: SystemParams,
    mode: ModeIndex,
    cfg: SearchConfig = SearchConfig(),
    engine: str = "numeric",
    time_model: str = "auto",
    _counter: _Counter | None = None,
) -> TuningOutcome:
    """Fidelity maximum on the fast-period lattice nearest the analytic time."""
    p = to_internal(params)
    require_balanced(p)
    kind = _operation_kind(mode)
    counter = _counter or _Counter(cfg.max_evals)
    eng = FidelityEngine(p, target_for(p, mode), engine, counter)

    base = slow_half_period(p, mode.l)
    t_est = analytic_time(p, mode, kind, time_model)
    period = 2 * math.pi / generalized_rabi(p)
    n0 = round(base / period)
    # window around the grid time, stretched to reach the estimate if it lies outside
    m_est = round((t_est - base) / period)
    w = cfg.window_periods
    found = []
    for m in range(min(-w, m_est - w), max(w, m_est + w) + 1):
        tc = (n0 + m) * period
        if tc - period / 4 <= 0:
            continue
        t = _local_max(eng, tc - period / 4, tc + period / 4, cfg.refine_tol)
        if t is not None:
            found.append((abs(t - t_est), t, m, tc))
    if not found:
        raise NumericError("no local fidelity maximum in the candidate window")
    # nearest to the estimate, earlier time on ties
    _, t_f, m, tc = min(found, key=lambda x: (round(x[0], 12), x[1]))
    psi = eng.psi(t_f)
    return TuningOutcome(
        time=float(t_f),
        detuning=p.delta,
        fidelity=overlap_fidelity(psi, eng.target),
        norm=float(np.linalg.norm(psi)),
        iterations=counter.n,
        extra={
            "periods_offset": m,
            "lattice_time": tc,
            "lattice_fidelity": eng.fidelity(tc),
            "base_time": base,
            "analytic_time": t_est,
            "period_fast": period,
            "engine": engine,
        },
    )


def optimize_detuning(
    params: SystemParams,
    mode: ModeIndex,
    cfg: SearchConfig = SearchConfig(),
    method: str = "align",
    engine: str = "numeric",
    time_model: str = "auto",
) -> TuningOutcome:
    """Tune the detuning around the damping-corrected grid value.

    ``method="align"`` finds the detuning nearest the seed at which a
    fidelity maximum coincides with the analytic operation time.
    ``method="maximize"`` maximizes the fine-tuned fidelity over the bracket.
    The result never scores below the seed evaluation.
    """
    p = to_internal(params)
    require_balanced(p)
    kind = _operation_kind(mode)
    eps = epsilon_sign(p.delta)
    seed = eps * da.adjusted_detuning(mode, p)
    eta_grid = p.kappa * grid_point(mode).theta
    model = _resolve_time_model(time_model, eta_grid)
    target = target_for(p, mode)
    counter = _Counter(cfg.max_evals)
    lo, hi = sorted((seed * (1 - cfg.detuning_span), seed * (1 + cfg.detuning_span)))

    def engine_at(delta):
        return FidelityEngine(p.with_delta(delta), target, engine, counter)

    def t_op(delta):
        return analytic_time(p.with_delta(delta), mode, kind, model)

    seed_time = t_op(seed)
    seed_fid = engine_at(seed).fidelity(seed_time)

    if method == "align":
        best = _align(engine_at, t_op, lo, hi, seed, cfg)
        if best is None:
            raise NumericError("no aligned fidelity maximum in the detuning bracket")
        delta, t = best, t_op(best)
    elif method == "maximize":
        def score(delta):
            return fine_tuning_time(p.with_delta(delta), mode, cfg, engine, model, counter)

        grid = np.linspace(lo, hi, cfg.scan_points)
        vals = [score(x).fidelity for x in grid]
        i = int(np.argmax(vals))
        res = minimize_scalar(lambda x: -score(x).fidelity,
                              bounds=(grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]),
                              method="bounded", options={"xatol": cfg.refine_tol})
        delta = float(res.x) if -res.fun >= vals[i] else float(grid[i])
        t = score(delta).time
    else:
        raise ParameterError(f"unknown method {method!r}")

    eng = engine_at(delta)
    psi = eng.psi(t)
    fid = overlap_fidelity(psi, eng.target)
    fallback = bool(fid < seed_fid)
    if fallback:
        delta, t = seed, seed_time
        psi = engine_at(seed).psi(t)
        fid = seed_fid
    return TuningOutcome(
        time=float(t),
        detuning=float(delta),
        fidelity=fid,
        norm=float(np.linalg.norm(psi)),
        iterations=counter.n,
        extra={
            "seed_detuning": seed,
            "seed_time": seed_time,
            "seed_fidelity": seed_fid,
            "grid_detuning": eps * grid_point(mode).detuning_abs,
            "time_model": model,
            "method": method,
            "fallback_to_seed": fallback,
        },
    )


def _align(engine_at, t_op, lo, hi, seed, cfg):
    """Root of ``dF/dt`` at ``t_op(delta)`` that is a maximum, nearest ``seed``."""

    def residual(delta):
        return engine_at(delta).slope(t_op(delta))

    def is_max(delta):
        eng = engine_at(delta)
        t = t_op(delta)
        h = 1e-3 * (2 * math.pi / generalized_rabi(eng.params))
        return eng.slope(t - h) > 0 > eng.slope(t + h)

    grid = np.linspace(lo, hi, cfg.scan_points)
    vals = [residual(x) for x in grid]
    roots = []
    for x0, x1, v0, v1 in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if v0 == 0:
            r = x0
        elif v0 * v1 < 0:
            r = brentq(residual, x0, x1, xtol=cfg.refine_tol)
        else:
            continue
        if is_max(r):
            roots.append(r)
    if not roots:
        return None
    return min(roots, key=lambda r: (abs(r - seed), r))


def pulse_fidelity(params: SystemParams, mode: ModeIndex, shape: PulseShape, t_p: float,
                   rtol: float = 1e-10, atol: float = 1e-12) -> tuple:
    """Fidelity and norm of the state at the end of a shaped pulse."""
    p = to_internal(params)
    traj = evolve_pulsed(p, shape, t_p, [t_p], rtol=rtol, atol=atol)
    psi = traj.states[-1]
    return overlap_fidelity(psi, target_for(p, mode).vector), float(np.linalg.norm(psi))


def optimize_pulse_duration(
    params: SystemParams,
    mode: ModeIndex,
    shape: PulseShape,
    cfg: SearchConfig = SearchConfig(),
) -> TuningOutcome:
    """Best pulse duration as a multiple of the mean-square seed time."""
    p = to_internal(params)
    require_balanced(p)
    _operation_kind(mode)
    seed = pulse_seed_time(p, mode, shape)
    counter = _Counter(cfg.max_evals)
    lo, hi = cfg.scale_range

    def score(scale, coarse=False):
        counter.tick()
        tol = (1e-8, 1e-10) if coarse else (1e-10, 1e-12)
        return pulse_fidelity(p, mode, shape, scale * seed, *tol)[0]

    # resolve the fast oscillation, whose period is about seed/k
    n = max(cfg.scan_points // 4, int(math.ceil((hi - lo) * 8 * mode.k)) + 1)
    grid = np.linspace(lo, hi, n)
    vals = np.array([score(s, coarse=True) for s in grid])
    order = np.argsort(vals)[::-1][:3]
    step = grid[1] - grid[0]
    best = None
    for i in sorted(order):
        res = minimize_scalar(lambda s: -score(s), bounds=(max(lo, grid[i] - step), min(hi, grid[i] + step)),
                              method="bounded", options={"xatol": 1e-7})
        cand = (-res.fun, float(res.x))
        if best is None or cand[0] > best[0]:
            best = cand
    fid, scale = best
    _, norm = pulse_fidelity(p, mode, shape, scale * seed)
    return TuningOutcome(
        time=scale * seed,
        detuning=p.delta,
        fidelity=fid,
        norm=norm,
        iterations=counter.n,
        extra={
            "scale": scale,
            "seed_time": seed,
            "seed_fidelity": score(1.0),
            "shape": shape.kind.value,
        },
    )
