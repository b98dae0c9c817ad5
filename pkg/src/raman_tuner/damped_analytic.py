"""Approximate damped solutions.

Two families are provided:

* first-order perturbation theory in ``kappa`` and ``gamma`` around the
  dressed states, valid for any detuning while ``eta`` and ``xi`` stay small;
* adiabatic elimination of the excited level (large detuning), either
  linearized in ``kappa`` or from the exact 2x2 problem.

The two families define ``eta`` differently.  The perturbative expansion
uses ``eta = kappa Theta^2 / Omega'``; the linearized adiabatic amplitudes
use ``eta = kappa |delta| / (4 g^2)``.  The operation-time formulas accept
either through ``eta_form``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exact import classify, generalized_rabi, grid_point, slow_half_period
from .model import (
    ConditionalState,
    ModeIndex,
    OperationKind,
    ParameterError,
    SystemParams,
    epsilon_sign,
    require_balanced,
    to_internal,
)

VALIDITY_LIMIT = 0.2


@dataclass(frozen=True)
class DerivedScales:
    theta: float
    d: float
    kappa_bar: float
    gamma_bar: float
    eta: float
    xi: float
    rates: tuple  # (kappa_0, kappa_+, kappa_-, gamma_+, gamma_-)
    valid: bool


@dataclass(frozen=True)
class ComplexEnergies:
    w0: complex
    wp: complex
    wm: complex


def scales(params: SystemParams) -> DerivedScales:
    require_balanced(params)
    rabi = generalized_rabi(params)
    theta = rabi / (2 * params.g)
    d = params.delta / rabi
    kappa_bar = params.kappa / rabi
    gamma_bar = params.gamma / rabi
    eta = kappa_bar * theta**2
    xi = gamma_bar / theta**2
    k, gm = params.kappa, params.gamma
    rates = (k / 2, k / 4 * (1 - d), k / 4 * (1 + d), gm / 2 * (1 + d), gm / 2 * (1 - d))
    return DerivedScales(
        theta=theta,
        d=d,
        kappa_bar=kappa_bar,
        gamma_bar=gamma_bar,
        eta=eta,
        xi=xi,
        rates=rates,
        valid=eta < VALIDITY_LIMIT and xi < VALIDITY_LIMIT,
    )


def complex_energies(params: SystemParams) -> ComplexEnergies:
    sc = scales(params)
    k0, kp, km, gp, gm = sc.rates
    rabi = generalized_rabi(params)
    return ComplexEnergies(
        w0=complex(0.0, -k0),
        wp=complex(0.5 * (params.delta + rabi), -(kp + gp)),
        wm=complex(0.5 * (params.delta - rabi), -(km + gm)),
    )


def evolve_perturbative(params: SystemParams, t: float) -> ConditionalState:
    """First-order damped amplitudes of ``|1,0>``; the result is unnormalized."""
    sc = scales(params)
    if sc.eta >= 1 or sc.xi >= 1:
        raise ParameterError(
            f"perturbative solution out of range (eta={sc.eta:.3g}, xi={sc.xi:.3g})"
        )
    en = complex_energies(params)
    ep, em = np.exp(-1j * en.wp * t), np.exp(-1j * en.wm * t)
    fp, fm = 0.5 * (ep + em), 0.5 * (ep - em)
    e0 = math.exp(-sc.rates[0] * t)
    d, eta, xi = sc.d, sc.eta, sc.xi
    a = 0.5 * ((1 + 2j * eta * d) * e0 + (1 - 2j * eta * d) * fp - (d - 1j * xi - 1j * eta * (1 + d * d)) * fm)
    b = 0.5 * (-e0 + fp - (d - 1j * xi) * fm)
    c = (
        -0.5j * eta * e0
        + 0.25j * eta * (1 + d * d) * fp
        + (1 - 1j * (0.5 * eta - sc.gamma_bar) * d) * fm
    ) / sc.theta
    return ConditionalState(complex(a), complex(b), complex(c))


def adiabatic_eta(params: SystemParams) -> float:
    """``kappa |delta| / (4 g^2)``, the damping parameter of the eliminated model."""
    return params.kappa * abs(params.delta) / (4 * params.g**2)


def slow_frequency(params: SystemParams) -> float:
    return 0.5 * (generalized_rabi(params) - abs(params.delta))


def evolve_adiabatic_linear(params: SystemParams, t: float) -> ConditionalState:
    """Eliminated-level amplitudes to first order in ``kappa``; ``gamma`` ignored."""
    require_balanced(params)
    eps = epsilon_sign(params.delta)
    eta = adiabatic_eta(params)
    w = slow_frequency(params)
    damp = math.exp(-0.5 * params.kappa * t)
    rot = np.exp(1j * eps * w * t)
    a = 0.5 * damp * (1 + 2j * eps * eta + (1 - 2j * eps * eta) * rot)
    b = 0.5 * damp * (-1 + rot)
    return ConditionalState(complex(a), complex(b), 0j)


def damped_slow_ratio(params: SystemParams) -> float:
    """``r = sqrt(1 - (kappa / w_slow)^2)``; raises in the overdamped regime."""
    w = slow_frequency(params)
    if params.kappa >= w:
        raise ParameterError(
            f"overdamped: kappa={params.kappa:.4g} >= slow frequency {w:.4g}"
        )
    return math.sqrt(1 - (params.kappa / w) ** 2)


def evolve_adiabatic_full(params: SystemParams, t: float) -> ConditionalState:
    """Eliminated-level amplitudes from the exact 2x2 damped problem."""
    require_balanced(params)
    eps = epsilon_sign(params.delta)
    w = slow_frequency(params)
    r = damped_slow_ratio(params)
    wk = r * w
    pref = np.exp(0.5j * (eps * w + 1j * params.kappa) * t)
    half = 0.5 * wk * t
    a = pref * (math.cos(half) + params.kappa / wk * math.sin(half))
    b = pref * (1j * eps / r * math.sin(half))
    return ConditionalState(complex(a), complex(b), 0j)


def _check_kind(mode: ModeIndex, kind: OperationKind) -> None:
    actual = classify(mode)
    if actual is not kind:
        raise ParameterError(f"mode ({mode.k}, {mode.l}) is {actual}, not {kind}")


def linear_time_factor(kind: OperationKind, l: int, eta: float) -> float:
    """Relative operation time ``t(kappa)/t_{k,l}`` to first order in damping."""
    if kind is OperationKind.Pi:
        return 1 + 2 / l * (1 - 2 / math.pi * math.atan2(1, 2 * eta))
    return 1 - 1 / l * (1 - 4 / math.pi * math.atan2(1, 1 - 2 * eta))


def full_time_factor(kind: OperationKind, l: int, r: float) -> float:
    """Relative operation time from the exact eliminated model, ratio ``r``."""
    q = math.sqrt(max(0.0, 1 - r * r))
    if kind is OperationKind.Pi:
        return (1 + 2 / l * (1 - 2 / math.pi * math.atan2(r, q))) / r
    return (1 - 1 / l * (1 - 4 / math.pi * math.atan2(r, 1 - q))) / r


def linear_eta(params: SystemParams, eta_form: str = "general") -> float:
    if eta_form == "general":
        return scales(params).eta
    if eta_form == "adiabatic":
        return adiabatic_eta(params)
    raise ParameterError(f"unknown eta_form {eta_form!r}")


def op_time_linear(
    mode: ModeIndex, kind: OperationKind, params: SystemParams, eta_form: str = "general"
) -> float:
    """Damping-shifted operation time to first order in ``eta``.

    ``params.delta`` is normally the grid detuning of ``mode``; the base time
    is the synchronized time for that detuning.
    """
    require_balanced(params)
    _check_kind(mode, kind)
    eta = linear_eta(params, eta_form)
    return slow_half_period(params, mode.l) * linear_time_factor(kind, mode.l, eta)


def op_times_full(mode: ModeIndex, kind: OperationKind, params: SystemParams) -> float:
    """Operation time from the exact eliminated model (all orders in ``kappa``)."""
    require_balanced(params)
    _check_kind(mode, kind)
    r = damped_slow_ratio(params)
    return slow_half_period(params, mode.l) * full_time_factor(kind, mode.l, r)


def adjusted_detuning(mode: ModeIndex, params: SystemParams) -> float:
    """Grid detuning corrected for cavity damping, ``|Delta_{k,l}(kappa)|`` in 2g units."""
    p = to_internal(params)
    gp = grid_point(mode)
    eta = p.kappa * gp.theta  # kappa_bar * Theta^2 with 2g = 1
    shrink = 4 * eta / (mode.l * math.pi) * math.sin(mode.l * math.pi / 4) ** 2
    return gp.detuning_abs * (1 - shrink)
