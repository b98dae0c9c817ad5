"""Shared domain types and unit conventions.

Every routine in the package works in the dimensionless unit system where
``2g = 1``: rates are divided by ``2g`` and times are measured in units of
``1/(2g)``.  :func:`to_internal` and :func:`from_internal` convert between
that system and any physical unit system (for instance ``g/2pi`` in MHz).

The evolution basis is fixed to the single-excitation triple
``(|1,0>, |0,1>, |2,0>)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

NORM_TOL = 1e-12


class ParameterError(ValueError):
    """Raised when a parameter set violates a routine's preconditions."""


class NumericError(RuntimeError):
    """Raised when a numerical procedure fails to produce a result."""


@dataclass(frozen=True)
class SystemParams:
    """Physical rates of the driven Lambda system in the cavity.

    Attributes
    ----------
    g : float
        Cavity coupling strength on the ``|0> <-> |2>`` transition.
    omega : float
        Classical Rabi coupling on the ``|1> <-> |2>`` transition.
    delta : float
        Signed detuning of both fields.
    kappa : float
        Cavity field decay rate.
    gamma : float
        Spontaneous emission rate of the excited level.
    """

    g: float
    omega: float
    delta: float = 0.0
    kappa: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.g > 0:
            raise ParameterError(f"coupling g must be positive, got {self.g!r}")
        if self.omega < 0:
            raise ParameterError(f"Rabi coupling must be non-negative, got {self.omega!r}")
        if self.kappa < 0 or self.gamma < 0:
            raise ParameterError("damping rates must be non-negative")

    @classmethod
    def internal(cls, delta=0.0, kappa=0.0, gamma=0.0, omega=None) -> "SystemParams":
        """Build parameters directly in ``2g = 1`` units (``omega`` defaults to ``g``)."""
        return cls(g=0.5, omega=0.5 if omega is None else omega, delta=delta, kappa=kappa, gamma=gamma)

    @property
    def lossless(self) -> bool:
        return self.kappa == 0 and self.gamma == 0

    @property
    def balanced(self) -> bool:
        """True when ``omega == g``, the only case used to design operations."""
        return abs(self.omega - self.g) <= 1e-12 * self.g

    def with_delta(self, delta: float) -> "SystemParams":
        return replace(self, delta=delta)


def require_balanced(params: SystemParams) -> None:
    if not params.balanced:
        raise ParameterError(
            f"operation design requires omega == g (got g={params.g}, omega={params.omega})"
        )


def require_lossless(params: SystemParams) -> None:
    if not params.lossless:
        raise ParameterError("closed-form lossless solution requires kappa == gamma == 0")


def to_internal(params: SystemParams) -> SystemParams:
    """Rescale all rates by ``2g``, giving ``g = 1/2`` in the result."""
    s = 2.0 * params.g
    return SystemParams(
        g=0.5,
        omega=params.omega / s,
        delta=params.delta / s,
        kappa=params.kappa / s,
        gamma=params.gamma / s,
    )


def from_internal(params: SystemParams, g: float) -> SystemParams:
    """Inverse of :func:`to_internal` for a physical coupling ``g``."""
    if not g > 0:
        raise ParameterError(f"coupling g must be positive, got {g!r}")
    s = 2.0 * g
    return SystemParams(
        g=g,
        omega=params.omega * s,
        delta=params.delta * s,
        kappa=params.kappa * s,
        gamma=params.gamma * s,
    )


def epsilon_sign(delta: float) -> int:
    """Sign convention for the detuning: ``+1`` for ``delta >= 0``, else ``-1``."""
    return 1 if delta >= 0 else -1


@dataclass(frozen=True, order=True)
class ModeIndex:
    """Integer pair ``(k, l)`` selecting a detuning/time grid point.

    ``k`` counts fast (excited-state) oscillations and ``l`` quarter slow
    periods completed at the operation time; ``1 <= l <= 2k``.
    """

    k: int
    l: int

    def __post_init__(self):
        if int(self.k) != self.k or int(self.l) != self.l:
            raise ParameterError(f"mode indices must be integers, got ({self.k}, {self.l})")
        if self.k < 1 or self.l < 1:
            raise ParameterError(f"mode indices must be positive, got ({self.k}, {self.l})")
        if self.l > 2 * self.k:
            raise ParameterError(f"mode requires l <= 2k, got ({self.k}, {self.l})")


class OperationKind(enum.Enum):
    Pi = "pi"
    PiHalf = "pi/2"


class ShapeKind(enum.Enum):
    Rectangular = "rectangular"
    Trapezium = "trapezium"
    SineSquare = "sine-square"


@dataclass(frozen=True)
class PulseShape:
    """Pulse envelope descriptor.

    ``rise_frac`` and ``fall_frac`` are the rise and fall times as fractions
    of the pulse duration; they are only used by the trapezium.
    """

    kind: ShapeKind = ShapeKind.Rectangular
    rise_frac: float = 0.0
    fall_frac: float = 0.0

    def __post_init__(self):
        if self.kind is ShapeKind.Trapezium:
            for name in ("rise_frac", "fall_frac"):
                v = getattr(self, name)
                if not 0.0 <= v < 1.0:
                    raise ParameterError(f"{name} must lie in [0, 1), got {v!r}")
            if self.rise_frac + self.fall_frac > 1.0:
                raise ParameterError("rise and fall segments overlap")

    @classmethod
    def rectangular(cls) -> "PulseShape":
        return cls(ShapeKind.Rectangular)

    @classmethod
    def trapezium(cls, rise_frac: float = 0.1, fall_frac: float = 0.1) -> "PulseShape":
        return cls(ShapeKind.Trapezium, rise_frac, fall_frac)

    @classmethod
    def sine_square(cls) -> "PulseShape":
        return cls(ShapeKind.SineSquare)

    @property
    def plateau(self) -> float:
        """Height ``s`` of the trapezium plateau that preserves the unit area."""
        if self.kind is not ShapeKind.Trapezium:
            return 1.0
        return 1.0 / (1.0 - 0.5 * (self.rise_frac + self.fall_frac))


@dataclass(frozen=True)
class ConditionalState:
    """Amplitudes over ``(|1,0>, |0,1>, |2,0>)``; possibly unnormalized."""

    a: complex
    b: complex
    c: complex
    normalized: bool = False

    @classmethod
    def from_vector(cls, vec, normalized: bool = False) -> "ConditionalState":
        v = np.asarray(vec, dtype=complex)
        return cls(complex(v[0]), complex(v[1]), complex(v[2]), normalized)

    @classmethod
    def ground(cls) -> "ConditionalState":
        return cls(1.0 + 0j, 0j, 0j, True)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=complex)

    @property
    def norm_sq(self) -> float:
        return abs(self.a) ** 2 + abs(self.b) ** 2 + abs(self.c) ** 2

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq))

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.vector) ** 2


@dataclass(frozen=True)
class TuningOutcome:
    """Result of a fine-tuning search.

    ``time`` and ``detuning`` are in ``2g`` units.  ``norm`` is the norm of
    the conditional state before renormalization.  ``extra`` carries
    procedure-specific diagnostics (seed values, period offsets).
    """

    time: float
    detuning: float
    fidelity: float
    norm: float
    iterations: int
    extra: dict | None = None

    def __post_init__(self):
        if not self.time > 0:
            raise NumericError(f"tuned time must be positive, got {self.time!r}")
        if not -1e-12 <= self.fidelity <= 1 + 1e-12:
            raise NumericError(f"fidelity outside [0, 1]: {self.fidelity!r}")

    def as_dict(self) -> dict:
        out = {
            "time": self.time,
            "detuning": self.detuning,
            "fidelity": self.fidelity,
            "norm": self.norm,
            "iterations": self.iterations,
        }
        if self.extra:
            out.update(self.extra)
        return out
