"""Single-machine infinite-bus parameters and their reduction to a quadratic oscillator.

The swing equation

    2H dw/dt = Pm - Pmax sin(delta) - D w + Pd cos(w_d t),   d(delta)/dt = w_base w

is rescaled with tau = t * sqrt(D / 2H) and expanded to second order about the
stable equilibrium, giving

    x'' + c x' + w0^2 x - alpha x^2 = f cos(Omega tau)

with x the rotor-angle deviation.  When D == 0 the rescaling is meaningless and
all quantities stay in real time (``time_base == "t"``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

TAU = "tau"
REAL_TIME = "t"


class ModelDomainError(ValueError):
    """Raised when parameters admit no stable operating point."""


@dataclass(frozen=True)
class SmibParams:
    omega_base: float = 100 * math.pi
    p_m: float = 0.5
    p_max: float = 0.6
    d: float = 4.0
    h: float = 4.0
    p_d: float = 0.01
    f_dist_hz: float = 0.55

    def __post_init__(self):
        if not self.omega_base > 0:
            raise ModelDomainError(f"omega_base must be positive, got {self.omega_base}")
        if not self.p_max > 0:
            raise ModelDomainError(f"p_max must be positive, got {self.p_max}")
        if not self.h > 0:
            raise ModelDomainError(f"h must be positive, got {self.h}")
        if self.d < 0:
            raise ModelDomainError(f"d must be non-negative, got {self.d}")
        if self.p_d < 0:
            raise ModelDomainError(f"p_d must be non-negative, got {self.p_d}")
        if self.f_dist_hz < 0:
            raise ModelDomainError(f"f_dist_hz must be non-negative, got {self.f_dist_hz}")
        if not 0 <= self.p_m < self.p_max:
            raise ModelDomainError(
                f"p_m={self.p_m} outside [0, p_max={self.p_max}): no stable equilibrium"
            )

    def with_(self, **changes) -> "SmibParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class OscillatorParams:
    """Coefficients of the reduced quadratic oscillator.

    ``time_scale`` is d(native time)/dt, so a native angular frequency w maps to
    w * time_scale / (2 pi) Hz.  ``sigma`` is derived and cannot be passed in.
    """

    omega0: float
    alpha: float
    c: float
    f: float
    omega_drive: float
    x_eq: float = 0.0
    time_base: str = TAU
    time_scale: float = 1.0
    sigma: float = field(init=False)

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ModelDomainError(f"omega0 must be positive, got {self.omega0}")
        if self.c < 0 or self.f < 0:
            raise ModelDomainError("c and f must be non-negative")
        if not self.omega_drive > 0:
            raise ModelDomainError(f"omega_drive must be positive, got {self.omega_drive}")
        if self.time_base not in (TAU, REAL_TIME):
            raise ModelDomainError(f"unknown time base {self.time_base!r}")
        object.__setattr__(self, "sigma", self.omega_drive**2 - self.omega0**2)

    def with_(self, **changes) -> "OscillatorParams":
        return replace(self, **changes)

    def with_sigma(self, sigma: float) -> "OscillatorParams":
        return replace(self, omega_drive=math.sqrt(self.omega0**2 + sigma))

    def with_freq_hz(self, freq_hz: float) -> "OscillatorParams":
        return replace(self, omega_drive=self.hz_to_native(freq_hz))

    def hz_to_native(self, freq_hz: float) -> float:
        return 2 * math.pi * freq_hz / self.time_scale

    def native_to_hz(self, omega: float) -> float:
        return omega * self.time_scale / (2 * math.pi)

    @property
    def drive_hz(self) -> float:
        return self.native_to_hz(self.omega_drive)

    @property
    def natural_hz(self) -> float:
        return self.native_to_hz(self.omega0)

    @property
    def drive_period(self) -> float:
        return 2 * math.pi / self.omega_drive


@dataclass(frozen=True)
class FullSystem:
    """Right-hand side constants of the unexpanded swing equation in one time base.

    y' = a1 - b sin(x) - c y + f cos(Omega s),  x' = y
    """

    a1: float
    b: float
    c: float
    f: float
    omega_drive: float
    x_eq: float
    time_base: str
    time_scale: float


@dataclass(frozen=True)
class ModalInfo:
    eigen_real: float
    eigen_imag: float
    natural_freq_hz: float
    damping_ratio: float
    eigenvalues: tuple = ()
    oscillatory: bool = True


def equilibrium(params: SmibParams) -> float:
    if not 0 <= params.p_m < params.p_max:
        raise ModelDomainError(
            f"p_m={params.p_m} >= p_max={params.p_max}: arcsin argument out of range"
        )
    return math.asin(params.p_m / params.p_max)


def _scaling(params: SmibParams):
    """Return (time_base, time_scale, divisor) where the swing coefficients are
    w_base * P / divisor in the chosen time base."""
    if params.d > 0:
        return TAU, math.sqrt(params.d / (2 * params.h)), params.d
    return REAL_TIME, 1.0, 2 * params.h


def full_system(params: SmibParams) -> FullSystem:
    base, scale, div = _scaling(params)
    x1 = equilibrium(params)
    c = scale if base == TAU else params.d / (2 * params.h)
    return FullSystem(
        a1=params.omega_base * params.p_m / div,
        b=params.omega_base * params.p_max / div,
        c=c,
        f=params.omega_base * params.p_d / div,
        omega_drive=2 * math.pi * params.f_dist_hz / scale,
        x_eq=x1,
        time_base=base,
        time_scale=scale,
    )


def to_oscillator(params: SmibParams) -> OscillatorParams:
    sysp = full_system(params)
    x1 = sysp.x_eq
    return OscillatorParams(
        omega0=math.sqrt(sysp.b * math.cos(x1)),
        alpha=0.5 * sysp.b * math.sin(x1),
        c=sysp.c,
        f=sysp.f,
        omega_drive=sysp.omega_drive,
        x_eq=x1,
        time_base=sysp.time_base,
        time_scale=sysp.time_scale,
    )


def swing_jacobian(params: SmibParams) -> np.ndarray:
    """Jacobian of (d dw/dt, d delta/dt) at the equilibrium, real time."""
    x1 = equilibrium(params)
    two_h = 2 * params.h
    return np.array(
        [
            [-params.d / two_h, -params.p_max * math.cos(x1) / two_h],
            [params.omega_base, 0.0],
        ]
    )


def linearize(params: SmibParams) -> ModalInfo:
    eig = np.linalg.eigvals(swing_jacobian(params))
    if np.all(np.abs(eig.imag) == 0):
        roots = tuple(sorted(float(v) for v in eig.real))
        return ModalInfo(
            eigen_real=roots[-1],
            eigen_imag=0.0,
            natural_freq_hz=0.0,
            damping_ratio=1.0,
            eigenvalues=roots,
            oscillatory=False,
        )
    lam = eig[np.argmax(eig.imag)]
    re, im = float(lam.real), float(lam.imag)
    return ModalInfo(
        eigen_real=re,
        eigen_imag=im,
        natural_freq_hz=im / (2 * math.pi),
        damping_ratio=-re / math.hypot(re, im),
        eigenvalues=(complex(re, im), complex(re, -im)),
    )


def equilibrium_residual(params: SmibParams) -> float:
    """Unforced right side of the scaled swing equation at (x_eq, 0)."""
    sysp = full_system(params)
    return sysp.a1 - sysp.b * math.sin(sysp.x_eq)
