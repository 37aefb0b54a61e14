"""First-order multiple-scales results for x'' + c x' + w0^2 x - alpha x^2 = f cos(Omega t).

The slow amplitude/phase (a, phi) of x ~ a cos(Omega t + phi) obey

    a'   = -(c/2) a - f/(2 Omega) sin(phi)
    phi' = -5 alpha^2 a^2 / (12 Omega^3) - sigma/(2 Omega) - f/(2 Omega a) cos(phi)

with sigma = Omega^2 - w0^2.  Fixed points satisfy a cubic in u = a^2.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .cubic import discriminant, real_roots
from .model import OscillatorParams

DET_TIE = 1e-12
FOLD_TOL = 1e-8
FOLD_MAX_ITER = 60


class SlowFlowSingularity(ValueError):
    """The phase equation is undefined at a = 0 under nonzero forcing."""


class Stability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class SlowFlowState:
    a: float
    phi: float

    def canonical(self) -> "SlowFlowState":
        """Map a < 0 onto a >= 0 by shifting the phase by pi, phase in (-pi, pi]."""
        a, phi = self.a, self.phi
        if a < 0:
            a, phi = -a, phi + math.pi
        return SlowFlowState(a, wrap_phase(phi))


@dataclass(frozen=True)
class SteadyState:
    a: float
    phi: float
    stability: Stability = Stability.STABLE

    @property
    def stable(self) -> bool:
        return self.stability is Stability.STABLE


@dataclass(frozen=True)
class CurvePoint:
    sigma: float
    omega_drive: float
    freq_hz: float
    states: tuple

    @property
    def branch_count(self) -> int:
        return len(self.states)

    def stable_amplitudes(self) -> list:
        return [s.a for s in self.states if s.stable]


@dataclass(frozen=True)
class Fold:
    sigma: float
    a: float
    omega_drive: float
    freq_hz: float
    root_gap: float
    bracket: tuple


@dataclass
class ResonanceCurve:
    points: list
    folds: list = field(default_factory=list)
    osc: OscillatorParams | None = None

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([p.sigma for p in self.points])

    @property
    def freqs_hz(self) -> np.ndarray:
        return np.array([p.freq_hz for p in self.points])

    def fold_band_hz(self):
        """(low, high) drive frequency of the bistable band, or None."""
        if not self.folds:
            return None
        fs = sorted(fd.freq_hz for fd in self.folds)
        return fs[0], fs[-1]


@dataclass(frozen=True)
class Peak:
    freq_hz: float
    omega_drive: float
    sigma: float
    a_max: float


@dataclass(frozen=True)
class ReconstructedWave:
    a: float
    phi: float
    omega_drive: float
    fundamental_amp: float
    dc_offset: float
    second_harmonic_amp: float

    def components(self, t) -> dict:
        t = np.asarray(t, dtype=float)
        theta = self.omega_drive * t + self.phi
        return {
            "fundamental": self.fundamental_amp * np.cos(theta),
            "dc": np.full_like(t, self.dc_offset),
            "second_harmonic": -self.second_harmonic_amp * np.cos(2 * theta),
        }

    def evaluate(self, t) -> np.ndarray:
        comp = self.components(t)
        return comp["fundamental"] + comp["dc"] + comp["second_harmonic"]


@dataclass(frozen=True)
class ImpulseResponse:
    t: np.ndarray
    envelope: np.ndarray
    delta_f: np.ndarray
    delta_f_hz: np.ndarray
    decay_rate: float


def wrap_phase(phi: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.remainder(phi, 2 * math.pi)
    return math.pi if w == -math.pi else w


def slow_flow_rhs(state: SlowFlowState, osc: OscillatorParams) -> tuple:
    a, phi = state.a, state.phi
    om = osc.omega_drive
    da = -0.5 * osc.c * a - osc.f / (2 * om) * math.sin(phi)
    if a == 0:
        if osc.f > 0:
            raise SlowFlowSingularity("slow flow undefined at a = 0 with f > 0")
        return da, -osc.sigma / (2 * om)
    dphi = (
        -5 * osc.alpha**2 * a**2 / (12 * om**3)
        - osc.sigma / (2 * om)
        - osc.f / (2 * om * a) * math.cos(phi)
    )
    return da, dphi


def slow_flow_jacobian(state: SlowFlowState, osc: OscillatorParams) -> np.ndarray:
    a, phi = state.a, state.phi
    om, f = osc.omega_drive, osc.f
    j = np.empty((2, 2))
    j[0, 0] = -0.5 * osc.c
    j[0, 1] = -f / (2 * om) * math.cos(phi)
    j[1, 0] = -10 * osc.alpha**2 * a / (12 * om**3) + f / (2 * om * a * a) * math.cos(phi)
    j[1, 1] = f / (2 * om * a) * math.sin(phi)
    return j


def amplitude_cubic(osc: OscillatorParams) -> tuple:
    """Coefficients (u^3, u^2, u, 1) of the steady-state relation in u = a^2."""
    om2 = osc.omega_drive**2
    al2 = osc.alpha**2
    s = osc.sigma
    return (
        25 * al2 * al2 / (36 * om2 * om2),
        5 * al2 * s / (3 * om2),
        osc.c**2 * om2 + s * s,
        -osc.f**2,
    )


def branch_stability(state: SteadyState, osc: OscillatorParams) -> Stability:
    if state.a == 0:
        return Stability.STABLE if osc.c > 0 else Stability.MARGINAL
    j = slow_flow_jacobian(SlowFlowState(state.a, state.phi), osc)
    tr = j[0, 0] + j[1, 1]
    det = j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]
    if abs(det) < DET_TIE:
        return Stability.MARGINAL
    if det < 0:
        return Stability.UNSTABLE
    # det > 0: sign of the trace decides; an undamped slow flow is a center
    if osc.c == 0 or abs(tr) < 1e-14:
        return Stability.MARGINAL
    return Stability.STABLE if tr < 0 else Stability.UNSTABLE


def _phase(a: float, osc: OscillatorParams) -> float:
    # both atan2 arguments carry a common factor a > 0, divided out here
    om = osc.omega_drive
    s_part = -osc.c * om
    c_part = -5 * (osc.alpha * a) ** 2 / (6 * om * om) - osc.sigma
    return wrap_phase(math.atan2(s_part, c_part))


def positive_roots(osc: OscillatorParams) -> list:
    return [u for u in real_roots(*amplitude_cubic(osc)) if u > 0]


def steady_states(osc: OscillatorParams) -> list:
    """All steady states of the slow flow, ascending in amplitude."""
    if osc.f == 0:
        zero = SteadyState(0.0, 0.0)
        return [SteadyState(0.0, 0.0, branch_stability(zero, osc))]
    out = []
    for u in positive_roots(osc):
        a = math.sqrt(u)
        st = SteadyState(a, _phase(a, osc))
        out.append(SteadyState(st.a, st.phi, branch_stability(st, osc)))
    return sorted(out, key=lambda s: s.a)


def linear_amplitude(osc: OscillatorParams) -> float:
    return osc.f / math.sqrt(osc.c**2 * osc.omega_drive**2 + osc.sigma**2)


def _refine_fold(osc_base: OscillatorParams, s_lo: float, s_hi: float):
    def disc(s):
        return discriminant(*amplitude_cubic(osc_base.with_sigma(s)))

    d_lo = disc(s_lo)
    for _ in range(FOLD_MAX_ITER):
        mid = 0.5 * (s_lo + s_hi)
        if mid in (s_lo, s_hi):
            break
        d_mid = disc(mid)
        if (d_mid > 0) == (d_lo > 0):
            s_lo, d_lo = mid, d_mid
        else:
            s_hi = mid
    return s_lo, s_hi


def _fold_from_bracket(osc_base, s_a, s_b):
    lo, hi = _refine_fold(osc_base, s_a, s_b)
    # evaluate on whichever end still has the merging pair
    cands = []
    for s in (lo, hi):
        roots = positive_roots(osc_base.with_sigma(s))
        if len(roots) >= 2:
            amps = np.sqrt(roots)
            gaps = np.diff(amps)
            k = int(np.argmin(gaps))
            cands.append((s, 0.5 * (amps[k] + amps[k + 1]), float(gaps[k])))
    if cands:
        s, a, gap = min(cands, key=lambda c: c[2])
    else:
        # pair already complex on both ends; the double root is the critical point
        s = 0.5 * (lo + hi)
        a3, a2, a1, _ = amplitude_cubic(osc_base.with_sigma(s))
        crit = [u for u in real_roots(0.0, 3 * a3, 2 * a2, a1) if u > 0]
        a = math.sqrt(crit[-1]) if crit else float("nan")
        gap = 0.0
    osc = osc_base.with_sigma(s)
    return Fold(s, a, osc.omega_drive, osc.drive_hz, gap, (lo, hi))


def resonance_curve(osc_base: OscillatorParams, sigma_grid) -> ResonanceCurve:
    grid = np.asarray(sigma_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("sigma grid must be a non-empty 1-D sequence")
    steps = np.diff(grid)
    if grid.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("sigma grid must be strictly monotone")
    if np.any(osc_base.omega0**2 + grid <= 0):
        raise ValueError("sigma grid reaches non-positive drive frequency")

    points = []
    for s in grid:
        osc = osc_base.with_sigma(float(s))
        points.append(
            CurvePoint(float(s), osc.omega_drive, osc.drive_hz, tuple(steady_states(osc)))
        )

    folds = []
    if osc_base.f > 0:
        for p, q in zip(points[:-1], points[1:]):
            if p.branch_count == q.branch_count:
                continue
            d_p = discriminant(*amplitude_cubic(osc_base.with_sigma(p.sigma)))
            d_q = discriminant(*amplitude_cubic(osc_base.with_sigma(q.sigma)))
            if (d_p > 0) != (d_q > 0):
                folds.append(_fold_from_bracket(osc_base, p.sigma, q.sigma))
    return ResonanceCurve(points, folds, osc_base)


def sigma_grid_from_hz(osc: OscillatorParams, freqs_hz) -> np.ndarray:
    om = 2 * np.pi * np.asarray(freqs_hz, dtype=float) / osc.time_scale
    return om**2 - osc.omega0**2


def primary_branch(curve: ResonanceCurve) -> list:
    """Follow the resonance branch from the high-frequency end of the curve.

    Returns ``(point_index, amplitude)`` pairs.  The nearest root is continued
    from point to point; the walk stops where the tracked root merges away at a
    fold or loses stability.  Detached branches never reached this way are
    excluded.
    """
    order = sorted(range(len(curve.points)), key=lambda k: -curve.points[k].sigma)
    path = []
    prev = None
    tracked = None
    for k in order:
        states = curve.points[k].states
        amps = [s.a for s in states]
        if not amps:
            break
        if tracked is None:
            idx = 0
        elif len(amps) < len(prev):
            # a pair merged: keep going only if our root has a surviving successor
            succ = [min(range(len(prev)), key=lambda m: abs(prev[m] - a)) for a in amps]
            mine = prev.index(tracked)
            if mine not in succ:
                break
            idx = succ.index(mine)
        else:
            idx = min(range(len(amps)), key=lambda m: abs(amps[m] - tracked))
        if not states[idx].stable:
            break
        tracked = amps[idx]
        prev = amps
        path.append((k, tracked))
    return path


def peak_of_curve(curve: ResonanceCurve, refine: bool = True) -> Peak:
    """Largest amplitude on the primary stable branch.

    With ``refine`` the grid maximum is polished by a bounded scalar search
    between the neighbouring grid points.
    """
    if not curve.points:
        raise ValueError("empty curve")
    path = primary_branch(curve)
    if not path:
        raise ValueError("curve has no stable primary branch")
    k, a = max(path, key=lambda p: p[1])
    p = curve.points[k]
    peak = Peak(p.freq_hz, p.omega_drive, p.sigma, a)
    if not refine or curve.osc is None or len(curve.points) < 3:
        return peak

    sig = curve.sigmas
    lo = sig[max(k - 1, 0)]
    hi = sig[min(k + 1, len(sig) - 1)]
    lo, hi = min(lo, hi), max(lo, hi)
    osc = curve.osc

    def neg_amp(s):
        st = [x.a for x in steady_states(osc.with_sigma(s)) if x.stable]
        if not st:
            return 0.0
        return -min(st, key=lambda v: abs(v - a))

    from scipy.optimize import minimize_scalar

    res = minimize_scalar(neg_amp, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10 * max(1.0, abs(p.sigma))})
    if res.success and -res.fun >= a:
        o = osc.with_sigma(float(res.x))
        return Peak(o.drive_hz, o.omega_drive, float(res.x), float(-res.fun))
    return peak


def reconstruct(state: SteadyState, osc: OscillatorParams, t_grid=None):
    """First-order waveform a cos(th) + alpha a^2/(2 W^2) - alpha a^2/(6 W^2) cos(2 th).

    Returns the decomposed wave and, when ``t_grid`` is given, the sampled x(t).
    """
    om2 = osc.omega_drive**2
    a = state.a
    wave = ReconstructedWave(
        a=a,
        phi=state.phi,
        omega_drive=osc.omega_drive,
        fundamental_amp=a,
        dc_offset=osc.alpha * a * a / (2 * om2),
        second_harmonic_amp=osc.alpha * a * a / (6 * om2),
    )
    x = None if t_grid is None else wave.evaluate(t_grid)
    return wave, x


def impulse_response(a0: float, osc: OscillatorParams, t_grid) -> ImpulseResponse:
    """Unforced slow-flow solution: exponential envelope and amplitude-dependent
    frequency shift, evaluated with Omega = w0."""
    if not a0 > 0:
        raise ValueError(f"initial amplitude must be positive, got {a0}")
    if osc.f != 0:
        raise ValueError("impulse response requires f = 0")
    t = np.asarray(t_grid, dtype=float)
    om = osc.omega0
    env = a0 * np.exp(-0.5 * osc.c * t)
    df = -5 * osc.alpha**2 * a0**2 / (24 * math.pi * om**3) * np.exp(-osc.c * t)
    return ImpulseResponse(t, env, df, df * osc.time_scale, 0.5 * osc.c)
