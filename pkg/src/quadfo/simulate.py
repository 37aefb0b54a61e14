"""Direct time-domain integration of the swing dynamics and steady-state measurements.

Two right-hand sides are available:

* ``reduced`` -- x'' + c x' + w0^2 x - alpha x^2 = f cos(W s), x a deviation from x_eq
* ``full``    -- x'' = a1 - b sin(x) - c x' + f cos(W s), x the absolute rotor angle

Both run in the native time base of the parameters (tau when D > 0, t otherwise).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .model import FullSystem, OscillatorParams, SmibParams, full_system

log = logging.getLogger(__name__)

DIVERGENCE_BOUND = 10 * math.pi
FOURIER_WINDOW_PERIODS = 8


class DivergenceError(RuntimeError):
    """Trajectory left the model's validity region (loss of synchronism)."""


class TraceTooShort(ValueError):
    pass


@dataclass(frozen=True)
class _Rhs:
    kind: str
    k_lin: float  # w0^2 (reduced) or b (full)
    k_quad: float  # alpha (reduced) or a1 (full)
    c: float
    f: float
    omega: float
    x_ref: float
    time_base: str
    time_scale: float


def _resolve(system) -> _Rhs:
    if isinstance(system, SmibParams):
        system = full_system(system)
    if isinstance(system, FullSystem):
        return _Rhs("full", system.b, system.a1, system.c, system.f, system.omega_drive,
                    system.x_eq, system.time_base, system.time_scale)
    if isinstance(system, OscillatorParams):
        return _Rhs("reduced", system.omega0**2, system.alpha, system.c, system.f,
                    system.omega_drive, 0.0, system.time_base, system.time_scale)
    raise TypeError(f"cannot integrate {type(system).__name__}")


@dataclass
class SimTrace:
    time: np.ndarray
    x: np.ndarray
    y: np.ndarray
    time_base: str
    meta: dict = field(default_factory=dict)

    @property
    def step(self) -> float:
        return self.meta["step"]

    @property
    def x_ref(self) -> float:
        return self.meta.get("x_ref", 0.0)

    @property
    def deviation(self) -> np.ndarray:
        return self.x - self.x_ref

    @property
    def time_scale(self) -> float:
        return self.meta.get("time_scale", 1.0)

    def final_state(self) -> tuple:
        return float(self.x[-1]), float(self.y[-1])


def _rk4(r: _Rhs, x: float, y: float, s0: float, n: int, h: float, theta0: float = 0.0):
    """Fixed-step classical RK4; forcing is f cos(W (s - s0) + theta0)."""
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    xs[0], ys[0] = x, y
    kl, kq, c, f, om = r.k_lin, r.k_quad, r.c, r.f, r.omega
    bound = DIVERGENCE_BOUND
    xref = r.x_ref
    half = 0.5 * h
    cos = math.cos
    full = r.kind == "full"
    sin = math.sin
    for i in range(n):
        th = om * i * h + theta0
        f0 = f * cos(th)
        fm = f * cos(th + om * half)
        f1 = f * cos(th + om * h)
        if full:
            k1x = y
            k1y = kq - kl * sin(x) - c * y + f0
            x2 = x + half * k1x
            y2 = y + half * k1y
            k2x = y2
            k2y = kq - kl * sin(x2) - c * y2 + fm
            x3 = x + half * k2x
            y3 = y + half * k2y
            k3x = y3
            k3y = kq - kl * sin(x3) - c * y3 + fm
            x4 = x + h * k3x
            y4 = y + h * k3y
            k4x = y4
            k4y = kq - kl * sin(x4) - c * y4 + f1
        else:
            k1x = y
            k1y = -kl * x + kq * x * x - c * y + f0
            x2 = x + half * k1x
            y2 = y + half * k1y
            k2x = y2
            k2y = -kl * x2 + kq * x2 * x2 - c * y2 + fm
            x3 = x + half * k2x
            y3 = y + half * k2y
            k3x = y3
            k3y = -kl * x3 + kq * x3 * x3 - c * y3 + fm
            x4 = x + h * k3x
            y4 = y + h * k3y
            k4x = y4
            k4y = -kl * x4 + kq * x4 * x4 - c * y4 + f1
        x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        y = y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        if not abs(x - xref) <= bound:
            raise DivergenceError(
                f"|x - x_eq| exceeded {bound:.4g} at s={s0 + (i + 1) * h:.6g}"
            )
        xs[i + 1] = x
        ys[i + 1] = y
    return xs, ys


def _adaptive(r: _Rhs, x0, y0, times, theta0=0.0):
    kl, kq, c, f, om = r.k_lin, r.k_quad, r.c, r.f, r.omega
    s0 = times[0]
    if r.kind == "full":
        def rhs(s, z):
            return [z[1], kq - kl * math.sin(z[0]) - c * z[1] + f * math.cos(om * (s - s0) + theta0)]
    else:
        def rhs(s, z):
            return [z[1], -kl * z[0] + kq * z[0] ** 2 - c * z[1] + f * math.cos(om * (s - s0) + theta0)]

    def escape(s, z):
        return DIVERGENCE_BOUND - abs(z[0] - r.x_ref)

    escape.terminal = True
    sol = solve_ivp(rhs, (times[0], times[-1]), [x0, y0], method="RK45", t_eval=times,
                    rtol=1e-9, atol=1e-12, events=escape)
    if sol.status == 1:
        raise DivergenceError(f"|x - x_eq| exceeded {DIVERGENCE_BOUND:.4g}")
    return sol.y[0], sol.y[1]


def integrate(system, initial=None, duration: float = 100.0, step: float | None = None,
              *, adaptive: bool = False, phase0: float = 0.0, steps_per_period: int = 200) -> SimTrace:
    """Integrate the reduced (OscillatorParams) or full (SmibParams) dynamics.

    ``initial`` defaults to rest at the equilibrium.  ``step`` defaults to one
    ``steps_per_period``-th of the drive period, or of the natural period when
    the forcing amplitude is zero.
    """
    r = _resolve(system)
    if initial is None:
        initial = (r.x_ref, 0.0)
    if step is None:
        if r.f > 0:
            step = 2 * math.pi / r.omega / steps_per_period
        else:
            w0 = math.sqrt(r.k_lin) if r.kind == "reduced" else math.sqrt(r.k_lin * math.cos(r.x_ref))
            step = 2 * math.pi / w0 / steps_per_period
    if not step > 0:
        raise ValueError("step must be positive")
    if duration < step:
        raise ValueError("duration must be at least one step")
    n = int(round(duration / step))
    times = np.arange(n + 1) * step
    x0, y0 = map(float, initial)
    if adaptive:
        xs, ys = _adaptive(r, x0, y0, times, phase0)
        integrator = "RK45(scipy, rtol=1e-9, atol=1e-12)"
    else:
        xs, ys = _rk4(r, x0, y0, 0.0, n, step, phase0)
        integrator = "RK4"
    meta = {
        "integrator": integrator,
        "step": step,
        "source": r.kind,
        "x_ref": r.x_ref,
        "omega_drive": r.omega,
        "forcing": r.f,
        "time_scale": r.time_scale,
    }
    return SimTrace(times, xs, ys, r.time_base, meta)


@dataclass(frozen=True)
class SteadyMetrics:
    amplitude: float
    peak_amplitude: float
    dc_offset: float
    second_harmonic: float
    harmonic_flag: bool


def _window(trace: SimTrace, skip_periods: float, drive_period: float) -> slice:
    """Samples covering the last eight drive periods, right endpoint excluded."""
    total = len(trace.time) - 1
    avail = total * trace.step / drive_period - skip_periods
    if avail < FOURIER_WINDOW_PERIODS - 1e-9:
        raise TraceTooShort(
            f"trace covers {avail:.3f} periods after skipping {skip_periods}, "
            f"need {FOURIER_WINDOW_PERIODS}"
        )
    n = int(round(FOURIER_WINDOW_PERIODS * drive_period / trace.step))
    return slice(total - n, total)


def steady_metrics(trace: SimTrace, skip_periods: float, drive_period: float) -> SteadyMetrics:
    sl = _window(trace, skip_periods, drive_period)
    t = trace.time[sl]
    x = trace.deviation[sl]
    om = 2 * math.pi / drive_period
    fund = 2 * abs(np.mean(x * np.exp(-1j * om * t)))
    second = 2 * abs(np.mean(x * np.exp(-2j * om * t)))
    peak = 0.5 * (x.max() - x.min())
    flag = abs(peak - fund) > 0.05 * max(fund, 1e-300)
    if flag:
        log.warning("peak amplitude %.6g and fundamental %.6g differ by more than 5%%", peak, fund)
    return SteadyMetrics(float(fund), float(peak), dc_offset(trace, skip_periods, drive_period),
                         float(second), bool(flag))


def steady_amplitude(trace: SimTrace, skip_periods: float, drive_period: float) -> float:
    """Fundamental-bin amplitude over the last eight drive periods."""
    return steady_metrics(trace, skip_periods, drive_period).amplitude


def dc_offset(trace: SimTrace, skip_periods: float, drive_period: float) -> float:
    """Mean deviation from equilibrium over every whole drive period after the skip."""
    dt = trace.step
    total = len(trace.time) - 1
    avail = total * dt / drive_period - skip_periods
    if avail < FOURIER_WINDOW_PERIODS - 1e-9:
        raise TraceTooShort(f"trace covers {avail:.3f} periods after skipping {skip_periods}")
    k = int(math.floor(avail + 1e-9))
    n = int(round(k * drive_period / dt))
    return float(np.mean(trace.deviation[total - n:total]))


@dataclass(frozen=True)
class FrequencyTrack:
    time: np.ndarray
    freq: np.ndarray
    freq_hz: np.ndarray
    crossings: np.ndarray


def _rising_crossings(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    idx = np.nonzero((v[:-1] < 0) & (v[1:] >= 0))[0]
    v0, v1 = v[idx], v[idx + 1]
    frac = v0 / (v0 - v1)
    return t[idx] + frac * (t[idx + 1] - t[idx])


def instantaneous_frequency(trace: SimTrace, edges: str = "rising") -> FrequencyTrack:
    """Per-cycle frequency from successive rising zero crossings.

    A running mean over one estimated period is removed first so that the
    slowly varying offset of a rectifying oscillator does not bias crossings.

    With ``edges="both"`` falling crossings are used too: each estimate
    averages one rising-to-rising and one falling-to-falling period, which
    cancels the first-order crossing shift caused by a decaying even-harmonic
    component (it has opposite sign on the two edges).
    """
    if edges not in ("rising", "both"):
        raise ValueError("edges must be 'rising' or 'both'")
    t = trace.time
    x = trace.deviation
    rough = _rising_crossings(t, x - x.mean())
    if len(rough) < 3:
        raise TraceTooShort("too few zero crossings to estimate a period")
    period = float(np.median(np.diff(rough)))
    w = max(3, int(round(period / trace.step)))
    kernel = np.ones(w) / w
    trend = np.convolve(x, kernel, mode="same")
    half = w // 2
    # mode="same" is biased near the edges; drop those samples
    core = slice(half, len(x) - half)
    v = (x - trend)[core]
    cross = _rising_crossings(t[core], v)
    if len(cross) < 6:
        raise TraceTooShort(f"need at least 6 zero crossings, found {len(cross)}")
    if edges == "rising":
        freq = 1.0 / np.diff(cross)
        mid = 0.5 * (cross[:-1] + cross[1:])
    else:
        cross = np.sort(np.concatenate([cross, _rising_crossings(t[core], -v)]))
        same_edge = cross[2:] - cross[:-2]
        freq = 1.0 / (0.5 * (same_edge[1:] + same_edge[:-1]))
        mid = 0.5 * (cross[:-3] + cross[3:])
    return FrequencyTrack(mid, freq, freq * trace.time_scale, cross)


@dataclass(frozen=True)
class SweepPoint:
    freq_hz: float
    omega: float
    amplitude: float
    dc_offset: float
    converged: bool
    periods: int


@dataclass
class SweepResult:
    direction: str
    points: list
    dwell: int
    meta: dict = field(default_factory=dict)

    @property
    def freqs_hz(self) -> np.ndarray:
        return np.array([p.freq_hz for p in self.points])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.points])


def hysteresis_sweep(system, freq_grid_hz, direction: str = "up", dwell_periods: int = 400,
                     steps_per_period: int = 200, rel_tol: float = 1e-4,
                     min_periods: int = 10, settle_cycles: int = 3) -> SweepResult:
    """Quasi-static frequency sweep with state and forcing-phase continuation.

    Each point runs whole drive periods until the per-cycle amplitude has
    changed by less than ``rel_tol`` (relative) for ``settle_cycles`` cycles in
    a row, or ``dwell_periods`` is exhausted (recorded as not converged).
    """
    freqs = np.asarray(freq_grid_hz, dtype=float)
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    if dwell_periods < 30:
        raise ValueError("dwell_periods must be at least 30")
    d = np.diff(freqs)
    if freqs.size > 1 and not (np.all(d > 0) if direction == "up" else np.all(d < 0)):
        raise ValueError(f"frequency grid is not strictly monotone for a {direction}-sweep")

    base = _resolve(system)
    x, y = base.x_ref, 0.0
    theta = 0.0
    s = 0.0
    points = []
    for fh in freqs:
        om = 2 * math.pi * fh / base.time_scale
        r = _Rhs(base.kind, base.k_lin, base.k_quad, base.c, base.f, om, base.x_ref,
                 base.time_base, base.time_scale)
        h = 2 * math.pi / om / steps_per_period
        phases = theta + om * h * np.arange(steps_per_period)
        prev = None
        quiet = 0
        converged = False
        for k in range(1, dwell_periods + 1):
            xs, ys = _rk4(r, x, y, s, steps_per_period, h, theta)
            x, y = float(xs[-1]), float(ys[-1])
            s += steps_per_period * h
            theta = math.remainder(theta + om * h * steps_per_period, 2 * math.pi)
            dev = xs[:-1] - base.x_ref
            amp = 2 * abs(np.mean(dev * np.exp(-1j * phases)))
            mean = float(np.mean(dev))
            phases = theta + om * h * np.arange(steps_per_period)
            if prev is not None and abs(amp - prev) <= rel_tol * max(amp, 1e-300):
                quiet += 1
            else:
                quiet = 0
            prev = amp
            if quiet >= settle_cycles and k >= min_periods:
                converged = True
                break
        if not converged:
            log.info("sweep point %.5f Hz not converged after %d periods", fh, dwell_periods)
        points.append(SweepPoint(float(fh), om, float(amp), mean, converged, k))
    meta = {"source": base.kind, "steps_per_period": steps_per_period, "rel_tol": rel_tol}
    return SweepResult(direction, points, dwell_periods, meta)


@dataclass(frozen=True)
class BeatResult:
    beat_frequency: float | None
    peak_times: np.ndarray
    secular_growth: bool


def beat_analysis(trace: SimTrace, drive_period: float | None = None) -> BeatResult:
    """Beat frequency from the spacing of envelope maxima (per-cycle max of x).

    A monotonically growing envelope with no interior maxima is reported as
    secular growth instead of a beat.
    """
    if drive_period is None:
        drive_period = 2 * math.pi / trace.meta["omega_drive"]
    n_per = max(1, int(round(drive_period / trace.step)))
    x = trace.deviation
    m = (len(x) - 1) // n_per
    if m < 3:
        raise TraceTooShort("trace shorter than three drive periods")
    cyc = x[: m * n_per].reshape(m, n_per)
    env = cyc.max(axis=1)
    env_t = trace.time[: m * n_per].reshape(m, n_per)[np.arange(m), cyc.argmax(axis=1)]
    interior = np.nonzero((env[1:-1] > env[:-2]) & (env[1:-1] >= env[2:]))[0] + 1
    growth = bool(np.all(np.diff(env) > -1e-12 * max(1.0, np.abs(env).max())))
    if growth and len(interior) < 3:
        return BeatResult(None, env_t[interior], True)
    if len(interior) < 3:
        raise TraceTooShort(f"only {len(interior)} envelope peaks; need 3")
    tp = env_t[interior]
    return BeatResult(float(1.0 / np.mean(np.diff(tp))), tp, False)


def rest_state(system) -> tuple:
    return _resolve(system).x_ref, 0.0


def steady_run(system, transient_periods: int = 50, steps_per_period: int = 200,
               initial=None, adaptive: bool = False):
    """Integrate from rest (or ``initial``) through the transient plus the
    measurement window and return the trace with its steady metrics."""
    r = _resolve(system)
    if r.f <= 0:
        raise ValueError("steady forced response needs f > 0")
    period = 2 * math.pi / r.omega
    if initial is None:
        initial = (r.x_ref, 0.0)
    trace = integrate(system, initial, (transient_periods + FOURIER_WINDOW_PERIODS) * period,
                      period / steps_per_period, adaptive=adaptive)
    return trace, steady_metrics(trace, transient_periods, period)


def sweep_jump(sweep: SweepResult):
    """Largest amplitude discontinuity along a sweep.

    Returns ``(freq_hz, size)`` with the frequency at the midpoint of the two
    grid points straddling the jump, or None for fewer than two points.
    """
    if len(sweep.points) < 2:
        return None
    amps = sweep.amplitudes
    f = sweep.freqs_hz
    k = int(np.argmax(np.abs(np.diff(amps))))
    return 0.5 * (f[k] + f[k + 1]), float(amps[k + 1] - amps[k])


def cycle_amplitudes(trace: SimTrace) -> tuple:
    """Half peak-to-peak deviation over each cycle delimited by rising zero
    crossings of the mean-removed signal.  Returns (mid_times, amplitudes)."""
    t = trace.time
    x = trace.deviation
    cross = _rising_crossings(t, x - x.mean())
    if len(cross) < 3:
        raise TraceTooShort("fewer than two full cycles")
    idx = np.searchsorted(t, cross)
    mids, amps = [], []
    for i0, i1 in zip(idx[:-1], idx[1:]):
        seg = x[i0:i1]
        mids.append(0.5 * (t[i0] + t[i1 - 1]))
        amps.append(0.5 * (seg.max() - seg.min()))
    return np.array(mids), np.array(amps)


def envelope_decay_rate(trace: SimTrace, cycles: int | None = None) -> float:
    """Least-squares slope of -log(cycle amplitude) against time."""
    tm, amps = cycle_amplitudes(trace)
    if cycles is not None:
        tm, amps = tm[:cycles], amps[:cycles]
    keep = amps > 0
    slope = np.polyfit(tm[keep], np.log(amps[keep]), 1)[0]
    return float(-slope)
