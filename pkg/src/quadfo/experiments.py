"""Figure scenarios: parameter studies, sweeps and time-domain comparisons
emitted as CSV plot data plus one JSON summary per figure."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .model import SmibParams, linearize, to_oscillator
from .multiscale import (
    impulse_response,
    peak_of_curve,
    reconstruct,
    resonance_curve,
    sigma_grid_from_hz,
    steady_states,
)
from .simulate import (
    beat_analysis,
    envelope_decay_rate,
    hysteresis_sweep,
    instantaneous_frequency,
    integrate,
    rest_state,
    steady_run,
    sweep_jump,
)

log = logging.getLogger(__name__)

FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5a", "fig5b", "fig6", "fig7", "fig8", "fig9",
              "fig10a", "fig10b")

JUMP_PD = 0.025
FIG6_PM = (0.30, 0.40, 0.50, 0.55)
BEAT_DRIVE_HZ = 0.62
BEAT_DURATION_S = 120.0
RINGDOWN_PERIODS = 25
RINGDOWN_OFFSET_HZ = 0.05


class UnknownFigure(ValueError):
    pass


@dataclass(frozen=True)
class FigureSettings:
    curve_grid: tuple = (0.40, 0.70, 241)
    wide_grid: tuple = (0.40, 0.85, 361)
    sweep_grid: tuple = (0.45, 0.55, 41)
    steps_per_period: int = 200
    transient_periods: int = 50
    dwell_periods: int = 400


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    base: SmibParams
    varied: tuple = ()  # (parameter name, tuple of values)
    outputs: tuple = ()
    extra: dict = field(default_factory=dict)


@dataclass
class FigureResult:
    figure_id: str
    files: list
    summary: dict


def _grid(spec) -> np.ndarray:
    start, end, n = spec
    return np.linspace(start, end, int(n))


def figure_spec(figure_id: str, base: SmibParams | None = None) -> FigureSpec:
    """Default scenario for ``figure_id`` on top of ``base``."""
    if figure_id not in FIGURE_IDS:
        raise UnknownFigure(f"unknown figure id {figure_id!r}; choose from {', '.join(FIGURE_IDS)}")
    base = base if base is not None else SmibParams()
    study = base
    table = {
        "fig2": (base, ("p_d", (0.005, 0.010, 0.015, 0.020, 0.025)), ("fig2_curves",)),
        "fig3": (study, ("alpha_factor", (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)), ("fig3_curves",)),
        "fig4": (study, ("d", (4.0, 6.0, 8.0, 10.0, 12.0)), ("fig4_curves",)),
        "fig5a": (study, ("h", (2.5, 3.0, 3.5, 4.0)), ("fig5a_curves",)),
        "fig5b": (study, ("h", (2.5, 3.0, 3.5, 4.0)), ("fig5b_curves",)),
        "fig6": (study, ("p_m", FIG6_PM), ("fig6_curves",)),
        "fig7": (base.with_(p_d=JUMP_PD), ("p_d", (JUMP_PD,)),
                 ("fig7_curve", "fig7_sweep_up", "fig7_sweep_down")),
        "fig8": (study.with_(f_dist_hz=0.55), ("f_dist_hz", (0.55,)),
                 ("fig8_waveforms", "fig8_components")),
        "fig9": (base.with_(p_d=JUMP_PD), ("f_dist_hz", (0.52, 0.55, 0.57)),
                 ("fig9_traces", "fig9_curve")),
        "fig10a": (base.with_(p_d=0.0), ("a0", ()), ("fig10a_ringdown", "fig10a_frequency")),
        "fig10b": (base.with_(d=0.0, f_dist_hz=BEAT_DRIVE_HZ), ("p_d", (0.005, 0.015, 0.025)),
                   ("fig10b_traces",)),
    }
    b, varied, outputs = table[figure_id]
    return FigureSpec(figure_id, b, varied, outputs)


def _member_params(spec: FigureSpec, value) -> SmibParams:
    name = spec.varied[0]
    if spec.figure_id == "fig5b":
        return spec.base.with_(h=value, d=1.5 * value)
    if name == "alpha_factor":
        return spec.base
    return spec.base.with_(**{name: value})


def _curve_summary(curve, osc, params: SmibParams | None) -> dict:
    peak = peak_of_curve(curve)
    lin_curve = resonance_curve(osc.with_(alpha=0.0), curve.sigmas)
    lin_peak = peak_of_curve(lin_curve)
    doc = {
        "alpha": osc.alpha,
        "omega0": osc.omega0,
        "c": osc.c,
        "f": osc.f,
        "natural_freq_hz": osc.natural_hz,
        "peak_freq_hz": peak.freq_hz,
        "peak_amplitude": peak.a_max,
        "linear_peak_freq_hz": lin_peak.freq_hz,
        "frequency_deviation_hz": peak.freq_hz - lin_peak.freq_hz,
        "folds": io.folds_doc(curve),
    }
    if params is not None:
        doc["modal_freq_hz"] = linearize(params).natural_freq_hz
    return doc


def _curve_family(spec: FigureSpec, freqs_hz, with_linear: bool = False):
    name, values = spec.varied
    rows, members = [], []
    for v in values:
        params = _member_params(spec, v)
        osc = to_oscillator(params)
        if name == "alpha_factor":
            osc = osc.with_(alpha=v * osc.alpha)
        sig = sigma_grid_from_hz(osc, freqs_hz)
        variants = [("nonlinear", osc)]
        if with_linear:
            variants.append(("linear", osc.with_(alpha=0.0)))
        for kind, o in variants:
            curve = resonance_curve(o, sig)
            rows.extend(io.curve_rows(curve, prefix=(v, kind)))
            doc = {name: v, "model": kind}
            doc.update(_curve_summary(curve, o, params))
            members.append(doc)
    return rows, members


def _write_family(out: Path, stem: str, name: str, rows) -> Path:
    header = (name, "model") + io.CURVE_HEADER
    return io.write_csv(out / f"{stem}.csv", header, rows)


def _run_family(spec, settings, out):
    grid = settings.wide_grid if spec.figure_id in ("fig5a", "fig5b", "fig6") else settings.curve_grid
    freqs = _grid(grid)
    rows, members = _curve_family(spec, freqs, with_linear=spec.figure_id == "fig2")
    path = _write_family(out, spec.outputs[0], spec.varied[0], rows)
    summary = {"members": members, "freq_grid_hz": list(grid)}
    if spec.figure_id == "fig5b":
        summary["damping_rule"] = "d = 1.5 * h"
    if spec.figure_id == "fig6":
        summary["p_m_values_source"] = "chosen default; not a reported parameter set"
    return [path], summary


def _run_fig7(spec, settings, out):
    params = spec.base
    osc = to_oscillator(params)
    curve_freqs = _grid(settings.curve_grid)
    curve = resonance_curve(osc, sigma_grid_from_hz(osc, curve_freqs))
    sweep_freqs = _grid(settings.sweep_grid)
    kw = dict(dwell_periods=settings.dwell_periods, steps_per_period=settings.steps_per_period)
    up = hysteresis_sweep(params, sweep_freqs, "up", **kw)
    down = hysteresis_sweep(params, sweep_freqs[::-1], "down", **kw)
    files = [
        io.write_curve(out / f"{spec.outputs[0]}.csv", curve),
        io.write_sweep(out / f"{spec.outputs[1]}.csv", up),
        io.write_sweep(out / f"{spec.outputs[2]}.csv", down),
    ]
    ju, jd = sweep_jump(up), sweep_jump(down)
    summary = {
        "p_d": params.p_d,
        "sweep_model": "full swing equation",
        "sweep_grid_hz": list(settings.sweep_grid),
        "folds": io.folds_doc(curve),
        "up_jump": {"freq_hz": ju[0], "size": ju[1]},
        "down_jump": {"freq_hz": jd[0], "size": jd[1]},
        "unconverged_points": sum(not p.converged for p in up.points + down.points),
    }
    summary.update({k: v for k, v in _curve_summary(curve, osc, params).items() if k != "folds"})
    return files, summary


def _run_fig8(spec, settings, out):
    params = spec.base
    osc = to_oscillator(params)
    states = [s for s in steady_states(osc) if s.stable]
    n_per = settings.steps_per_period
    full_tr, full_m = steady_run(params, settings.transient_periods, n_per)
    red_tr, red_m = steady_run(osc, settings.transient_periods, n_per)
    # compare against the stable root the from-rest simulation settled on
    state = min(states, key=lambda s: abs(s.a - full_m.amplitude))
    win = slice(len(full_tr.time) - 3 * n_per - 1, len(full_tr.time))
    t = full_tr.time[win]
    wave, x_ms = reconstruct(state, osc, t)
    comp = wave.components(t)
    files = [
        io.write_csv(out / f"{spec.outputs[0]}.csv",
                     ("time", "x_full", "x_reduced", "x_multiscale"),
                     zip(t, full_tr.deviation[win], red_tr.deviation[win], x_ms)),
        io.write_csv(out / f"{spec.outputs[1]}.csv",
                     ("time", "fundamental", "dc", "second_harmonic"),
                     zip(t, comp["fundamental"], comp["dc"], comp["second_harmonic"])),
    ]
    err = full_tr.deviation[win] - x_ms
    summary = {
        "drive_hz": osc.drive_hz,
        "multiscale": {"amplitude": wave.a, "phase": wave.phi, "dc_offset": wave.dc_offset,
                       "second_harmonic": wave.second_harmonic_amp},
        "full_simulation": _metrics_doc(full_m),
        "reduced_simulation": _metrics_doc(red_m),
        "waveform_max_abs_error": float(np.max(np.abs(err))),
        "waveform_rms_error": float(np.sqrt(np.mean(err**2))),
    }
    return files, summary


def _metrics_doc(m) -> dict:
    return {"amplitude": m.amplitude, "peak_amplitude": m.peak_amplitude,
            "dc_offset": m.dc_offset, "second_harmonic": m.second_harmonic}


def _run_fig9(spec, settings, out):
    params = spec.base
    rows, members = [], []
    for fh in spec.varied[1]:
        p = params.with_(f_dist_hz=fh)
        trace, m = steady_run(p, settings.transient_periods, settings.steps_per_period)
        rows.extend((fh, t, x) for t, x in zip(trace.time, trace.deviation))
        roots = [s.a for s in steady_states(to_oscillator(p)) if s.stable]
        members.append({"f_dist_hz": fh, "amplitude": m.amplitude, "dc_offset": m.dc_offset,
                        "multiscale_stable_roots": roots})
    osc = to_oscillator(params)
    curve = resonance_curve(osc, sigma_grid_from_hz(osc, _grid(settings.curve_grid)))
    files = [
        io.write_csv(out / f"{spec.outputs[0]}.csv", ("f_dist_hz", "time", "x"), rows),
        io.write_curve(out / f"{spec.outputs[1]}.csv", curve),
    ]
    largest = max(members, key=lambda d: d["amplitude"])
    summary = {"members": members, "largest_response_hz": largest["f_dist_hz"]}
    summary.update(_curve_summary(curve, osc, params))
    return files, summary


def ringdown(osc, a0: float, periods: int = RINGDOWN_PERIODS, steps_per_period: int = 200):
    """Unforced reduced-model ring-down started on the first-order wave crest."""
    x0 = a0 + osc.alpha * a0 * a0 / (3 * osc.omega0**2)
    duration = periods * 2 * math.pi / osc.omega0
    return integrate(osc.with_(f=0.0), (x0, 0.0), duration, steps_per_period=steps_per_period)


def first_cycle_hz(osc, a0: float) -> float:
    return float(instantaneous_frequency(ringdown(osc, a0)).freq_hz[0])


def initial_shift(osc, a0: float, edges: str = "both", cycles: int = 6) -> float:
    """Least-squares amplitude D0 of a measured frequency shift D0*exp(-c t).

    The shift is taken against a linear (alpha = 0) ring-down processed by the
    same estimator, which cancels the estimator's own bias.  Native units.
    """
    nl = instantaneous_frequency(ringdown(osc, a0), edges=edges)
    lin = instantaneous_frequency(ringdown(osc.with_(alpha=0.0), a0), edges=edges)
    n = min(cycles, len(nl.freq), len(lin.freq))
    d = nl.freq[:n] - lin.freq[:n]
    w = np.exp(-osc.c * nl.time[:n])
    return float(np.sum(d * w) / np.sum(w * w))


def separatrix_amplitude(osc) -> float:
    """First-order amplitude whose crest reaches the saddle at w0^2/alpha."""
    k = osc.alpha / (3 * osc.omega0**2)
    x_s = osc.omega0**2 / osc.alpha
    return (-1 + math.sqrt(1 + 4 * k * x_s)) / (2 * k)


def search_ringdown_amplitude(osc, offset_hz: float = RINGDOWN_OFFSET_HZ, iters: int = 40,
                              cap: float = 0.9) -> tuple:
    """Smallest a0 whose first-cycle frequency sits ``offset_hz`` below the
    natural frequency, by bisection below ``cap`` times the separatrix
    amplitude.

    Returns ``(a0, reached)``.  When even the capped amplitude does not reach
    the target (damping pulls the first measured cycle back toward the
    natural frequency), the capped amplitude is returned with ``reached``
    False.
    """
    target = osc.natural_hz - offset_hz
    hi = cap * separatrix_amplitude(osc)
    if first_cycle_hz(osc, hi) > target:
        log.warning("first-cycle frequency cannot reach %.4f Hz below a0 = %.4f", target, hi)
        return hi, False
    lo = 0.01
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if first_cycle_hz(osc, mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi, True


def _run_fig10a(spec, settings, out):
    osc = to_oscillator(spec.base)
    a0, reached = search_ringdown_amplitude(osc)
    trace = ringdown(osc, a0, steps_per_period=settings.steps_per_period)
    track = instantaneous_frequency(trace)
    pred = impulse_response(a0, osc, track.time)
    modal = linearize(spec.base).natural_freq_hz
    files = [
        io.write_trace(out / f"{spec.outputs[0]}.csv", trace),
        io.write_csv(out / f"{spec.outputs[1]}.csv",
                     ("time", "freq_native", "freq_hz", "predicted_freq_hz"),
                     zip(track.time, track.freq, track.freq_hz, modal + pred.delta_f_hz)),
    ]
    summary = {
        "a0": a0,
        "a0_rule": f"first-cycle frequency {RINGDOWN_OFFSET_HZ} Hz below natural, by bisection",
        "target_reached": reached,
        "natural_freq_hz": osc.natural_hz,
        "modal_freq_hz": modal,
        "first_cycle_hz": float(track.freq_hz[0]),
        "last_cycle_hz": float(track.freq_hz[-1]),
        "decay_rate_fitted": envelope_decay_rate(trace),
        "decay_rate_predicted": pred.decay_rate,
        "delta_f0_predicted_hz": float(pred.delta_f_hz[0]) if len(pred.t) else None,
        "time_base": trace.time_base,
    }
    return files, summary


def _run_fig10b(spec, settings, out):
    rows, members = [], []
    for pd in spec.varied[1]:
        osc = to_oscillator(spec.base.with_(p_d=pd))
        trace = integrate(osc, rest_state(osc), BEAT_DURATION_S / osc.time_scale,
                          steps_per_period=settings.steps_per_period)
        beat = beat_analysis(trace)
        rows.extend((pd, t, x) for t, x in zip(trace.time, trace.deviation))
        bf = beat.beat_frequency
        members.append({
            "p_d": pd,
            "beat_frequency_native": bf,
            "beat_frequency_hz": None if bf is None else bf * osc.time_scale,
            "max_deviation": float(np.abs(trace.deviation).max()),
            "secular_growth": beat.secular_growth,
        })
    osc = to_oscillator(spec.base)
    summary = {"members": members, "drive_hz": BEAT_DRIVE_HZ, "time_base": osc.time_base,
               "linear_beat_hz": abs(BEAT_DRIVE_HZ - osc.natural_hz)}
    files = [io.write_csv(out / f"{spec.outputs[0]}.csv", ("p_d", "time", "x"), rows)]
    return files, summary


_RUNNERS = {
    "fig7": _run_fig7,
    "fig8": _run_fig8,
    "fig9": _run_fig9,
    "fig10a": _run_fig10a,
    "fig10b": _run_fig10b,
}


def run_figure(spec: FigureSpec, out_dir, settings: FigureSettings | None = None) -> FigureResult:
    """Run one scenario; writes its CSV files and ``<figure_id>_summary.json``."""
    if spec.figure_id not in FIGURE_IDS:
        raise UnknownFigure(f"unknown figure id {spec.figure_id!r}")
    settings = settings or FigureSettings()
    out = Path(out_dir)
    runner = _RUNNERS.get(spec.figure_id, _run_family)
    log.info("running %s", spec.figure_id)
    files, summary = runner(spec, settings, out)
    summary = {"figure_id": spec.figure_id, "varied": spec.varied[0], **summary}
    files.append(io.write_json(out / f"{spec.figure_id}_summary.json", summary))
    return FigureResult(spec.figure_id, files, summary)
