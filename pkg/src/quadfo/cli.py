"""Command-line entry point: ``quadfo <command> [options]``."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import __version__, io
from .audit import flagged, run_audit
from .config import ConfigError, RunConfig, output_path, resolve
from .experiments import FIGURE_IDS, FigureSettings, figure_spec, run_figure
from .model import ModelDomainError, linearize, to_oscillator
from .multiscale import (
    impulse_response,
    peak_of_curve,
    resonance_curve,
    sigma_grid_from_hz,
    steady_states,
)
from .simulate import (
    DivergenceError,
    TraceTooShort,
    envelope_decay_rate,
    hysteresis_sweep,
    instantaneous_frequency,
    integrate,
    steady_run,
    sweep_jump,
)

log = logging.getLogger("quadfo")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_UNKNOWN_COMMAND = 4

COMMANDS = ("curve", "simulate", "sweep", "impulse", "figure", "audit")
CONFIG_SCHEMA_VERSION = 1

# flag dest -> (config section, key)
FLAG_MAP = {
    "omega_base": ("system", "omega_base_rad_s"),
    "pm": ("system", "p_m_pu"),
    "pmax": ("system", "p_max_pu"),
    "d": ("system", "d_pu"),
    "h": ("system", "h_s"),
    "pd": ("system", "p_d_pu"),
    "freq_hz": ("system", "f_dist_hz"),
    "alpha": ("oscillator", "alpha"),
    "c": ("oscillator", "c"),
    "omega0": ("oscillator", "omega0"),
    "f": ("oscillator", "f"),
    "dwell": ("analysis", "dwell_periods"),
    "steps": ("analysis", "step_per_period"),
    "transient": ("analysis", "transient_periods"),
    "output_dir": ("output", "dir"),
}
GRID_FLAGS = {"grid_start": "start", "grid_end": "end", "grid_points": "points"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("-o", "--output-dir", help="directory for results (default: out)")
    g = p.add_argument_group("system")
    g.add_argument("--omega-base", type=float, help="base angular frequency [rad/s]")
    g.add_argument("--pm", type=float, help="mechanical power [pu]")
    g.add_argument("--pmax", type=float, help="maximum electrical power [pu]")
    g.add_argument("--d", type=float, help="damping [pu]")
    g.add_argument("--h", type=float, help="inertia constant [s]")
    g.add_argument("--pd", type=float, help="disturbance amplitude [pu]")
    g.add_argument("--freq-hz", type=float, help="disturbance frequency [Hz]")
    g = p.add_argument_group("oscillator override (reduced model)")
    for name in ("alpha", "c", "omega0", "f"):
        g.add_argument(f"--{name}", type=float)
    g = p.add_argument_group("analysis")
    g.add_argument("--grid-start", type=float, help="frequency grid start [Hz]")
    g.add_argument("--grid-end", type=float, help="frequency grid end [Hz]")
    g.add_argument("--grid-points", type=int, help="frequency grid points")
    g.add_argument("--dwell", type=int, help="max sweep dwell in drive periods")
    g.add_argument("--steps", type=int, help="integration steps per period")
    g.add_argument("--transient", type=int, help="transient periods skipped")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadfo", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", help="amplitude-frequency curve of the reduced oscillator")
    _common(p)
    p = sub.add_parser("simulate", help="single forced trace plus steady metrics")
    _common(p)
    p.add_argument("--model", choices=("reduced", "full"), default="reduced")
    p.add_argument("--adaptive", action="store_true", help="use the adaptive cross-check integrator")
    p = sub.add_parser("sweep", help="up and down hysteresis sweeps over the frequency grid")
    _common(p)
    p.add_argument("--model", choices=("reduced", "full"), default="full")
    p = sub.add_parser("impulse", help="unforced ring-down and instantaneous frequency")
    _common(p)
    p.add_argument("--a0", type=float, default=0.3, help="initial first-order amplitude")
    p.add_argument("--periods", type=int, default=25, help="natural periods to integrate")
    p = sub.add_parser("figure", help="run a figure scenario")
    p.add_argument("figure_id", choices=FIGURE_IDS)
    _common(p)
    p = sub.add_parser("audit", help="derived parameters against reported values")
    _common(p)
    return parser


def _flags(args) -> dict:
    doc: dict = {}
    for dest, (section, key) in FLAG_MAP.items():
        value = getattr(args, dest, None)
        if value is not None:
            doc.setdefault(section, {})[key] = value
    grid = {k: getattr(args, dest) for dest, k in GRID_FLAGS.items()
            if getattr(args, dest, None) is not None}
    if grid:
        doc.setdefault("analysis", {})["freq_grid_hz"] = grid
    return doc


def _osc_doc(osc) -> dict:
    return {
        "omega0": osc.omega0, "alpha": osc.alpha, "c": osc.c, "f": osc.f,
        "omega_drive": osc.omega_drive, "sigma": osc.sigma, "x_eq": osc.x_eq,
        "time_base": osc.time_base, "time_scale": osc.time_scale,
    }


def meta_doc(cfg: RunConfig, sources: dict, command: str, argv, extra=None) -> dict:
    g = cfg.analysis.freq_grid_hz
    doc = {
        "tool": "quadfo",
        "version": __version__,
        "config_schema_version": CONFIG_SCHEMA_VERSION,
        "command": command,
        "argv": list(argv),
        "config": cfg.to_dict(),
        "sources": sources,
        "grids": {"freq_grid_hz": {"start": g.start, "end": g.end, "points": g.points,
                                   "step": g.step}},
        "oscillator_resolved": _osc_doc(cfg.oscillator()),
        "oscillator_override": dict(cfg.oscillator_override),
    }
    if extra:
        doc.update(extra)
    return doc


def _reduced_or_full(cfg: RunConfig, model: str):
    if model == "full":
        if cfg.oscillator_override:
            raise ConfigError("an oscillator override applies to the reduced model only")
        return cfg.system
    return cfg.oscillator()


def cmd_curve(cfg, args, out):
    osc = cfg.oscillator()
    freqs = cfg.analysis.freq_grid_hz.values()
    curve = resonance_curve(osc, sigma_grid_from_hz(osc, freqs))
    io.write_curve(out / "curve.csv", curve)
    peak = peak_of_curve(curve)
    summary = {
        "peak_freq_hz": peak.freq_hz,
        "peak_amplitude": peak.a_max,
        "natural_freq_hz": osc.natural_hz,
        "folds": io.folds_doc(curve),
    }
    io.write_json(out / "curve_summary.json", summary)
    print(f"peak {peak.a_max:.6g} at {peak.freq_hz:.6g} Hz; {len(curve.folds)} fold(s)")
    return {}


def cmd_simulate(cfg, args, out):
    system = _reduced_or_full(cfg, args.model)
    an = cfg.analysis
    trace, m = steady_run(system, an.transient_periods, an.step_per_period, adaptive=args.adaptive)
    io.write_trace(out / "trace.csv", trace)
    osc = cfg.oscillator()
    roots = [s.a for s in steady_states(osc) if s.stable]
    summary = {
        "model": args.model,
        "drive_hz": osc.drive_hz,
        "steady_amplitude": m.amplitude,
        "peak_amplitude": m.peak_amplitude,
        "dc_offset": m.dc_offset,
        "second_harmonic_amplitude": m.second_harmonic,
        "harmonic_flag": m.harmonic_flag,
        "multiscale_stable_amplitudes": roots,
        "time_base": trace.time_base,
        "integrator": trace.meta["integrator"],
    }
    io.write_json(out / "simulate_summary.json", summary)
    print(f"steady amplitude {m.amplitude:.6g}, dc {m.dc_offset:.6g}, "
          f"second harmonic {m.second_harmonic:.6g}")
    return {"integrator": trace.meta["integrator"], "step": trace.step}


def cmd_sweep(cfg, args, out):
    system = _reduced_or_full(cfg, args.model)
    an = cfg.analysis
    freqs = an.freq_grid_hz.values()
    kw = dict(dwell_periods=an.dwell_periods, steps_per_period=an.step_per_period)
    up = hysteresis_sweep(system, freqs, "up", **kw)
    down = hysteresis_sweep(system, freqs[::-1], "down", **kw)
    io.write_sweep(out / "sweep_up.csv", up)
    io.write_sweep(out / "sweep_down.csv", down)
    osc = cfg.oscillator()
    curve = resonance_curve(osc, sigma_grid_from_hz(osc, freqs))
    ju, jd = sweep_jump(up), sweep_jump(down)
    summary = {
        "model": args.model,
        "up_jump": {"freq_hz": ju[0], "size": ju[1]},
        "down_jump": {"freq_hz": jd[0], "size": jd[1]},
        "folds": io.folds_doc(curve),
        "unconverged_points": sum(not p.converged for p in up.points + down.points),
    }
    io.write_json(out / "sweep_summary.json", summary)
    print(f"up-jump near {ju[0]:.5g} Hz, down-jump near {jd[0]:.5g} Hz")
    return {}


def cmd_impulse(cfg, args, out):
    osc = cfg.oscillator().with_(f=0.0)
    a0 = args.a0
    if not a0 > 0:
        raise ConfigError("--a0 must be positive")
    x0 = a0 + osc.alpha * a0 * a0 / (3 * osc.omega0**2)
    duration = args.periods * 2 * math.pi / osc.omega0
    trace = integrate(osc, (x0, 0.0), duration, steps_per_period=cfg.analysis.step_per_period)
    track = instantaneous_frequency(trace)
    pred = impulse_response(a0, osc, track.time)
    io.write_trace(out / "trace.csv", trace)
    io.write_csv(out / "frequency.csv", ("time", "freq_native", "freq_hz", "predicted_shift_hz"),
                 zip(track.time, track.freq, track.freq_hz, pred.delta_f_hz))
    summary = {
        "a0": a0,
        "natural_freq_hz": osc.natural_hz,
        "first_cycle_hz": float(track.freq_hz[0]),
        "last_cycle_hz": float(track.freq_hz[-1]),
        "decay_rate_fitted": envelope_decay_rate(trace),
        "decay_rate_predicted": pred.decay_rate,
        "time_base": trace.time_base,
    }
    io.write_json(out / "impulse_summary.json", summary)
    print(f"first cycle {summary['first_cycle_hz']:.5g} Hz -> last {summary['last_cycle_hz']:.5g} Hz")
    return {}


def cmd_figure(cfg, args, out):
    if cfg.oscillator_override:
        log.warning("oscillator override ignored by figure scenarios")
    an = cfg.analysis
    settings = FigureSettings(steps_per_period=an.step_per_period,
                              transient_periods=an.transient_periods,
                              dwell_periods=an.dwell_periods)
    res = run_figure(figure_spec(args.figure_id, cfg.system), out, settings)
    for f in res.files:
        print(f)
    return {"figure_id": args.figure_id, "figure_settings": settings.__dict__}


def cmd_audit(cfg, args, out):
    params = cfg.system
    lines = run_audit(params)
    for ln in lines:
        print(ln.render())
    doc = {
        "lines": [ln.__dict__ for ln in lines],
        "flagged": flagged(lines),
        "modal": linearize(params).__dict__,
        "oscillator": _osc_doc(to_oscillator(params)),
    }
    doc["modal"]["eigenvalues"] = [str(e) for e in doc["modal"]["eigenvalues"]]
    io.write_json(out / "audit.json", doc)
    return {}


HANDLERS = {
    "curve": cmd_curve,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "impulse": cmd_impulse,
    "figure": cmd_figure,
    "audit": cmd_audit,
}


def _subcommand(argv) -> str | None:
    for tok in argv:
        if not tok.startswith("-"):
            return tok
    return None


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    cmd = _subcommand(argv)
    if cmd is not None and cmd not in COMMANDS:
        print(f"quadfo: unknown command {cmd!r} (choose from {', '.join(COMMANDS)})",
              file=sys.stderr)
        return EXIT_UNKNOWN_COMMAND
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, sources = resolve(args.config, _flags(args))
        out = output_path(cfg)
        extra = HANDLERS[args.command](cfg, args, out)
        io.write_json(out / "meta.json", meta_doc(cfg, sources, args.command, argv, extra))
    except (ConfigError, ModelDomainError) as exc:
        print(f"quadfo: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"quadfo: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except TraceTooShort as exc:
        print(f"quadfo: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
