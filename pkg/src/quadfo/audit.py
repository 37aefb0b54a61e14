"""Consistency check of derived parameters against the reported reference values."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ModelDomainError, SmibParams, linearize, to_oscillator

PASS = "PASS"
FLAGGED = "FLAGGED"
INVALID = "INVALID"

# (key, label, reported value, tolerance)
REPORTED = (
    ("alpha", "alpha", 19.63, 0.01),
    ("c", "c", 0.707, 0.001),
    ("omega0", "omega0", 5.5830, 0.01),
    ("eigen_real", "eigenvalue real part", -0.25, 0.005),
    ("eigen_imag", "eigenvalue imag part", 3.60, 0.02),
    ("natural_freq_hz", "natural frequency [Hz]", 0.57, 0.01),
    ("damping_ratio", "damping ratio", 0.07, 0.005),
)
REPORTED_PM = 5.0


@dataclass(frozen=True)
class AuditLine:
    key: str
    label: str
    derived: float | None
    reported: float
    tolerance: float
    status: str
    note: str = ""

    def render(self) -> str:
        d = "n/a" if self.derived is None else f"{self.derived:.5g}"
        text = f"{self.label}: derived {d} vs reported {self.reported:.5g} ({self.status})"
        return f"{text} - {self.note}" if self.note else text


def derived_values(params: SmibParams) -> dict:
    osc = to_oscillator(params)
    modal = linearize(params)
    return {
        "alpha": osc.alpha,
        "c": osc.c,
        "omega0": osc.omega0,
        "eigen_real": modal.eigen_real,
        "eigen_imag": modal.eigen_imag,
        "natural_freq_hz": modal.natural_freq_hz,
        "damping_ratio": modal.damping_ratio,
    }


def run_audit(params: SmibParams) -> list:
    """One line per reported quantity; a derived value off by more than the
    tolerance is FLAGGED, a reported input that admits no equilibrium is
    INVALID."""
    values = derived_values(params)
    lines = []
    for key, label, ref, tol in REPORTED:
        v = values[key]
        ok = v is not None and math.isfinite(v) and abs(v - ref) <= tol
        lines.append(AuditLine(key, label, v, ref, tol, PASS if ok else FLAGGED))
    try:
        SmibParams(p_m=REPORTED_PM, p_max=params.p_max)
        pm_note = ""
        pm_status = PASS
    except ModelDomainError as exc:
        pm_note = f"outside the equilibrium domain ({exc}); {params.p_m} used"
        pm_status = INVALID
    lines.append(AuditLine("p_m", "mechanical power p_m [pu]", params.p_m, REPORTED_PM, 0.0,
                           pm_status, pm_note))
    return lines


def flagged(lines) -> list:
    return [ln.key for ln in lines if ln.status == FLAGGED]
