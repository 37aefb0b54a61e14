"""Real roots of polynomials of degree <= 3 by closed form plus Newton polish."""
from __future__ import annotations

import math


def discriminant(a: float, b: float, c: float, d: float) -> float:
    """Discriminant of a u^3 + b u^2 + c u + d (positive: three distinct real roots)."""
    return 18 * a * b * c * d - 4 * b**3 * d + b**2 * c**2 - 4 * a * c**3 - 27 * a**2 * d**2


def _polish(coeffs, r: float, iters: int = 2) -> float:
    a, b, c, d = coeffs
    for _ in range(iters):
        p = ((a * r + b) * r + c) * r + d
        dp = (3 * a * r + 2 * b) * r + c
        if dp == 0:
            break
        step = p / dp
        if not math.isfinite(step):
            break
        r -= step
    return r


def _quadratic(b: float, c: float, d: float) -> list[float]:
    if b == 0:
        return [] if c == 0 else [-d / c]
    disc = c * c - 4 * b * d
    if disc < 0:
        return []
    if disc == 0:
        return [-c / (2 * b)]
    # cancellation-free form
    q = -0.5 * (c + math.copysign(math.sqrt(disc), c))
    return sorted([q / b, d / q]) if q != 0 else [0.0]


def _cbrt(v: float) -> float:
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


def _cubic_candidates(a: float, b: float, c: float, d: float) -> list[float]:
    # depressed cubic t^3 + p t + q with u = t - b/(3a)
    bn, cn, dn = b / a, c / a, d / a
    shift = bn / 3
    p = cn - bn * bn / 3
    q = 2 * bn**3 / 27 - bn * cn / 3 + dn
    half_q = q / 2
    third_p = p / 3
    delta = half_q * half_q + third_p**3

    if delta > 0:
        sq = math.sqrt(delta)
        # pick the larger-magnitude cube root to avoid cancellation
        u1 = _cbrt(-half_q - math.copysign(sq, half_q))
        t = u1 - third_p / u1 if u1 != 0 else 0.0
        raw = [t - shift]
    elif delta == 0:
        if p == 0:
            raw = [-shift]
        else:
            raw = [3 * q / p - shift, -3 * q / (2 * p) - shift]
    else:
        m = 2 * math.sqrt(-third_p)
        arg = 3 * q / (p * m)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3
        raw = [m * math.cos(theta - 2 * math.pi * k / 3) - shift for k in range(3)]

    # the dominant root is accurate; the rest come from the deflated quadratic,
    # which keeps small roots next to a large one from cancelling away
    coeffs = (a, b, c, d)
    big = _polish(coeffs, max(raw, key=abs), iters=3)
    cands = [big]
    if big != 0:
        # backward deflation is the stable direction for the largest root
        q0 = -d / big
        cands += _quadratic(a, (q0 - c) / big, q0)
    return cands


def real_roots(a: float, b: float, c: float, d: float, rel_tol: float = 1e-10) -> list[float]:
    """Real roots of a u^3 + b u^2 + c u + d, ascending.

    Leading coefficients that vanish degrade to the quadratic or linear case.
    Otherwise the largest-magnitude closed-form root is deflated out and the
    remaining quadratic solved directly.  Every candidate gets Newton polish
    and is kept only if its residual, relative to the sum of term magnitudes,
    is below ``rel_tol``.
    """
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if scale == 0:
        return []
    if a == 0:
        return _quadratic(b, c, d)
    coeffs = (a, b, c, d)
    if abs(a) < 1e-14 * scale:
        # nearly quadratic: its roots are only kept if the cubic term is
        # negligible there too (the residual filter below decides)
        cands = _quadratic(b, c, d)
    else:
        cands = _cubic_candidates(a, b, c, d)
    roots = []
    for r in cands:
        try:
            r = _polish(coeffs, r)
            mag = abs(a * r**3) + abs(b * r**2) + abs(c * r) + abs(d)
            res = abs(((a * r + b) * r + c) * r + d)
        except OverflowError:
            continue
        if not math.isfinite(mag):
            continue
        if mag == 0 or res <= rel_tol * mag:
            roots.append(r)
    return sorted(roots)
