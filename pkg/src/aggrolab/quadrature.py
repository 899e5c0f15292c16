"""Singularity-aware quadrature on the unit interval.

Integrals in this package have the shape

    int_0^1 x^l (1-x)^r F(x) dx

with algebraic endpoint singularities (mixing densities near 0 and near the
unit root) and an integrand that may vary on a very short scale close to
x = 1 (e.g. x^t for large t, or spectral kernels at low frequency).  The
interval is mapped to u = 1 - x, cut at geometrically spaced breakpoints
around the caller-supplied scales, and the endpoint pieces are handed to
QUADPACK's algebraic-weight rule (QAWS).  Pieces are summed in a fixed order
with compensated summation so results are reproducible bit for bit.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np
from scipy import integrate

EPSABS = 1e-15
EPSREL = 1e-11


def geometric_breaks(scales: Iterable[float], lo_factor: float = 1 / 64, upper: float = 0.5) -> list[float]:
    """Breakpoints s*2^k for each scale s, from s*lo_factor up to `upper`."""
    pts = set()
    for s in scales:
        s = float(s)
        if not np.isfinite(s) or s <= 0:
            continue
        b = s * lo_factor
        while b < upper:
            if b > 1e-300:
                pts.add(b)
            b *= 2.0
    pts.add(upper)
    return sorted(pts)


def unit_interval(
    f: Callable[[float], float],
    left_exp: float = 0.0,
    right_exp: float = 0.0,
    scales: Iterable[float] = (),
    epsabs: float = EPSABS,
    epsrel: float = EPSREL,
    limit: int = 200,
    points: Iterable[float] = (),
) -> float:
    """Integrate x^left_exp (1-x)^right_exp f(u) dx over [0, 1], with u = 1 - x.

    ``f`` receives u (the distance to the unit root) so callers can evaluate
    it without cancellation near x = 1.  Exponents must exceed -1.  Extra
    breakpoints in u (kinks of ``f``) may be passed as ``points``.
    """
    if left_exp <= -1 or right_exp <= -1:
        raise ValueError("endpoint exponents must be > -1")
    l, r = float(left_exp), float(right_exp)
    # only rough endpoint behaviour goes into the QAWS weight; large smooth
    # powers stay in the integrand, where they cannot overflow the moments
    wl = l if l < 1 else 0.0
    wr = r if r < 1 else 0.0
    fl, fr = l - wl, r - wr
    breaks = {b for b in geometric_breaks(scales) if 0 < b < 1}
    breaks.update(float(b) for b in points if 0 < b < 1)
    edges = [0.0] + sorted(breaks) + [1.0]
    kw = dict(epsabs=epsabs, epsrel=epsrel, limit=limit)

    def core(u):
        return u**fr * (1.0 - u) ** fl * f(u)

    parts = []
    last = len(edges) - 2
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        if i == 0 and i == last:
            val = integrate.quad(core, a, b, weight="alg", wvar=(wr, wl), **kw)[0]
        elif i == 0:
            val = integrate.quad(lambda u: (1.0 - u) ** l * u**fr * f(u), a, b, weight="alg", wvar=(wr, 0.0), **kw)[0]
        elif i == last:
            val = integrate.quad(lambda u: u**r * (1.0 - u) ** fl * f(u), a, b, weight="alg", wvar=(0.0, wl), **kw)[0]
        else:
            val = integrate.quad(lambda u: u**r * (1.0 - u) ** l * f(u), a, b, **kw)[0]
        parts.append(val)
    return math.fsum(parts)


def half_line(
    f: Callable[[float], float],
    exponent: float,
    scales: Iterable[float] = (1.0,),
    epsabs: float = EPSABS,
    epsrel: float = EPSREL,
    limit: int = 200,
    tail_exp: float | None = None,
) -> float:
    """Integrate x^exponent f(x) over (0, inf).

    The first piece [0, b0] uses the algebraic weight.  Breakpoints are
    geometric around each scale, spanning 14 octaves either side.  The last
    piece [B, inf) uses QUADPACK's infinite-range rule, or, when the caller
    knows f(x) ~ x^tail_exp at infinity, the substitution x = B/v with the
    resulting v^(-exponent-tail_exp-2) singularity handed to the algebraic
    weight; this copes with slowly decaying tails.
    """
    if exponent <= -1:
        raise ValueError("exponent must be > -1 for integrability at 0")
    pts = set()
    for s in scales:
        s = float(s)
        for k in range(-14, 15):
            pts.add(s * 2.0**k)
    edges = sorted(pts)
    kw = dict(epsabs=epsabs, epsrel=epsrel, limit=limit)
    parts = [integrate.quad(f, 0.0, edges[0], weight="alg", wvar=(exponent, 0.0), **kw)[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        parts.append(integrate.quad(lambda x: x**exponent * f(x), a, b, **kw)[0])
    B = edges[-1]
    if tail_exp is None:
        parts.append(integrate.quad(lambda x: x**exponent * f(x), B, np.inf, **kw)[0])
    else:
        w = -exponent - tail_exp - 2.0
        if w <= -1:
            raise ValueError("tail does not decay fast enough for integrability")

        def g(v):
            x = B / max(v, 1e-30)
            return f(x) * x ** (-tail_exp)

        coef = B ** (exponent + 1 + tail_exp)
        parts.append(coef * integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(w, 0.0), **kw)[0])
    return math.fsum(parts)
