"""Mixing distributions of the random AR(1) coefficient on [0, 1).

Each spec factors its density as

    phi(x) = x^l (1-x)^r s(1-x)

with a smooth, bounded ``s``; :func:`factors` exposes (l, r, s) so integrals
against phi can hand the endpoint singularities to
:func:`aggrolab.quadrature.unit_interval`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
from scipy import special

from . import quadrature
from .errors import SpecError
from .rng import as_stream

__all__ = [
    "BetaType",
    "CanonicalRegVar",
    "Farima",
    "Tabulated",
    "MixingSpec",
    "density",
    "cdf",
    "tail_params",
    "sample_coeff",
    "moment",
    "moment_increment",
    "factors",
    "integrate_against",
    "load_tabulated_csv",
    "farima_innovation_variance",
]


@dataclass(frozen=True)
class BetaType:
    """phi(x) = 2/B(p,q) x^(2p-1) (1-x^2)^(q-1); a^2 ~ Beta(p, q)."""

    p: float
    q: float

    def __post_init__(self):
        if not self.p > 0:
            raise SpecError(f"BetaType p must be > 0, got {self.p}")
        if not self.q > 1:
            raise SpecError(f"BetaType q must be > 1, got {self.q}")


@dataclass(frozen=True)
class CanonicalRegVar:
    """phi(x) = (1+beta)(1-x)^beta."""

    beta: float

    def __post_init__(self):
        if not self.beta > -1:
            raise SpecError(f"CanonicalRegVar beta must be > -1, got {self.beta}")


@dataclass(frozen=True)
class Farima:
    """phi(x) = C(d) x^(d-1) (1-x)^(1-2d) (1+x), the AR(1) mixture behind FARIMA(0,d,0)."""

    d: float
    C: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 < self.d < 0.5:
            raise SpecError(f"Farima d must lie in (0, 1/2), got {self.d}")
        d = self.d
        z = quadrature.unit_interval(lambda u: 2.0 - u, d - 1, 1 - 2 * d, epsrel=1e-13)
        object.__setattr__(self, "C", 1.0 / z)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear density through (x, value) pairs, renormalised to unit mass.

    Left of the first node the first value is held constant.  Right of the
    last node the density continues as value_last * ((1-x)/(1-x_last))^beta
    when ``beta`` is declared, else it is held constant up to 1.
    """

    x: tuple[float, ...]
    values: tuple[float, ...]
    beta: float | None = None
    _norm: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.size < 2 or x.size != y.size:
            raise SpecError("Tabulated needs matching x and value vectors of length >= 2")
        if x[0] < 0 or x[-1] >= 1 or np.any(np.diff(x) <= 0):
            raise SpecError("Tabulated x must be strictly increasing within [0, 1)")
        if np.any(y < 0) or not np.all(np.isfinite(y)):
            raise SpecError("Tabulated values must be finite and non-negative")
        if self.beta is not None and not self.beta > -1:
            raise SpecError("declared beta must be > -1")
        object.__setattr__(self, "x", tuple(float(v) for v in x))
        object.__setattr__(self, "values", tuple(float(v) for v in y))
        total = math.fsum(_tab_cell_masses(x, y, self.beta))
        if not total > 0:
            raise SpecError("Tabulated density has zero mass")
        object.__setattr__(self, "_norm", total)


MixingSpec = Union[BetaType, CanonicalRegVar, Farima, Tabulated]


def load_tabulated_csv(path: str | Path, beta: float | None = None) -> Tabulated:
    """Read a two-column (x, phi(x)) CSV; a non-numeric first row is skipped as a header."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            try:
                x, y = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if i == 0:
                    continue
                raise SpecError(f"{path}: bad row {i + 1}: {row!r}")
            xs.append(x)
            ys.append(y)
    return Tabulated(tuple(xs), tuple(ys), beta)


# --- tabulated helpers ----------------------------------------------------


def _tab_cell_masses(x: np.ndarray, y: np.ndarray, beta) -> list[float]:
    """Masses of [0, x0], each grid cell, and [x_last, 1) for the unnormalised table."""
    masses = [y[0] * x[0]]
    masses.extend((0.5 * (y[:-1] + y[1:]) * np.diff(x)).tolist())
    b = 0.0 if beta is None else beta
    masses.append(y[-1] * (1 - x[-1]) / (1 + b))
    return masses


def _tab_density(spec: Tabulated, x: np.ndarray) -> np.ndarray:
    gx = np.asarray(spec.x)
    gy = np.asarray(spec.values)
    out = np.interp(x, gx, gy)
    tail = x > gx[-1]
    if spec.beta is not None and np.any(tail):
        out = np.where(tail, gy[-1] * ((1 - x) / (1 - gx[-1])) ** spec.beta, out)
    return out / spec._norm


def _tab_cdf(spec: Tabulated, x: np.ndarray) -> np.ndarray:
    gx = np.asarray(spec.x)
    gy = np.asarray(spec.values) / spec._norm
    b = 0.0 if spec.beta is None else spec.beta
    masses = np.array(_tab_cell_masses(gx, gy, spec.beta))
    cum = np.concatenate([[0.0], np.cumsum(masses)])  # at 0, x0, ..., x_last, 1
    out = np.empty_like(x)
    lo = x <= gx[0]
    out[lo] = gy[0] * x[lo]
    hi = x > gx[-1]
    u0 = 1 - gx[-1]
    out[hi] = cum[-2] + gy[-1] * u0 / (1 + b) * (1 - ((1 - x[hi]) / u0) ** (1 + b))
    mid = ~(lo | hi)
    if np.any(mid):
        xm = x[mid]
        i = np.clip(np.searchsorted(gx, xm, side="right") - 1, 0, gx.size - 2)
        h = xm - gx[i]
        slope = (gy[i + 1] - gy[i]) / (gx[i + 1] - gx[i])
        out[mid] = cum[i + 1] + gy[i] * h + 0.5 * slope * h * h
    return out


def _tab_ppf(spec: Tabulated, v: np.ndarray) -> np.ndarray:
    gx = np.asarray(spec.x)
    gy = np.asarray(spec.values) / spec._norm
    b = 0.0 if spec.beta is None else spec.beta
    masses = np.array(_tab_cell_masses(gx, gy, spec.beta))
    cum = np.concatenate([[0.0], np.cumsum(masses)])
    cum = cum / cum[-1]
    out = np.empty_like(v)
    lo = v <= cum[1]
    out[lo] = v[lo] / gy[0] if gy[0] > 0 else gx[0]
    hi = v > cum[-2]
    u0 = 1 - gx[-1]
    rem = (v[hi] - cum[-2]) * (1 + b) / (gy[-1] * u0) if gy[-1] > 0 else np.zeros(int(hi.sum()))
    out[hi] = 1 - u0 * np.clip(1 - rem, 0, 1) ** (1 / (1 + b))
    mid = ~(lo | hi)
    if np.any(mid):
        vm = v[mid]
        i = np.clip(np.searchsorted(cum[1:-1], vm, side="right") - 1, 0, gx.size - 2)
        target = vm - cum[i + 1]
        y0 = gy[i]
        slope = (gy[i + 1] - gy[i]) / (gx[i + 1] - gx[i])
        # solve y0 h + slope h^2 / 2 = target for the root in the cell
        disc = np.maximum(y0 * y0 + 2 * slope * target, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.where(np.abs(slope) > 1e-14, 2 * target / (y0 + np.sqrt(disc)), target / y0)
        out[mid] = gx[i] + np.clip(np.nan_to_num(h), 0, gx[i + 1] - gx[i])
    return np.minimum(out, np.nextafter(1.0, 0.0))


# --- public operations ----------------------------------------------------


def factors(spec: MixingSpec) -> tuple[float, float, Callable[[float], float]]:
    """(l, r, s) with phi(x) = x^l (1-x)^r s(1-x)."""
    if isinstance(spec, BetaType):
        c = 2.0 / special.beta(spec.p, spec.q)
        q1 = spec.q - 1
        return 2 * spec.p - 1, q1, lambda u: c * (2.0 - u) ** q1
    if isinstance(spec, CanonicalRegVar):
        c = 1.0 + spec.beta
        return 0.0, spec.beta, lambda u: c
    if isinstance(spec, Farima):
        C = spec.C
        return spec.d - 1, 1 - 2 * spec.d, lambda u: C * (2.0 - u)
    if isinstance(spec, Tabulated):
        r = 0.0 if spec.beta is None else spec.beta
        u_last = 1 - spec.x[-1]
        tail_const = spec.values[-1] / spec._norm / u_last**r

        def s(u):
            if u < u_last:
                return tail_const
            return float(_tab_density(spec, np.array([1.0 - u]))[0]) / u**r

        return 0.0, r, s
    raise SpecError(f"unknown mixing spec {spec!r}")


def integrate_against(spec: MixingSpec, g: Callable[[float], float], extra_left=0.0, extra_right=0.0, scales=(), **kw) -> float:
    """int_0^1 x^extra_left (1-x)^extra_right g(1-x) phi(x) dx with singularity handling."""
    l, r, s = factors(spec)
    if isinstance(spec, Tabulated):
        kw.setdefault("points", tuple(1 - x for x in spec.x))
    return quadrature.unit_interval(lambda u: g(u) * s(u), l + extra_left, r + extra_right, tuple(scales), **kw)


def density(spec: MixingSpec, x):
    """phi(x) for x in [0, 1)."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr >= 1)) or np.any(~np.isfinite(arr)):
        raise SpecError("density is defined on [0, 1)")
    if isinstance(spec, BetaType):
        out = 2.0 / special.beta(spec.p, spec.q) * arr ** (2 * spec.p - 1) * (1 - arr * arr) ** (spec.q - 1)
    elif isinstance(spec, CanonicalRegVar):
        out = (1 + spec.beta) * (1 - arr) ** spec.beta
    elif isinstance(spec, Farima):
        with np.errstate(divide="ignore"):
            out = spec.C * arr ** (spec.d - 1) * (1 - arr) ** (1 - 2 * spec.d) * (1 + arr)
    elif isinstance(spec, Tabulated):
        out = _tab_density(spec, np.atleast_1d(arr))
        out = out.reshape(arr.shape)
    else:
        raise SpecError(f"unknown mixing spec {spec!r}")
    return float(out) if np.ndim(out) == 0 else out


def cdf(spec: MixingSpec, x):
    arr = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    if isinstance(spec, BetaType):
        out = special.betainc(spec.p, spec.q, arr * arr)
    elif isinstance(spec, CanonicalRegVar):
        out = 1 - (1 - arr) ** (1 + spec.beta)
    elif isinstance(spec, Farima):
        d = spec.d
        out = spec.C * (
            special.beta(d, 2 - 2 * d) * special.betainc(d, 2 - 2 * d, arr)
            + special.beta(d + 1, 2 - 2 * d) * special.betainc(d + 1, 2 - 2 * d, arr)
        )
    elif isinstance(spec, Tabulated):
        out = _tab_cdf(spec, np.atleast_1d(arr)).reshape(arr.shape)
    else:
        raise SpecError(f"unknown mixing spec {spec!r}")
    return float(out) if np.ndim(out) == 0 else out


def tail_params(spec: MixingSpec) -> tuple[float, float]:
    """(c_phi, beta) with phi(x) ~ c_phi (1-x)^beta as x -> 1."""
    if isinstance(spec, BetaType):
        return 2.0 / special.beta(spec.p, spec.q) * 2.0 ** (spec.q - 1), spec.q - 1
    if isinstance(spec, CanonicalRegVar):
        return 1.0 + spec.beta, spec.beta
    if isinstance(spec, Farima):
        return 2.0 * spec.C, 1 - 2 * spec.d
    if isinstance(spec, Tabulated):
        if spec.beta is None:
            raise SpecError("Tabulated mixing needs a declared beta for tail parameters")
        u_last = 1 - spec.x[-1]
        return spec.values[-1] / spec._norm / u_last**spec.beta, spec.beta
    raise SpecError(f"unknown mixing spec {spec!r}")


def sample_coeff(spec: MixingSpec, N: int, stream) -> np.ndarray:
    """N i.i.d. coefficients from the mixing law."""
    if int(N) != N or N < 1:
        raise SpecError(f"N must be a positive integer, got {N}")
    gen = stream if isinstance(stream, np.random.Generator) else as_stream(stream).generator()
    return _sample(spec, int(N), gen)


def _sample(spec: MixingSpec, N: int, gen: np.random.Generator) -> np.ndarray:
    if isinstance(spec, BetaType):
        return np.sqrt(gen.beta(spec.p, spec.q, N))
    if isinstance(spec, CanonicalRegVar):
        u = 1.0 - gen.random(N)
        return -np.expm1(np.log(u) / (1 + spec.beta))
    if isinstance(spec, Farima):
        # two-component Beta mixture: x^(d-1)(1-x)^(1-2d) and x^d (1-x)^(1-2d)
        d = spec.d
        w1 = spec.C * special.beta(d, 2 - 2 * d)
        first = gen.random(N) < w1
        a = gen.beta(d, 2 - 2 * d, N)
        b = gen.beta(d + 1, 2 - 2 * d, N)
        return np.where(first, a, b)
    if isinstance(spec, Tabulated):
        return _tab_ppf(spec, gen.random(N))
    raise SpecError(f"unknown mixing spec {spec!r}")


def moment(spec: MixingSpec, k: int) -> float:
    """mu_k = int x^k phi(x) dx; mu_0 = 1."""
    if k < 0:
        raise SpecError("moment order must be >= 0")
    if k == 0:
        return 1.0
    return integrate_against(spec, lambda u: 1.0, extra_left=k, scales=(1.0 / k,))


def moment_increment(spec: MixingSpec, k: int) -> float:
    """mu_k - mu_{k+1} = int x^k (1-x) phi(x) dx, without subtractive cancellation."""
    if k < 0:
        raise SpecError("moment order must be >= 0")
    return integrate_against(spec, lambda u: 1.0, extra_left=k, extra_right=1.0, scales=(1.0 / max(k, 1),))


def farima_innovation_variance(d: float) -> float:
    """sigma^2 for which the normalised Farima(d) mixture has spectral density (2 pi)^-1 |2 sin(y/2)|^-2d.

    The mixture identity holds with the unnormalised weight sin(pi d)/pi; with a
    unit-mass density the ratio is carried by the innovation variance.
    """
    return math.sin(math.pi * d) / (math.pi * Farima(d).C)
