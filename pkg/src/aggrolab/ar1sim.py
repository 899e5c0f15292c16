"""Random-coefficient AR(1) panels and their aggregates.

A panel row is X_i(t) = a_i X_i(t-1) + zeta_i(t), t = 1..n, started in its
stationary law.  Row i draws its coefficient and innovations from the keyed
stream ``stream.child(i)``, so a panel is the same array whatever the worker
count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import signal

from . import innovations as inn
from . import mixing as mix
from .errors import ResourceCapError, SpecError
from .io import fmt, innovation_from_dict, mixing_from_dict, spec_to_dict, write_csv
from .parallel import chunk_ranges, pmap, resolve_workers
from .rng import Stream, as_stream

__all__ = [
    "Panel",
    "AggregatedSeries",
    "GrowthCase",
    "simulate_ar1",
    "simulate_panel",
    "aggregate",
    "joint_sum",
    "growth_case",
    "burn_in_length",
    "save_panel",
    "load_panel",
    "write_aggregate_csv",
    "COEFF_CAP",
    "MAX_CELLS",
]

COEFF_CAP = 1 - 1e-12
BURN_TOL = 1e-12
BURN_CAP = 10**6
MAX_CELLS = 2 * 10**8
GROWTH_HIGH = 1e2
GROWTH_LOW = 1e-2


def burn_in_length(a: float) -> int:
    """Steps until a^k <= 1e-12, capped at 10^6."""
    if a <= 0:
        return 0
    return min(BURN_CAP, math.ceil(math.log(BURN_TOL) / math.log(a)))


def _has_exact_start(spec) -> bool:
    if isinstance(spec, inn.Gaussian):
        return True
    if isinstance(spec, inn.Stable):
        return spec.alpha != 1 or spec.skew == 0
    return False


def _path(a: float, spec, n: int, gen: np.random.Generator, array_size: int = 1) -> np.ndarray:
    zeta = inn.draw(spec, n, gen, array_size)
    if a == 0:
        return zeta
    if isinstance(spec, inn.Gaussian):
        x0 = spec.sigma / math.sqrt(1 - a * a) * gen.standard_normal()
    elif _has_exact_start(spec):
        # sum_j a^j zeta_j is stable with the same skew and scale (1-a^alpha)^(-1/alpha)
        scale = spec.scale * (1 - a**spec.alpha) ** (-1 / spec.alpha)
        x0 = float(inn.draw(inn.Stable(spec.alpha, spec.skew, scale), 1, gen)[0])
    else:
        burn = inn.draw(spec, burn_in_length(a), gen, array_size)
        x0 = float(signal.lfilter([1.0], [1.0, -a], burn)[-1]) if burn.size else 0.0
    out, _ = signal.lfilter([1.0], [1.0, -a], zeta, zi=[a * x0])
    return out


def simulate_ar1(a: float, innovation, n: int, stream) -> np.ndarray:
    """Stationary AR(1) path of length n with coefficient a in [0, 1)."""
    if not 0 <= a < 1:
        raise SpecError(f"coefficient must lie in [0, 1), got {a}")
    n = inn._check_n(n)
    gen = stream if isinstance(stream, np.random.Generator) else as_stream(stream).generator()
    return _path(float(a), innovation, n, gen)


@dataclass
class Panel:
    values: np.ndarray  # (N, n)
    coeffs: np.ndarray  # (N,)
    innovation: object
    mixing: object
    lineage: dict
    clipped: int = 0

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


def _panel_rows(mixing, innovation, N: int, n: int, stream: Stream, start: int, stop: int, fixed_coeff):
    vals = np.empty((stop - start, n))
    coeffs = np.empty(stop - start)
    clipped = 0
    for row, i in enumerate(range(start, stop)):
        gen = stream.child(i).generator()
        if fixed_coeff is None:
            a = float(mix._sample(mixing, 1, gen)[0])
        else:
            a = float(fixed_coeff)
        if a > COEFF_CAP:
            a = COEFF_CAP
            clipped += 1
        coeffs[row] = a
        vals[row] = _path(a, innovation, n, gen, N)
    return vals, coeffs, clipped


def simulate_panel(
    mixing,
    innovation,
    N: int,
    n: int,
    stream,
    workers: int | None = None,
    max_cells: int = MAX_CELLS,
    fixed_coeff: float | None = None,
) -> Panel:
    """N independent stationary paths with coefficients drawn from ``mixing``.

    ``fixed_coeff`` replaces the mixing draw by a constant (degenerate mixing),
    which is convenient for white-noise and single-coefficient checks.
    IdTriplet innovations are drawn as the N-th convolution root.
    """
    N = inn._check_n(N)
    n = inn._check_n(n)
    if N * n > max_cells:
        raise ResourceCapError(f"panel of {N} x {n} exceeds the cap of {max_cells} cells")
    if fixed_coeff is not None and not 0 <= fixed_coeff < 1:
        raise SpecError("fixed_coeff must lie in [0, 1)")
    stream = as_stream(stream)
    w = resolve_workers(workers)
    tasks = [(mixing, innovation, N, n, stream, a, b, fixed_coeff) for a, b in chunk_ranges(N, 4 * w)]
    parts = pmap(_panel_rows, tasks, w)
    values = np.concatenate([p[0] for p in parts])
    coeffs = np.concatenate([p[1] for p in parts])
    clipped = sum(p[2] for p in parts)
    return Panel(values, coeffs, innovation, mixing, stream.lineage, clipped)


# --- aggregation ----------------------------------------------------------

SCHEMES = ("finite-variance", "stable", "degenerate-check", "triangular")


@dataclass
class AggregatedSeries:
    values: np.ndarray
    exponent: float
    scheme: str
    N: int = 1
    meta: dict = field(default_factory=dict)


def _finite_var(spec) -> bool:
    return np.isfinite(inn.variance_of(spec))


def aggregate(panel: Panel, scheme: str = "finite-variance", beta: float | None = None) -> AggregatedSeries:
    """Column sums divided by N^exponent.

    finite-variance: 1/2; stable: 1/alpha; degenerate-check: 1/(alpha(1+beta))
    with beta from the mixing tail unless given; triangular: 0 (IdTriplet rows
    are already convolution roots).
    """
    spec = panel.innovation
    if scheme == "finite-variance":
        if not _finite_var(spec):
            raise SpecError("finite-variance scheme needs finite-variance innovations")
        e = 0.5
    elif scheme in ("stable", "degenerate-check"):
        if not isinstance(spec, (inn.Stable, inn.DomainAttraction)):
            raise SpecError(f"{scheme} scheme needs Stable or DomainAttraction innovations")
        alpha = spec.alpha
        if scheme == "stable":
            e = 1 / alpha
        else:
            if beta is None:
                beta = mix.tail_params(panel.mixing)[1]
            if not -1 < beta < 0:
                raise SpecError("degenerate-check scheme needs a tail exponent in (-1, 0)")
            e = 1 / (alpha * (1 + beta))
    elif scheme == "triangular":
        if not isinstance(spec, inn.IdTriplet):
            raise SpecError("triangular scheme needs IdTriplet innovations")
        e = 0.0
    else:
        raise SpecError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    N = panel.N
    vals = panel.values.sum(axis=0) / N**e
    return AggregatedSeries(vals, e, scheme, N)


def joint_sum(panel: Panel, tau_grid: Sequence[float]) -> np.ndarray:
    """S(tau) = sum_i sum_{t <= [n tau]} X_i(t), unnormalised."""
    taus = np.asarray(tau_grid, dtype=float)
    if taus.size == 0:
        raise SpecError("tau grid is empty")
    if np.any((taus <= 0) | (taus > 1)):
        raise SpecError("tau values must lie in (0, 1]")
    col = panel.values.sum(axis=0)
    cums = np.concatenate([[0.0], np.cumsum(col)])
    idx = np.floor(panel.n * taus + 1e-12).astype(int)
    return cums[idx]


@dataclass(frozen=True)
class GrowthCase:
    case: str
    ratio: float
    mu: float | None
    normalization: str
    norm_value: float


def growth_case(N: int, n: int, beta: float) -> GrowthCase:
    """Classify joint growth by r = N^(1/(1+beta)) / n.

    r >= 100: fast growth (j), normaliser N^(1/2) n^(1-beta/2);
    r <= 0.01: slow growth (jj), normaliser N^(1/(1+beta)) n^(1/2);
    otherwise intermediate (jjj), same normaliser as jj with mu = r.
    """
    if N < 1 or n < 1:
        raise SpecError("N and n must be >= 1")
    if not -1 < beta <= 1:
        raise SpecError(f"beta must lie in (-1, 1], got {beta}")
    log_r = math.log(N) / (1 + beta) - math.log(n)
    r = math.exp(log_r)
    if r >= GROWTH_HIGH:
        return GrowthCase("j", r, None, "N^(1/2) n^(1-beta/2)", math.sqrt(N) * n ** (1 - beta / 2))
    norm = N ** (1 / (1 + beta)) * math.sqrt(n)
    if r <= GROWTH_LOW:
        return GrowthCase("jj", r, None, "N^(1/(1+beta)) n^(1/2)", norm)
    return GrowthCase("jjj", r, r, "N^(1/(1+beta)) n^(1/2)", norm)


# --- storage --------------------------------------------------------------


def save_panel(panel: Panel, stem: str | Path) -> list[Path]:
    """Write <stem>.values.npy, <stem>.coeffs.npy and a <stem>.json sidecar."""
    stem = Path(stem)
    vp = stem.with_name(stem.name + ".values.npy")
    cp = stem.with_name(stem.name + ".coeffs.npy")
    jp = stem.with_name(stem.name + ".json")
    np.save(vp, panel.values)
    np.save(cp, panel.coeffs)
    meta = {
        "shape": list(panel.values.shape),
        "mixing": spec_to_dict(panel.mixing),
        "innovation": spec_to_dict(panel.innovation),
        "lineage": panel.lineage,
        "clipped": int(panel.clipped),
    }
    jp.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return [vp, cp, jp]


def load_panel(stem: str | Path) -> Panel:
    stem = Path(stem)
    meta = json.loads(stem.with_name(stem.name + ".json").read_text())
    values = np.load(stem.with_name(stem.name + ".values.npy"))
    coeffs = np.load(stem.with_name(stem.name + ".coeffs.npy"))
    return Panel(
        values,
        coeffs,
        innovation_from_dict(meta["innovation"]),
        mixing_from_dict(meta["mixing"]),
        meta["lineage"],
        meta["clipped"],
    )


def write_aggregate_csv(series: AggregatedSeries, path: str | Path) -> Path:
    return write_csv(path, ["t", "value"], ((t + 1, fmt(v)) for t, v in enumerate(series.values)))
