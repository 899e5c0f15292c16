"""Nearest-neighbour autoregressive random fields on Z^2 and their aggregates.

A field with coefficient A solves

    X(t, s) = A * sum_{(u,v)} p(u, v) X(t-u, s-v) + eps(t, s)

over the variant's neighbour set, so X = sum g(u, v) eps(t-u, s-v) with the
lattice Green function g(t, s, A) = sum_k A^k p_k(t, s) of the random walk
that steps by the neighbour offsets.  Arrays indexed by offsets use a square
window [-R, R]^2 with (0, 0) at index (R, R); the first axis is t.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft, signal

from . import innovations as inn
from . import mixing as mix
from .errors import ResourceCapError, SpecError
from .io import fmt, spec_to_dict, write_csv
from .parallel import pmap, resolve_workers
from .rng import Stream, as_stream

__all__ = [
    "VARIANTS",
    "FieldModel",
    "GreenTable",
    "FieldPanel",
    "step_probs",
    "walk_probs",
    "green",
    "green_kernel",
    "simulate_field_panel",
    "field_spectral_density",
    "scaling_exponents",
    "partial_sums",
    "rectangle_sum",
    "increment",
    "scaled_rectangle",
    "write_green_csv",
    "save_field",
    "RADIAL_CAP",
    "K_CAP",
]

VARIANTS = ("2N", "3N", "4N")
RADIAL_CAP = 1 - 1e-3
K_CAP = 20000
TORUS_CAP = 4096
FIELD_BLOCK = 8

_STEPS = {
    "2N": {(1, 0): 0.5, (0, 1): 0.5},
    "3N": {(1, 0): 1 / 3, (0, 1): 1 / 3, (0, -1): 1 / 3},
    "4N": {(1, 0): 0.25, (-1, 0): 0.25, (0, 1): 0.25, (0, -1): 0.25},
}


def _variant(v) -> str:
    v = str(v).upper().replace("TWON", "2N").replace("THREEN", "3N").replace("FOURN", "4N")
    if v not in _STEPS:
        raise SpecError(f"unknown field variant {v!r}; choose from {VARIANTS}")
    return v


def step_probs(variant) -> dict[tuple[int, int], float]:
    """Neighbour offset -> probability for the walk of the given variant."""
    return dict(_STEPS[_variant(variant)])


@dataclass(frozen=True)
class FieldModel:
    variant: str
    mixing: object
    innovation: object = field(default_factory=inn.Gaussian)

    def __post_init__(self):
        object.__setattr__(self, "variant", _variant(self.variant))
        alpha = inn.index_of(self.innovation)
        if not 1 < alpha <= 2:
            raise SpecError(f"field innovations need index in (1, 2], got {alpha}")


def _step(arr: np.ndarray, steps: dict) -> np.ndarray:
    """One walk step on a window: out(t, s) = sum p(u, v) arr(t-u, s-v); mass leaving is dropped."""
    out = np.zeros_like(arr)
    n0, n1 = arr.shape
    for (u, v), p in steps.items():
        dst = out[max(u, 0) : n0 + min(u, 0), max(v, 0) : n1 + min(v, 0)]
        src = arr[max(-u, 0) : n0 + min(-u, 0), max(-v, 0) : n1 + min(-v, 0)]
        dst += p * src
    return out


def walk_probs(variant, k_max: int, R: int) -> np.ndarray:
    """(k_max+1, 2R+1, 2R+1) array of k-step probabilities p_k(t, s)."""
    steps = step_probs(variant)
    if k_max < 0:
        raise SpecError("k_max must be >= 0")
    if R < k_max:
        raise SpecError(f"window radius {R} < k_max {k_max}: mass would leave the window")
    out = np.zeros((k_max + 1, 2 * R + 1, 2 * R + 1))
    out[0, R, R] = 1.0
    for k in range(k_max):
        out[k + 1] = _step(out[k], steps)
    return out


@dataclass
class GreenTable:
    variant: str
    a: float
    R: int
    K: int
    values: np.ndarray  # (2R+1, 2R+1)
    bound: float

    def at(self, t: int, s: int) -> float:
        return float(self.values[self.R + t, self.R + s])


def _series_length(a: float, tol: float) -> int:
    if a == 0:
        return 0
    # smallest K with a^(K+1) / (1-a) <= tol
    return max(0, math.ceil(math.log(tol * (1 - a)) / math.log(a) - 1))


def green(variant, a: float, R: int | None = None, tol: float = 1e-10, k_cap: int = K_CAP) -> GreenTable:
    """Truncated series g = sum_{k<=K} a^k p_k on the window [-R, R]^2.

    K is the least integer with a^(K+1)/(1-a) <= tol.  ``R`` defaults to K
    (no walk mass leaves the window); with a smaller window the mass that
    leaves is added to the stored truncation bound.
    """
    variant = _variant(variant)
    if not 0 <= a < 1:
        raise SpecError(f"a must lie in [0, 1), got {a}")
    if not tol > 0:
        raise SpecError("tol must be > 0")
    K = _series_length(a, tol)
    if K > k_cap:
        raise ResourceCapError(f"series length {K} exceeds the cap {k_cap}; a is too close to 1")
    R = K if R is None else int(R)
    steps = step_probs(variant)
    cur = np.zeros((2 * R + 1, 2 * R + 1))
    cur[R, R] = 1.0
    g = cur.copy()
    lost = []
    w = 1.0
    for _ in range(K):
        nxt = _step(cur, steps)
        w *= a
        lost.append(w * (float(cur.sum()) - float(nxt.sum())))
        cur = nxt
        g += w * cur
    # series tail, walk mass that left the window, and round-off of the K+1 accumulations
    rounding = 8 * (K + 2) * np.finfo(float).eps / (1 - a)
    bound = (a ** (K + 1) / (1 - a) if a > 0 else 0.0) + math.fsum(lost) / (1 - a) + rounding
    return GreenTable(variant, float(a), R, K, g, bound)


def _symbol(variant, x, y):
    """(1 - Re p_hat, Im p_hat) of the step distribution, without cancellation."""
    c = 0.0
    s = 0.0
    for (u, v), p in step_probs(variant).items():
        ph = x * u + y * v
        c = c + p * 2.0 * np.sin(ph / 2) ** 2
        s = s + p * np.sin(ph)
    return c, s


def green_kernel(variant, a: float, tol: float = 1e-8, torus_cap: int = TORUS_CAP) -> np.ndarray:
    """Green function for simulation, by Fourier inversion of 1/(1 - a p_hat) on a torus.

    The torus side doubles until the l1 mass outside the central half is
    below tol relative to the total 1/(1-a); the kernel is then cropped to
    the smallest square [-R, R]^2 leaving out at most tol of the mass.
    """
    variant = _variant(variant)
    if not 0 <= a < 1:
        raise SpecError(f"a must lie in [0, 1), got {a}")
    if a == 0:
        return np.ones((1, 1))
    total = 1 / (1 - a)
    M = 32
    while True:
        w = 2 * np.pi * fft.fftfreq(M)
        c, s = _symbol(variant, w[:, None], w[None, :])
        # p_hat(w) = sum p e^{-i w.step}: 1 - a p_hat = 1 - a (1 - c) + i a s
        ker = fft.ifft2(1.0 / ((1 - a) + a * c + 1j * a * s)).real
        ker = fft.fftshift(ker)
        h = M // 2
        q = M // 4
        inner = np.abs(ker[h - q : h + q + 1, h - q : h + q + 1]).sum()
        if np.abs(ker).sum() - inner <= tol * total:
            break
        M *= 2
        if M > torus_cap:
            raise ResourceCapError(f"Green kernel for a={a} needs a torus larger than {torus_cap}")
    absk = np.abs(ker)
    for R in range(0, h + 1):
        inside = absk[h - R : h + R + 1, h - R : h + R + 1].sum()
        if total - inside <= tol * total:
            break
    return ker[h - R : h + R + 1, h - R : h + R + 1]


# --- simulation -----------------------------------------------------------


@dataclass
class FieldPanel:
    aggregate: np.ndarray  # (L, L), normalised by N^(1/alpha)
    coeffs: np.ndarray
    radii: np.ndarray
    clipped: int
    exponent: float
    lineage: dict
    fields: np.ndarray | None = None  # (N, L, L) when kept


def _field_rows(model: FieldModel, L: int, stream: Stream, start: int, stop: int, tol: float, fixed_coeff, keep: bool):
    acc = np.zeros((L, L))
    kept = [] if keep else None
    coeffs, radii = [], []
    clipped = 0
    for i in range(start, stop):
        gen = stream.child(i).generator()
        a = float(fixed_coeff) if fixed_coeff is not None else float(mix._sample(model.mixing, 1, gen)[0])
        if a > RADIAL_CAP:
            a = RADIAL_CAP
            clipped += 1
        ker = green_kernel(model.variant, a, tol)
        R = ker.shape[0] // 2
        side = L + 2 * R
        eps = inn.draw(model.innovation, side * side, gen).reshape(side, side)
        x = signal.fftconvolve(eps, ker, mode="valid") if R else eps.copy()
        acc += x
        if keep:
            kept.append(x)
        coeffs.append(a)
        radii.append(R)
    return acc, kept, coeffs, radii, clipped


def simulate_field_panel(
    model: FieldModel,
    L: int,
    N: int,
    stream,
    workers: int | None = None,
    tol: float = 1e-8,
    fixed_coeff: float | None = None,
    keep_fields: bool = False,
    max_cells: int = 2 * 10**8,
) -> FieldPanel:
    """N independent fields on an L x L window and their N^(-1/alpha)-normalised sum.

    Field i draws its coefficient and innovations from ``stream.child(i)``;
    its Green kernel covers all but ``tol`` of the l1 mass and the innovation
    grid carries a halo of the kernel radius.
    """
    L = inn._check_n(L)
    N = inn._check_n(N)
    if keep_fields and N * L * L > max_cells:
        raise ResourceCapError(f"keeping {N} fields of {L}x{L} exceeds the cap of {max_cells} cells")
    if fixed_coeff is not None and not 0 <= fixed_coeff < 1:
        raise SpecError("fixed_coeff must lie in [0, 1)")
    stream = as_stream(stream)
    w = resolve_workers(workers)
    # blocks of fixed size so that the order of floating-point sums does not
    # depend on the worker count
    blocks = [(a, min(a + FIELD_BLOCK, N)) for a in range(0, N, FIELD_BLOCK)]
    tasks = [(model, L, stream, a, b, tol, fixed_coeff, keep_fields) for a, b in blocks]
    parts = pmap(_field_rows, tasks, w)
    total = np.zeros((L, L))
    for p in parts:  # fixed order: independent of the worker count
        total += p[0]
    alpha = inn.index_of(model.innovation)
    e = 1 / alpha
    fields = np.stack([f for p in parts for f in p[1]]) if keep_fields else None
    return FieldPanel(
        total / N**e,
        np.array([c for p in parts for c in p[2]]),
        np.array([r for p in parts for r in p[3]], dtype=int),
        sum(p[4] for p in parts),
        e,
        stream.lineage,
        fields,
    )


# --- spectral density and scaling ----------------------------------------


def field_spectral_density(variant, mixing, sigma2: float, x: float, y: float) -> float:
    """(sigma2/(2 pi)^2) E_A |1 - A p_hat(x, y)|^-2 by quadrature over the mixing law.

    ``mixing`` may be None for the degenerate law A = 0.
    """
    variant = _variant(variant)
    if abs(x) > math.pi + 1e-12 or abs(y) > math.pi + 1e-12:
        raise SpecError("frequencies must lie in [-pi, pi]")
    pref = sigma2 / (2 * math.pi) ** 2
    if mixing is None:
        return pref
    c, s = _symbol(variant, float(x), float(y))
    if c == 0 and s == 0:
        if mix.factors(mixing)[1] <= 1:
            raise SpecError("spectral density diverges at the origin for beta <= 1")
        return pref * mix.integrate_against(mixing, lambda u: 1.0, extra_right=-2.0)

    # |1 - a p_hat|^2 with a = 1 - u: (u + (1-u) c)^2 + ((1-u) s)^2
    def g(u):
        re = u + (1 - u) * c
        im = (1 - u) * s
        return 1.0 / (re * re + im * im)

    scales = [v for v in (c, abs(s)) if v > 0]
    return pref * mix.integrate_against(mixing, g, scales=scales)


def scaling_exponents(variant, alpha: float, beta: float) -> tuple[float, float, bool]:
    """(H1, H2, isotropic) of the normalised rectangle sums of the aggregated field."""
    variant = _variant(variant)
    if not 1 < alpha <= 2:
        raise SpecError("alpha must lie in (1, 2]")
    if not 0 < beta < alpha - 1:
        raise SpecError("beta must lie in (0, alpha - 1)")
    if variant == "4N":
        h = 2 * (alpha - beta) / alpha
        return h, h, True
    h1 = (0.5 + alpha - beta) / alpha
    return h1, 2 * h1, False


# --- rectangle sums -------------------------------------------------------


def partial_sums(field_sample: np.ndarray) -> np.ndarray:
    """Summed-area table V with V[i, j] = sum of X over [0, i) x [0, j)."""
    x = np.asarray(field_sample, dtype=float)
    if x.ndim != 2:
        raise SpecError("field sample must be two-dimensional")
    V = np.zeros((x.shape[0] + 1, x.shape[1] + 1))
    V[1:, 1:] = x.cumsum(axis=0).cumsum(axis=1)
    return V


def increment(V: np.ndarray, corners) -> float:
    """Double difference of V over the rectangle [t0, t1) x [s0, s1)."""
    t0, s0, t1, s1 = (int(c) for c in corners)
    if not (0 <= t0 <= t1 < V.shape[0] and 0 <= s0 <= s1 < V.shape[1]):
        raise SpecError(f"rectangle {corners} lies outside the sample")
    return float(V[t1, s1] - V[t0, s1] - V[t1, s0] + V[t0, s0])


def rectangle_sum(field_sample: np.ndarray, corners) -> float:
    """Sum of the field over [t0, t1) x [s0, s1), corners = (t0, s0, t1, s1)."""
    return increment(partial_sums(field_sample), corners)


def scaled_rectangle(n: int, x: float, y: float, H1: float, H2: float) -> tuple[int, int, int, int]:
    """Corners of [0, n x) x [0, n^(H1/H2) y)."""
    return 0, 0, int(math.floor(n * x)), int(math.floor(n ** (H1 / H2) * y))


# --- export ---------------------------------------------------------------


def write_green_csv(table: GreenTable, path) -> Path:
    R = table.R
    rows = ((t, s, fmt(table.values[R + t, R + s])) for t in range(-R, R + 1) for s in range(-R, R + 1) if abs(t) + abs(s) <= R)
    return write_csv(path, ["t", "s", "g"], rows)


def save_field(grid: np.ndarray, stem, meta: dict | None = None) -> list[Path]:
    stem = Path(stem)
    gp = stem.with_name(stem.name + ".npy")
    jp = stem.with_name(stem.name + ".json")
    np.save(gp, np.asarray(grid))
    info = {"shape": list(np.shape(grid))}
    if meta:
        info.update({k: (spec_to_dict(v) if hasattr(v, "__dataclass_fields__") else v) for k, v in meta.items()})
    jp.write_text(json.dumps(info, indent=2, sort_keys=True, default=float) + "\n")
    return [gp, jp]
