"""Innovation laws: Gaussian, stable, stable domain of attraction and
infinitely divisible triangular arrays.

Samplers take a :class:`~aggrolab.rng.Stream` (or, for internal callers, a
ready :class:`numpy.random.Generator`) and are deterministic given it.

Stable laws use the S1 parameterisation: for ``alpha != 1``

    log E exp(i theta X) = -|scale*theta|^alpha (1 - i skew sign(theta) tan(pi alpha/2))

so that ``alpha=2`` is N(0, 2 scale^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate, special

from .errors import ResourceCapError, SpecError
from .rng import as_stream

__all__ = [
    "Gaussian",
    "Stable",
    "DomainAttraction",
    "LevySmallJumpSpec",
    "IdTriplet",
    "InnovationSpec",
    "sample_gaussian",
    "sample_stable",
    "stable_cf",
    "stable_log_cf",
    "sample_domain_attraction",
    "domain_attraction_scale",
    "sample_id_array",
    "id_log_cf",
    "draw",
    "index_of",
    "variance_of",
]

MAX_JUMPS = 5 * 10**7


@dataclass(frozen=True)
class Gaussian:
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise SpecError(f"Gaussian sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class Stable:
    alpha: float
    skew: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        _check_stable(self.alpha, self.skew, self.scale)


@dataclass(frozen=True)
class DomainAttraction:
    """Symmetrised Pareto: P(|zeta| > x) = tail_const * x^-alpha beyond tail_const^(1/alpha)."""

    alpha: float
    tail_const: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise SpecError(f"domain-of-attraction alpha must lie in (0, 2), got {self.alpha}")
        if not self.tail_const > 0:
            raise SpecError("tail_const must be > 0")


@dataclass(frozen=True)
class LevySmallJumpSpec:
    """Canonical Levy density c_plus*alpha0*x^(-alpha0-1) on (0, cutoff), mirrored with c_minus.

    ``big_jump_tail`` is a finite list of (location, mass) atoms with
    |location| >= cutoff.
    """

    alpha0: float
    c_plus: float = 1.0
    c_minus: float = 1.0
    cutoff: float = 1.0
    big_jump_tail: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not 0 < self.alpha0 < 2:
            raise SpecError(f"alpha0 must lie in (0, 2), got {self.alpha0}")
        if self.c_plus < 0 or self.c_minus < 0 or self.c_plus + self.c_minus <= 0:
            raise SpecError("need c_plus, c_minus >= 0 with c_plus + c_minus > 0")
        if not 0 < self.cutoff <= 1:
            raise SpecError("cutoff must lie in (0, 1]")
        for loc, mass in self.big_jump_tail:
            if mass < 0 or abs(loc) < self.cutoff:
                raise SpecError("big-jump atoms need mass >= 0 and |location| >= cutoff")

    def tail_mass(self, eps: float) -> tuple[float, float]:
        """Masses of the density part on (eps, cutoff) and (-cutoff, -eps)."""
        if eps >= self.cutoff:
            return 0.0, 0.0
        m = eps ** -self.alpha0 - self.cutoff ** -self.alpha0
        return self.c_plus * m, self.c_minus * m

    def second_moment_below(self, eps: float) -> float:
        """int_{|x|<eps} x^2 pi(dx) for the density part."""
        e = min(eps, self.cutoff)
        a = self.alpha0
        return (self.c_plus + self.c_minus) * a * e ** (2 - a) / (2 - a)

    def first_moment_between(self, eps: float) -> float:
        """int_{eps<=|x|<cutoff} x pi(dx); used for the |x|<=1 compensator."""
        if eps >= self.cutoff:
            return 0.0
        a = self.alpha0
        if abs(a - 1) < 1e-12:
            m = math.log(self.cutoff / eps)
        else:
            m = a * (self.cutoff ** (1 - a) - eps ** (1 - a)) / (1 - a)
        return (self.c_plus - self.c_minus) * m


@dataclass(frozen=True)
class IdTriplet:
    """Infinitely divisible law with Levy triplet (mu, sigma, pi).

    pi is the canonical small-jump density of ``levy`` (optional) plus the
    finite atom list ``atoms`` of (location, mass) pairs.  Small jumps with
    |x| < ``epsilon`` are replaced by a centred Gaussian of matched variance
    when sampling.
    """

    mu: float = 0.0
    sigma: float = 0.0
    levy: LevySmallJumpSpec | None = None
    atoms: tuple[tuple[float, float], ...] = ()
    epsilon: float = 1e-3
    finite_variance: bool = True

    def __post_init__(self):
        if self.sigma < 0:
            raise SpecError("IdTriplet sigma must be >= 0")
        if not 0 < self.epsilon <= 1:
            raise SpecError("epsilon must lie in (0, 1]")
        for loc, mass in self.atoms:
            if mass < 0 or loc == 0:
                raise SpecError("atoms need mass >= 0 and non-zero location")
        if self.finite_variance and not np.isfinite(self.jump_second_moment()):
            raise SpecError("Levy measure has infinite second moment")

    def all_atoms(self) -> tuple[tuple[float, float], ...]:
        extra = self.levy.big_jump_tail if self.levy is not None else ()
        return tuple(self.atoms) + tuple(extra)

    def jump_second_moment(self) -> float:
        """int x^2 pi(dx)."""
        total = sum(m * x * x for x, m in self.all_atoms())
        if self.levy is not None:
            total += self.levy.second_moment_below(self.levy.cutoff)
        return total

    @property
    def variance(self) -> float:
        return self.sigma**2 + self.jump_second_moment()


InnovationSpec = Union[Gaussian, Stable, DomainAttraction, IdTriplet]


def _check_stable(alpha, skew, scale):
    if not 0 < alpha <= 2:
        raise SpecError(f"stable alpha must lie in (0, 2], got {alpha}")
    if not -1 <= skew <= 1:
        raise SpecError(f"stable skew must lie in [-1, 1], got {skew}")
    if not scale > 0:
        raise SpecError(f"stable scale must be > 0, got {scale}")


def _check_n(n):
    if int(n) != n or n < 1:
        raise SpecError(f"sample size must be a positive integer, got {n}")
    return int(n)


def _gen(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return as_stream(stream).generator()


def index_of(spec: InnovationSpec) -> float:
    """Stability index used for aggregation normalisation (2 for finite variance)."""
    if isinstance(spec, (Stable, DomainAttraction)):
        return float(spec.alpha)
    return 2.0


def variance_of(spec: InnovationSpec) -> float:
    if isinstance(spec, Gaussian):
        return spec.sigma**2
    if isinstance(spec, Stable):
        return 2 * spec.scale**2 if spec.alpha == 2 else math.inf
    if isinstance(spec, DomainAttraction):
        return math.inf
    return spec.variance


# --- Gaussian -------------------------------------------------------------


def sample_gaussian(sigma: float, n: int, stream) -> np.ndarray:
    if not sigma > 0:
        raise SpecError(f"sigma must be > 0, got {sigma}")
    n = _check_n(n)
    return sigma * _gen(stream).standard_normal(n)


# --- stable ---------------------------------------------------------------


def _cms(alpha: float, skew: float, n: int, gen: np.random.Generator) -> np.ndarray:
    """Chambers-Mallows-Stuck draws from S_alpha(1, skew, 0)."""
    v = gen.uniform(-math.pi / 2, math.pi / 2, n)
    w = gen.standard_exponential(n)
    if alpha == 1:
        half = math.pi / 2 + skew * v
        return (2 / math.pi) * (half * np.tan(v) - skew * np.log((math.pi / 2) * w * np.cos(v) / half))
    t = skew * math.tan(math.pi * alpha / 2)
    b = math.atan(t) / alpha
    s = (1 + t * t) ** (1 / (2 * alpha))
    av = alpha * (v + b)
    return s * np.sin(av) / np.cos(v) ** (1 / alpha) * (np.cos(v - av) / w) ** ((1 - alpha) / alpha)


def sample_stable(alpha: float, skew: float, scale: float, n: int, stream) -> np.ndarray:
    _check_stable(alpha, skew, scale)
    n = _check_n(n)
    x = scale * _cms(float(alpha), float(skew), n, _gen(stream))
    if alpha == 1:
        x += (2 / math.pi) * skew * scale * math.log(scale)
    return x


def stable_log_cf(theta, alpha: float, skew: float = 0.0, scale: float = 1.0):
    _check_stable(alpha, skew, scale)
    theta = np.asarray(theta, dtype=float)
    a = np.abs(scale * theta)
    sgn = np.sign(theta)
    if alpha == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(theta == 0, 0.0, np.log(np.abs(theta)))
        return -a * (1 + 1j * skew * (2 / math.pi) * sgn * lg)
    return -(a**alpha) * (1 - 1j * skew * sgn * math.tan(math.pi * alpha / 2))


def stable_cf(theta, alpha: float, skew: float = 0.0, scale: float = 1.0):
    """Characteristic function of S_alpha(scale, skew, 0)."""
    return np.exp(stable_log_cf(theta, alpha, skew, scale))


# --- domain of attraction -------------------------------------------------


def sample_domain_attraction(alpha: float, n: int, stream, tail_const: float = 1.0) -> np.ndarray:
    spec = DomainAttraction(alpha, tail_const)
    n = _check_n(n)
    gen = _gen(stream)
    u = 1.0 - gen.random(n)  # (0, 1]
    sign = np.where(gen.random(n) < 0.5, -1.0, 1.0)
    return sign * (spec.tail_const / u) ** (1.0 / spec.alpha)


def domain_attraction_scale(alpha: float, tail_const: float = 1.0) -> float:
    """Scale of the SaS limit of N^(-1/alpha) * sum of symmetrised Pareto draws.

    Matches the tails: a SaS(scale) variable has P(|X| > x) ~ C_alpha scale^alpha x^-alpha
    with C_alpha = (1-alpha) / (Gamma(2-alpha) cos(pi alpha / 2)) (2/pi at alpha = 1).
    """
    if not 0 < alpha < 2:
        raise SpecError("alpha must lie in (0, 2)")
    if abs(alpha - 1) < 1e-12:
        c_alpha = 2 / math.pi
    else:
        c_alpha = (1 - alpha) / (special.gamma(2 - alpha) * math.cos(math.pi * alpha / 2))
    return (tail_const / c_alpha) ** (1 / alpha)


# --- infinitely divisible arrays -----------------------------------------


def _jump_components(spec: IdTriplet, eps: float):
    """(intensity, sampler) pairs for jumps with |x| >= eps, and the |x|<=1 compensator."""
    comps = []
    comp = 0.0
    lv = spec.levy
    if lv is not None:
        m_plus, m_minus = lv.tail_mass(eps)
        a = lv.alpha0
        lo, hi = eps ** -a, lv.cutoff ** -a

        def pareto(u, lo=lo, hi=hi, a=a):
            return (lo - u * (lo - hi)) ** (-1.0 / a)

        if m_plus > 0:
            comps.append((m_plus, lambda u: pareto(u)))
        if m_minus > 0:
            comps.append((m_minus, lambda u: -pareto(u)))
        comp += lv.first_moment_between(eps)
    for loc, mass in spec.all_atoms():
        if mass > 0:
            comps.append((mass, lambda u, loc=loc: np.full_like(u, loc)))
            if abs(loc) <= 1:
                comp += mass * loc
    return comps, comp


def _id_entries(spec: IdTriplet, N: int, size, gen: np.random.Generator) -> np.ndarray:
    eps = spec.epsilon
    small_var = spec.levy.second_moment_below(eps) if spec.levy is not None else 0.0
    comps, comp = _jump_components(spec, eps)
    gauss_sd = math.sqrt((spec.sigma**2 + small_var) / N)
    out = np.full(size, (spec.mu - comp) / N)
    if gauss_sd > 0:
        out += gauss_sd * gen.standard_normal(size)
    total_rate = sum(r for r, _ in comps)
    if total_rate / N * out.size > MAX_JUMPS:
        raise ResourceCapError(
            f"about {total_rate / N * out.size:.3g} jumps requested (cap {MAX_JUMPS:.0e}); raise epsilon or shrink the array"
        )
    if total_rate > 0:
        flat = out.reshape(-1)
        counts = gen.poisson(total_rate / N, flat.size)
        m = int(counts.sum())
        if m:
            which = gen.choice(len(comps), size=m, p=np.array([r for r, _ in comps]) / total_rate)
            u = gen.random(m)
            sizes = np.empty(m)
            for j, (_, sampler) in enumerate(comps):
                sel = which == j
                sizes[sel] = sampler(u[sel])
            owner = np.repeat(np.arange(flat.size), counts)
            flat += np.bincount(owner, weights=sizes, minlength=flat.size)
        out = flat.reshape(size)
    return out


def sample_id_array(spec: IdTriplet, N: int, n: int, stream) -> np.ndarray:
    """n x N matrix of draws of the N-th convolution root of W.

    Each row sums (over its N entries) to an approximate draw of W.
    """
    if not isinstance(spec, IdTriplet):
        raise SpecError("sample_id_array needs an IdTriplet spec")
    N = _check_n(N)
    n = _check_n(n)
    return _id_entries(spec, N, (n, N), _gen(stream))


def id_log_cf(spec: IdTriplet, theta: float) -> complex:
    """Exact log characteristic function of W (density part by quadrature)."""
    theta = float(theta)
    val = 1j * theta * spec.mu - 0.5 * theta**2 * spec.sigma**2
    for loc, mass in spec.all_atoms():
        val += mass * (np.exp(1j * theta * loc) - 1 - (1j * theta * loc if abs(loc) <= 1 else 0))
    lv = spec.levy
    if lv is not None:
        a = lv.alpha0

        # (cos - 1) x^-a-1 = x^(1-a) * re(x), (sin - theta x) x^-a-1 = x^(2-a) * im(x)
        def re(x):
            if x == 0:
                return -a * theta**2 / 2
            return -2 * a * math.sin(theta * x / 2) ** 2 / (x * x)

        def im(x):
            z = theta * x
            if abs(z) < 1e-3:
                return -a * theta**3 / 6 * (1 - z * z / 20)
            return a * (math.sin(z) - z) / x**3

        r = integrate.quad(re, 0, lv.cutoff, weight="alg", wvar=(1 - a, 0), limit=200)[0]
        i = integrate.quad(im, 0, lv.cutoff, weight="alg", wvar=(2 - a, 0), limit=200)[0]
        val += (lv.c_plus + lv.c_minus) * r + 1j * (lv.c_plus - lv.c_minus) * i
    return complex(val)


# --- dispatch -------------------------------------------------------------


def draw(spec: InnovationSpec, n: int, gen: np.random.Generator, array_size: int = 1) -> np.ndarray:
    """n innovations for one path.  ``array_size`` is N for triangular arrays."""
    if isinstance(spec, Gaussian):
        return spec.sigma * gen.standard_normal(n)
    if isinstance(spec, Stable):
        x = spec.scale * _cms(spec.alpha, spec.skew, n, gen)
        if spec.alpha == 1:
            x += (2 / math.pi) * spec.skew * spec.scale * math.log(spec.scale)
        return x
    if isinstance(spec, DomainAttraction):
        u = 1.0 - gen.random(n)
        sign = np.where(gen.random(n) < 0.5, -1.0, 1.0)
        return sign * (spec.tail_const / u) ** (1.0 / spec.alpha)
    if isinstance(spec, IdTriplet):
        return _id_entries(spec, array_size, (n,), gen)
    raise SpecError(f"unknown innovation spec {spec!r}")
