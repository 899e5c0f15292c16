"""Exact second-order theory of the aggregated process by quadrature.

For innovation variance sigma2 and mixing density phi,

    gamma(t) = sigma2 * int_0^1 x^t phi(x) / (1 - x^2) dx
    f(y)     = sigma2 / (2 pi) * int_0^1 phi(x) / ((1-x)^2 + 4 x sin^2(y/2)) dx

and near the unit root phi(x) ~ c_phi (1-x)^beta gives gamma(t) ~ c t^-beta,
f(y) ~ c_f |y|^(beta-1).
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, special

from .. import mixing as mix
from .. import quadrature
from ..errors import NumericalError, SpecError

__all__ = [
    "theoretical_cov",
    "betatype_cov",
    "spectral_density",
    "spectral_tail_integral",
    "asymptotic_constants",
    "partial_sum_variance",
    "theoretical_var_points",
    "covariance_from_spectrum",
]


def _beta_of(mixing) -> float:
    return mix.tail_params(mixing)[1]


def betatype_cov(p: float, q: float, sigma2: float, t) -> np.ndarray | float:
    """Gamma-ratio closed form of gamma(t) for BetaType(p, q)."""
    t = np.asarray(t, dtype=float)
    h = p + t / 2
    out = sigma2 * np.exp(special.gammaln(q - 1) - special.betaln(p, q) + special.gammaln(h) - special.gammaln(h + q - 1))
    return float(out) if out.ndim == 0 else out


def _cov_quad(mixing, sigma2: float, t: float) -> float:
    # phi / (1 - x^2) = x^l (1-x)^(r-1) s(u) / (2 - u)
    val = mix.integrate_against(mixing, lambda u: 1.0 / (2.0 - u), extra_left=t, extra_right=-1.0, scales=(1.0 / max(t, 1.0),))
    return sigma2 * val


def theoretical_cov(mixing, sigma2: float, t, method: str = "auto"):
    """Autocovariance of the aggregated Gaussian limit at lag(s) t >= 0.

    ``method``: "auto" (closed form for BetaType, quadrature otherwise),
    "quad" or "closed".
    """
    beta = _beta_of(mixing)
    if not beta > 0:
        raise SpecError(f"covariance needs tail exponent beta > 0, got {beta}")
    if not sigma2 > 0:
        raise SpecError("sigma2 must be > 0")
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0):
        raise SpecError("lags must be >= 0")
    use_closed = method == "closed" or (method == "auto" and isinstance(mixing, mix.BetaType))
    if use_closed:
        if not isinstance(mixing, mix.BetaType):
            raise SpecError("closed form is available for BetaType only")
        return betatype_cov(mixing.p, mixing.q, sigma2, ts)
    if method not in ("auto", "quad"):
        raise SpecError(f"unknown method {method!r}")
    out = np.array([_cov_quad(mixing, sigma2, float(v)) for v in ts.ravel()]).reshape(ts.shape)
    return float(out) if out.ndim == 0 else out


def _spec_one(mixing, sigma2: float, y: float) -> float:
    s2 = math.sin(y / 2) ** 2
    if s2 == 0:
        if mix.factors(mixing)[1] <= 1:
            raise SpecError("spectral density diverges at y = 0 for beta <= 1")
        val = mix.integrate_against(mixing, lambda u: 1.0, extra_right=-2.0)
        return sigma2 / (2 * math.pi) * val
    scale = 2 * math.sqrt(s2)
    val = mix.integrate_against(mixing, lambda u: 1.0 / (u * u + 4 * (1 - u) * s2), scales=(scale,))
    return sigma2 / (2 * math.pi) * val


def spectral_density(mixing, sigma2: float, y):
    """Spectral density of the aggregated process at frequency y in [-pi, pi]."""
    ys = np.asarray(y, dtype=float)
    if np.any(np.abs(ys) > math.pi + 1e-12):
        raise SpecError("frequency must lie in [-pi, pi]")
    out = np.array([_spec_one(mixing, sigma2, float(v)) for v in ys.ravel()]).reshape(ys.shape)
    return float(out) if out.ndim == 0 else out


def spectral_tail_integral(beta: float) -> float:
    """int_0^inf w^beta / (w^2 + 1) dw for beta in (-1, 1), split at w = 1."""
    if not -1 < beta < 1:
        raise SpecError("integral converges only for beta in (-1, 1)")
    kw = dict(epsabs=1e-15, epsrel=1e-13, limit=200)
    f = lambda w: 1.0 / (1.0 + w * w)
    low = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(beta, 0.0), **kw)[0]
    # w = 1/v maps [1, inf) onto (0, 1] with integrand v^-beta / (1 + v^2)
    high = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(-beta, 0.0), **kw)[0]
    return math.fsum([low, high])


def asymptotic_constants(mixing, sigma2: float) -> tuple[float, float]:
    """(c, c_f) with gamma(t) ~ c t^-beta and f(y) ~ c_f |y|^(beta-1)."""
    c_phi, beta = mix.tail_params(mixing)
    if not 0 < beta < 1:
        raise SpecError(f"asymptotic constants need beta in (0, 1), got {beta}")
    c = sigma2 * c_phi / 2 * math.gamma(beta)
    c_f = sigma2 * c_phi / (2 * math.pi) * spectral_tail_integral(beta)
    return c, c_f


# partial sums --------------------------------------------------------------

# sum_{k=1}^{n-1} (n-k) k^p as polynomials in n, p = 0..5
def _power_sums(n: float) -> list[float]:
    m = (n - 1) * (n + 1)
    return [
        n * (n - 1) / 2,
        n * m / 6,
        n * n * m / 12,
        n * m * (3 * n * n - 2) / 60,
        n * n * m * (2 * n * n - 3) / 60,
        n * m * (n * n - 2) * (2 * n * n - 1) / 84,
    ]


def _sum_kernel(n: int, u: float) -> float:
    """sum_{s,t=1}^n x^|t-s| at x = 1 - u, without cancellation near u = 0."""
    if u == 0:
        return float(n) * n
    L = math.log1p(-u)
    if n * abs(L) < 1e-2:
        sums = _power_sums(float(n))
        acc = [float(n)]
        term = 1.0
        for p, sp in enumerate(sums):
            if p:
                term *= L / p
            acc.append(2 * term * sp)
        return math.fsum(acc)
    x = 1.0 - u
    return (n * (2.0 - u) * u - 2.0 * x * (-math.expm1(n * L))) / (u * u)


def partial_sum_variance(mixing, sigma2: float, n: int) -> float:
    """Var(sum_{t=1}^n X(t)) = sum_{|t|<n} (n-|t|) gamma(t), as a single quadrature."""
    beta = _beta_of(mixing)
    if not beta > 0:
        raise SpecError("partial-sum variance needs beta > 0")
    n = int(n)
    if n < 1:
        raise SpecError("n must be >= 1")
    val = mix.integrate_against(
        mixing,
        lambda u: _sum_kernel(n, u) / (2.0 - u),
        extra_right=-1.0,
        scales=(1.0 / n,),
    )
    return sigma2 * val


def theoretical_var_points(mixing, sigma2: float, ns: Iterable[int]) -> list[tuple[int, float]]:
    return [(int(n), partial_sum_variance(mixing, sigma2, int(n))) for n in ns]


def covariance_from_spectrum(mixing, sigma2: float, k: int) -> float:
    """2 int_0^pi f(y) cos(k y) dy, the Fourier inversion of the spectral density.

    The y^(beta-1) singularity at the origin goes into an algebraic weight on
    the first piece; the rest is cut at geometric breakpoints.
    """
    c_phi, beta = mix.tail_params(mixing)
    kw = dict(epsabs=1e-14, epsrel=1e-11, limit=400)
    g = lambda y: spectral_density(mixing, sigma2, y) * math.cos(k * y)
    parts = []
    if beta < 1:
        y0 = 1e-6
        c_f = sigma2 * c_phi / (2 * math.pi) * spectral_tail_integral(beta)

        def h(y):
            if y == 0:
                return c_f
            return spectral_density(mixing, sigma2, y) * y ** (1 - beta) * math.cos(k * y)

        parts.append(integrate.quad(h, 0.0, y0, weight="alg", wvar=(beta - 1, 0.0), **kw)[0])
        edges = [y0 * 4.0**j for j in range(0, 20) if y0 * 4.0**j < math.pi] + [math.pi]
    else:
        edges = [0.0, math.pi]
    if k > 0:
        extra = [j * math.pi / k for j in range(1, k)]
        edges = sorted(set(edges) | {e for e in extra if edges[0] < e < math.pi})
    for a, b in zip(edges[:-1], edges[1:]):
        parts.append(integrate.quad(g, a, b, **kw)[0])
    val = 2 * math.fsum(parts)
    if not np.isfinite(val):
        raise NumericalError("Fourier inversion failed")
    return val
