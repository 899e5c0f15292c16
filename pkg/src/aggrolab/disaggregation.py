"""Recovering the mixing density from panels or from an aggregated series.

Three estimators:

* moments from pooled panel covariances, mu_k = (gamma(k) - gamma(k+2)) / (gamma(0) - gamma(2));
* maximum likelihood for the Beta-type family on truncated per-path lag-one
  autocorrelations;
* an orthogonal-series estimate in the Gegenbauer basis of L^2((1-x^2)^alpha)
  on (-1, 1), fed by sample autocovariances of a single aggregated series.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, linalg, optimize, special

from . import mixing as mix
from .analytics.estimators import panel_cov
from .analytics.secondorder import theoretical_cov
from .errors import NumericalError, SpecError
from .io import write_csv
from .rng import as_stream

__all__ = [
    "robinson_moments",
    "robinson_from_covariances",
    "BeranResult",
    "pseudo_observations",
    "beran_loglik",
    "beran_fit",
    "beran_mle",
    "GegenbauerBasis",
    "build_gegenbauer_basis",
    "DensityEstimate",
    "gegenbauer_estimate",
    "estimate_from_covariances",
    "autocovariances",
    "weighted_l2_error",
    "mixing_reference",
    "simulate_gaussian_aggregate",
    "write_estimate_csv",
    "write_basis_json",
    "K_CAP",
    "GAMMA_BOUND",
]

K_CAP = 30
GAMMA_BOUND = 1.0 / (2.0 * math.log(1.0 + math.sqrt(2.0)))
MAX_ITER = 200


# --- moment estimator -----------------------------------------------------


def robinson_from_covariances(gammas: Sequence[float], k_max: int) -> np.ndarray:
    """mu_0..mu_k_max from autocovariances gamma(0..k_max+2)."""
    g = np.asarray(gammas, dtype=float)
    if g.size < k_max + 3:
        raise SpecError(f"need autocovariances up to lag {k_max + 2}")
    denom = g[0] - g[2]
    if not denom > 0:
        raise NumericalError("gamma(0) - gamma(2) <= 0: too little data or a mis-specified model")
    mu = (g[: k_max + 1] - g[2 : k_max + 3]) / denom
    mu[0] = 1.0
    return mu


def robinson_moments(panel, k_max: int) -> np.ndarray:
    """Method-of-moments estimates of mu_0..mu_k_max from pooled panel covariances."""
    n = panel.values.shape[1] if hasattr(panel, "values") else np.asarray(panel).shape[-1]
    if k_max < 0 or n < k_max + 3:
        raise SpecError(f"rows of length {n} cannot support k_max = {k_max}")
    gam = [panel_cov(panel, k) for k in range(k_max + 3)]
    return robinson_from_covariances(gam, k_max)


# --- Beta-type maximum likelihood -----------------------------------------


@dataclass(frozen=True)
class BeranResult:
    p: float
    q: float
    se_p: float
    se_q: float
    loglik: float
    clamp_rate: float
    h: float
    converged: bool
    iterations: int


def pseudo_observations(panel, h: float) -> tuple[np.ndarray, int]:
    """Lag-one autocorrelations per row, clamped to [h, 1-h]; returns (a_hat, clamp count)."""
    if not 0 < h < 0.5:
        raise SpecError(f"h must lie in (0, 1/2), got {h}")
    vals = panel.values if hasattr(panel, "values") else np.asarray(panel, dtype=float)
    num = np.einsum("ij,ij->i", vals[:, 1:], vals[:, :-1])
    den = np.einsum("ij,ij->i", vals, vals)
    if np.any(den <= 0):
        raise NumericalError("a row has zero energy; lag-one autocorrelation undefined")
    a = num / den
    clamped = (a < h) | (a > 1 - h)
    return np.clip(a, h, 1 - h), int(clamped.sum())


def beran_loglik(p: float, q: float, a: np.ndarray) -> float:
    """sum_i log phi_{p,q}(a_i) for the Beta-type density."""
    a = np.asarray(a, dtype=float)
    N = a.size
    return N * (math.log(2.0) - special.betaln(p, q)) + (2 * p - 1) * float(np.sum(np.log(a))) + (q - 1) * float(
        np.sum(np.log1p(-a * a))
    )


def _hessian(p: float, q: float, N: int) -> np.ndarray:
    t = special.polygamma(1, p + q)
    return -N * np.array([[special.polygamma(1, p) - t, -t], [-t, special.polygamma(1, q) - t]])


_STARTS = ((1.5, 1.5), (3.0, 3.0), (2.0, 6.0))


def beran_fit(a: np.ndarray, starts=_STARTS, maxiter: int = MAX_ITER) -> tuple[float, float, float, bool, int]:
    """Maximise the Beta-type likelihood over p, q > 1 via p = 1 + e^u, q = 1 + e^v.

    Returns (p, q, loglik, converged, iterations) for the best of the starts.
    """
    a = np.asarray(a, dtype=float)
    if a.size < 2 or np.any((a <= 0) | (a >= 1)):
        raise SpecError("pseudo-observations must lie in (0, 1)")
    N = a.size
    s1 = float(np.sum(np.log(a)))
    s2 = float(np.sum(np.log1p(-a * a)))

    def nll(z):
        p, q = 1 + math.exp(z[0]), 1 + math.exp(z[1])
        return -(N * (math.log(2.0) - special.betaln(p, q)) + (2 * p - 1) * s1 + (q - 1) * s2) / N

    def grad(z):
        p, q = 1 + math.exp(z[0]), 1 + math.exp(z[1])
        dpq = special.digamma(p + q)
        gp = -N * (special.digamma(p) - dpq) + 2 * s1
        gq = -N * (special.digamma(q) - dpq) + s2
        return -np.array([gp * math.exp(z[0]), gq * math.exp(z[1])]) / N

    best = None
    for p0, q0 in starts:
        z0 = np.array([math.log(p0 - 1), math.log(q0 - 1)])
        res = optimize.minimize(nll, z0, jac=grad, method="BFGS", options={"maxiter": maxiter, "gtol": 1e-9})
        if best is None or res.fun < best.fun:
            best = res
    p, q = 1 + math.exp(best.x[0]), 1 + math.exp(best.x[1])
    ok = bool(best.success) or np.max(np.abs(grad(best.x))) < 1e-6
    return p, q, -best.fun * N, ok, int(best.nit)


def beran_mle(panel, h: float | None = None) -> BeranResult:
    """Beta-type MLE from per-path lag-one autocorrelations truncated to [h, 1-h].

    ``h`` defaults to n^(-1/4).  Standard errors come from the exact
    Hessian of the log-likelihood in (p, q).
    """
    n = panel.values.shape[1] if hasattr(panel, "values") else np.asarray(panel).shape[1]
    if h is None:
        h = n ** -0.25
    a, nclamp = pseudo_observations(panel, h)
    if nclamp == a.size:
        raise NumericalError("every pseudo-observation hit a clamp boundary; h is too large or n too small")
    p, q, ll, ok, it = beran_fit(a)
    if not ok:
        raise NumericalError(f"likelihood maximisation did not converge in {MAX_ITER} iterations")
    cov = np.linalg.inv(-_hessian(p, q, a.size))
    return BeranResult(p, q, math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1]), ll, nclamp / a.size, h, ok, it)


# --- Gegenbauer basis -----------------------------------------------------


@dataclass(frozen=True)
class GegenbauerBasis:
    """Orthonormal polynomials G_0..G_K for the weight (1-x^2)^alpha on (-1, 1).

    ``coeffs[k, j]`` is the coefficient of x^j in G_k; ``b[k]`` the
    recurrence coefficients of x G_k = b[k+1] G_{k+1} + b[k] G_{k-1}.
    """

    alpha_weight: float
    K: int
    coeffs: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    g0: float = field(repr=False)

    def evaluate(self, x) -> np.ndarray:
        """(K+1, len(x)) array of G_k(x), by the recurrence."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((self.K + 1, x.size))
        out[0] = self.g0
        if self.K >= 1:
            out[1] = x * out[0] / self.b[1]
        for k in range(1, self.K):
            out[k + 1] = (x * out[k] - self.b[k] * out[k - 1]) / self.b[k + 1]
        return out

    def to_dict(self) -> dict:
        return {"alpha_weight": self.alpha_weight, "K": self.K, "coeffs": self.coeffs.tolist(), "recurrence": self.b.tolist()}


def _recurrence_b(alpha: float, K: int) -> np.ndarray:
    lam = alpha + 0.5
    b = np.zeros(K + 2)
    for k in range(1, K + 2):
        if k == 1:
            c = 1.0 / (2.0 * lam + 2.0)
        else:
            c = k * (k + 2 * lam - 1) / (4.0 * (k + lam) * (k + lam - 1))
        b[k] = math.sqrt(c)
    return b


def build_gegenbauer_basis(alpha_weight: float, K: int) -> GegenbauerBasis:
    if not alpha_weight > -1:
        raise SpecError("alpha_weight must exceed -1")
    if int(K) != K or K < 0:
        raise SpecError("K must be a non-negative integer")
    if K > K_CAP:
        raise SpecError(f"K = {K} exceeds the cap of {K_CAP}")
    K = int(K)
    b = _recurrence_b(alpha_weight, K)
    g0 = 1.0 / math.sqrt(special.beta(0.5, alpha_weight + 1.0))
    c = np.zeros((K + 1, K + 1))
    c[0, 0] = g0
    if K >= 1:
        c[1, 1] = g0 / b[1]
    for k in range(1, K):
        c[k + 1, 1:] = c[k, :-1]
        c[k + 1] -= b[k] * c[k - 1]
        c[k + 1] /= b[k + 1]
    return GegenbauerBasis(float(alpha_weight), K, c, b, g0)


# --- Gegenbauer estimate --------------------------------------------------


@dataclass
class DensityEstimate:
    grid: np.ndarray
    values: np.ndarray
    alpha_weight: float
    K: int
    sigma2_used: float
    method: str = "gegenbauer"
    coefficients: np.ndarray | None = None
    quad_weights: np.ndarray | None = field(default=None, repr=False)


def default_grid(alpha_weight: float, m: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi(alpha, alpha) nodes and weights, exact for polynomial integrands."""
    x, w = special.roots_jacobi(m, alpha_weight, alpha_weight)
    return x, w


def autocovariances(series, max_lag: int) -> np.ndarray:
    """(1/n) sum_t X(t) X(t+j), j = 0..max_lag, with no mean removal (the process is centred)."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if max_lag >= n:
        raise SpecError("max_lag must be below the series length")
    return np.array([np.dot(x[: n - j], x[j:]) / n for j in range(max_lag + 1)])


def estimate_from_covariances(
    gammas: Sequence[float],
    alpha_weight: float,
    K: int,
    sigma2: float | None = None,
    grid=None,
) -> DensityEstimate:
    """Gegenbauer series estimate from autocovariances gamma(0..K+2)."""
    basis = build_gegenbauer_basis(alpha_weight, K)
    g = np.asarray(gammas, dtype=float)
    if g.size < K + 3:
        raise SpecError(f"need autocovariances up to lag {K + 2}")
    diffs = g[: K + 1] - g[2 : K + 3]
    s2 = float(g[0] - g[2]) if sigma2 is None else float(sigma2)
    if not s2 > 0:
        raise NumericalError("variance plug-in gamma(0) - gamma(2) is not positive")
    zeta = basis.coeffs @ diffs
    if grid is None:
        x, wq = default_grid(alpha_weight)
    else:
        x, wq = np.asarray(grid, dtype=float), None
        if np.any(np.abs(x) > 1):
            raise SpecError("grid must lie in [-1, 1]")
    vals = (1 - x * x) ** alpha_weight / s2 * (zeta @ basis.evaluate(x))
    return DensityEstimate(x, vals, float(alpha_weight), int(K), s2, "gegenbauer", zeta / s2, wq)


def gegenbauer_estimate(
    series,
    alpha_weight: float = 0.0,
    gamma_rate: float | None = None,
    K: int | None = None,
    sigma2: float | None = None,
    grid=None,
) -> DensityEstimate:
    """Orthogonal-series mixing-density estimate from one aggregated series.

    K = floor(gamma_rate * log n) unless given explicitly.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 32:
        raise SpecError("series must have at least 32 observations")
    if K is None:
        if gamma_rate is None:
            raise SpecError("give gamma_rate or K")
        if not 0 < gamma_rate < GAMMA_BOUND:
            raise SpecError(f"gamma_rate must lie in (0, {GAMMA_BOUND:.4f})")
        K = int(math.floor(gamma_rate * math.log(n)))
    gam = autocovariances(x, K + 2)
    return estimate_from_covariances(gam, alpha_weight, K, sigma2, grid)


def mixing_reference(spec) -> Callable[[np.ndarray], np.ndarray]:
    """phi extended by zero to (-1, 1)."""

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x >= 0
        if np.any(pos):
            with np.errstate(divide="ignore"):
                out[pos] = mix.density(spec, np.minimum(x[pos], np.nextafter(1.0, 0)))
        return out

    return f


def weighted_l2_error(estimate: DensityEstimate, reference, alpha_weight: float | None = None) -> float:
    """int (phi_hat - phi)^2 (1-x^2)^(-alpha) dx over (-1, 1).

    ``reference`` is a callable or an array on the estimate's grid.  On the
    default Gauss-Jacobi grid the integral is a weighted sum of
    ((phi_hat - phi) / w)^2; on a user grid it is a trapezoid rule that
    drops the endpoints x = +-1 where the weight is singular.
    """
    a = estimate.alpha_weight if alpha_weight is None else alpha_weight
    x = estimate.grid
    ref = reference(x) if callable(reference) else np.asarray(reference, dtype=float)
    if ref.shape != estimate.values.shape:
        raise SpecError("estimate and reference must share the grid")
    diff = estimate.values - ref
    if estimate.quad_weights is not None and a == estimate.alpha_weight:
        r = diff / (1 - x * x) ** a
        return float(np.dot(estimate.quad_weights, r * r))
    inner = np.abs(x) < 1
    xi = x[inner]
    y = diff[inner] ** 2 * (1 - xi * xi) ** (-a)
    return float(integrate.trapezoid(y, xi))


# --- Gaussian aggregate sampler ------------------------------------------

_CHOL_CACHE: dict = {}


def _cholesky(mixing, sigma2: float, n: int) -> np.ndarray:
    key = (repr(mixing), float(sigma2), int(n))
    if key not in _CHOL_CACHE:
        g = theoretical_cov(mixing, sigma2, np.arange(n))
        L = linalg.cholesky(linalg.toeplitz(g), lower=True)
        _CHOL_CACHE.clear()
        _CHOL_CACHE[key] = L
    return _CHOL_CACHE[key]


def simulate_gaussian_aggregate(mixing, sigma2: float, n: int, replicates: int, stream) -> np.ndarray:
    """(replicates, n) exact draws of the Gaussian limit of the aggregate.

    Uses the Cholesky factor of the Toeplitz covariance; replicate r draws
    from ``stream.child(r)``.
    """
    if n > 2**12:
        raise SpecError("exact Gaussian sampling is limited to n <= 4096")
    L = _cholesky(mixing, sigma2, n)
    st = as_stream(stream)
    z = np.stack([st.child(r).generator().standard_normal(n) for r in range(replicates)])
    return z @ L.T


# --- export ---------------------------------------------------------------


def write_estimate_csv(estimate: DensityEstimate, path) -> Path:
    return write_csv(path, ["x", "phi_hat"], zip(estimate.grid.tolist(), estimate.values.tolist()))


def write_basis_json(basis: GegenbauerBasis, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(basis.to_dict(), indent=2) + "\n")
    return path
