"""Covariance and characteristic function of the aggregated limit processes.

Both are built from the kernel f(x, t) = (1 - exp(-x t)) / x (t > 0, else 0)
and h_j(x, s) = f(x, tau_j - s) - f(x, -s).  The s-integral of h_j h_k is
closed form:

    s < 0:            A_j A_k / (2 x^3),  A = 1 - exp(-x tau)
    0 <= s <= min:    int (1 - e^{-x(tau_j - s)})(1 - e^{-x(tau_k - s)}) / x^2 ds

and vanishes beyond min(tau_j, tau_k).  The middle piece switches to
Gauss-Legendre when x * min(tau) is small, where the closed form cancels.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .. import quadrature
from ..errors import SpecError

__all__ = ["kernel", "cross_moment", "limit_process_cov", "intermediate_cf"]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_X_FLOOR = 1e-100


def kernel(x: float, t: float) -> float:
    """f(x, t) = (1 - e^{-x t}) / x for x, t > 0, else 0."""
    if x <= 0 or t <= 0:
        return 0.0
    return -math.expm1(-x * t) / x


def cross_moment(x: float, tj: float, tk: float) -> float:
    """int_R h_j(x, s) h_k(x, s) ds."""
    if tj <= 0 or tk <= 0:
        return 0.0
    aj = -math.expm1(-x * tj)
    ak = -math.expm1(-x * tk)
    left = (aj / x) * (ak / x) / (2 * x)
    m = min(tj, tk)
    if x * m < 0.1:
        s = 0.5 * m * (_GL_NODES + 1)
        vals = (np.expm1(-x * (tj - s)) / x) * (np.expm1(-x * (tk - s)) / x)
        mid = 0.5 * m * float(np.dot(_GL_WEIGHTS, vals))
    else:
        e = math.exp
        terms = [
            m,
            -(e(-x * (tj - m)) - e(-x * tj)) / x,
            -(e(-x * (tk - m)) - e(-x * tk)) / x,
            (e(-x * (tj + tk - 2 * m)) - e(-x * (tj + tk))) / (2 * x),
        ]
        mid = math.fsum(terms) / (x * x)
    return left + mid


def _check_beta(beta: float, lo: float, hi: float):
    if not lo < beta < hi:
        raise SpecError(f"beta must lie in ({lo:g}, {hi:g}), got {beta}")


def limit_process_cov(beta: float, tau1: float, tau2: float, c_phi: float = 1.0) -> float:
    """Covariance of the Gaussian limit at (tau1, tau2), unit innovation variance.

    c_phi int_0^inf x^beta int_R h_1 h_2 ds dx.  The inner integral grows like
    1/x at the origin, so the outer weight is x^(beta-1).
    """
    _check_beta(beta, 0, 1)
    if tau1 < 0 or tau2 < 0:
        raise SpecError("times must be >= 0")
    if tau1 == 0 or tau2 == 0:
        return 0.0
    def g(x):
        if x == 0:
            return 0.5 * tau1 * tau2  # x * A_1 A_2 / (2 x^3) at the origin
        return x * cross_moment(x, tau1, tau2)

    val = quadrature.half_line(g, beta - 1, scales=(1 / tau1, 1 / tau2), tail_exp=-1.0)
    return c_phi * val


def intermediate_cf(
    beta: float,
    sigma2: float,
    thetas: Sequence[float],
    taus: Sequence[float],
    c_phi: float = 1.0,
) -> complex:
    """Finite-dimensional characteristic function of the intermediate limit.

    exp{ c_phi int_0^inf (exp(-sigma2/2 Q(x)) - 1) x^beta dx } with
    Q(x) = sum_jk theta_j theta_k int h_j h_k ds >= 0.
    """
    _check_beta(beta, -1, 1)
    th = [float(v) for v in thetas]
    ts = [float(v) for v in taus]
    if len(th) != len(ts) or not th:
        raise SpecError("thetas and taus must be non-empty and of equal length")
    if any(t < 0 for t in ts):
        raise SpecError("times must be >= 0")
    pairs = [(i, j) for i in range(len(th)) for j in range(i, len(th)) if th[i] != 0 and th[j] != 0 and ts[i] > 0 and ts[j] > 0]
    if not pairs:
        return complex(1.0)

    def q(x):
        x = max(x, _X_FLOOR)
        acc = []
        for i, j in pairs:
            w = 1.0 if i == j else 2.0
            acc.append(w * th[i] * th[j] * cross_moment(x, ts[i], ts[j]))
        return math.fsum(acc)

    # exp(-sigma2 Q / 2) switches from 0 to 1 near x* where sigma2 Q(x*) / 2 = 1;
    # Q ~ (sum theta tau)^2 / (2x) at the origin
    lead = sum(t * s for t, s in zip(th, ts)) ** 2
    scales = [1 / t for t in ts if t > 0]
    if lead > 0:
        scales.append(sigma2 * lead / 4)
    val = quadrature.half_line(lambda x: math.expm1(-0.5 * sigma2 * q(x)), beta, scales=scales, tail_exp=-2.0)
    return complex(math.exp(c_phi * val))
