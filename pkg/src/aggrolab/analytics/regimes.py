"""Classifiers for the limit behaviour of aggregated partial sums."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from ..ar1sim import growth_case
from ..errors import SpecError

__all__ = ["RegimeReport", "classify_memory", "classify_region", "diagnose", "BOUNDARY_TOL"]

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class RegimeReport:
    memory: str = "n/a"  # long | short | degenerate | boundary | n/a
    region: str = "n/a"  # i | ii | iii | iv | boundary | n/a
    growth_case: str = "n/a"  # j | jj | jjj | n/a
    H: float | None = None
    exponents: dict = field(default_factory=dict)
    limit: str | None = None
    boundary: bool = False
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def merge(self, other: "RegimeReport") -> "RegimeReport":
        """Combine reports; fields set in ``other`` win unless they are 'n/a'."""
        d = self.to_dict()
        for k, v in other.to_dict().items():
            if k in ("exponents", "params"):
                d[k] = {**d[k], **v}
            elif k == "boundary":
                d[k] = d[k] or v
            elif v not in ("n/a", None):
                d[k] = v
        return RegimeReport(**d)


def _near(a: float, b: float) -> bool:
    return abs(a - b) <= BOUNDARY_TOL


def classify_memory(alpha: float, beta: float) -> RegimeReport:
    """Memory of the aggregate of SaS (or Gaussian, alpha = 2) AR(1) rows.

    long: 0 < beta < alpha-1, partial sums scale like n^(1-beta/alpha);
    short: beta > alpha-1, stable Levy limit with H = 1/alpha;
    degenerate: -1 < beta < 0, aggregate normalised by N^(1/(alpha(1+beta)))
    tends to a random constant.
    """
    if not 1 < alpha <= 2:
        raise SpecError(f"alpha must lie in (1, 2], got {alpha}")
    if not beta > -1:
        raise SpecError(f"beta must exceed -1, got {beta}")
    params = {"alpha": alpha, "beta": beta}
    if _near(beta, 0) or _near(beta, alpha - 1):
        return RegimeReport(memory="boundary", boundary=True, params=params)
    if beta < 0:
        e = 1 / (alpha * (1 + beta))
        return RegimeReport(memory="degenerate", H=0.0, exponents={"aggregation": e}, limit="random constant", params=params)
    if beta < alpha - 1:
        H = 1 - beta / alpha
        limit = "fBm" if alpha == 2 else f"Lambda_{{{alpha:g},{beta:g}}}"
        return RegimeReport(memory="long", H=H, exponents={"aggregation": 1 / alpha, "partial_sum": H}, limit=limit, params=params)
    H = 1 / alpha
    limit = "Brownian motion" if alpha == 2 else f"{alpha:g}-stable Levy"
    return RegimeReport(memory="short", H=H, exponents={"aggregation": 1 / alpha, "partial_sum": H}, limit=limit, params=params)


def classify_region(beta: float, sigma: float, alpha0: float | None = None) -> RegimeReport:
    """Limit of partial sums of the aggregate driven by an ID triangular array.

    ``exponents['normalization']`` is the power of n applied to the partial
    sum (n^exponent * S_n converges).  ``alpha0`` is only needed when
    sigma = 0 and beta < 1.
    """
    if not beta > 0:
        raise SpecError(f"beta must be > 0, got {beta}")
    if sigma < 0:
        raise SpecError("sigma must be >= 0")
    if alpha0 is None:
        if sigma == 0 and beta < 1:
            raise SpecError("alpha0 is required when sigma = 0 and beta < 1")
    elif not 0 < alpha0 < 2:
        raise SpecError(f"alpha0 must lie in (0, 2), got {alpha0}")
    params = {"beta": beta, "sigma": sigma, "alpha0": alpha0}
    if _near(beta, 1) or (sigma == 0 and beta < 1 and _near(alpha0, 1 + beta)):
        return RegimeReport(region="boundary", boundary=True, params=params)
    if beta > 1:
        return RegimeReport(region="iv", H=0.5, exponents={"normalization": -0.5}, limit="Brownian motion", params=params)
    if sigma > 0:
        H = 1 - beta / 2
        return RegimeReport(region="i", H=H, exponents={"normalization": beta / 2 - 1}, limit="fBm", params=params)
    if alpha0 > 1 + beta:
        H = 1 - beta / alpha0
        return RegimeReport(
            region="ii", H=H, exponents={"normalization": beta / alpha0 - 1}, limit=f"Lambda_{{{alpha0:g},{beta:g}}}", params=params
        )
    H = 1 / (1 + beta)
    return RegimeReport(
        region="iii", H=H, exponents={"normalization": -1 / (1 + beta)}, limit=f"{1 + beta:g}-stable Levy", params=params
    )


def diagnose(
    alpha: float | None = None,
    beta: float | None = None,
    sigma: float | None = None,
    alpha0: float | None = None,
    N: int | None = None,
    n: int | None = None,
) -> RegimeReport:
    """Run every classifier whose inputs are present and merge the reports."""
    if beta is None:
        raise SpecError("beta is required")
    rep = RegimeReport(params={"beta": beta})
    if alpha is not None:
        rep = rep.merge(classify_memory(alpha, beta))
    if sigma is not None and beta > 0:
        rep = rep.merge(classify_region(beta, sigma, alpha0))
    if N is not None and n is not None:
        g = growth_case(N, n, beta)
        rep = rep.merge(
            RegimeReport(
                growth_case=g.case,
                exponents={"growth_ratio": g.ratio, "growth_normalizer": g.norm_value},
                params={"N": N, "n": n, "mu": g.mu, "growth_normalization": g.normalization},
            )
        )
    return rep
