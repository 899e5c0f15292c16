import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggrolab import ar1sim
from aggrolab import innovations as inn
from aggrolab import mixing as mix
from aggrolab.analytics import panel_cov, partial_sum_variance, sample_cov, theoretical_cov
from aggrolab.errors import ResourceCapError, SpecError
from aggrolab.rng import Stream

G = inn.Gaussian(1.0)


def test_zero_coefficient_returns_innovations(stream):
    x = ar1sim.simulate_ar1(0.0, G, 100, stream)
    np.testing.assert_array_equal(x, stream.generator().standard_normal(100))


def test_lag_one_autocorrelation(stream):
    x = ar1sim.simulate_ar1(0.9, G, 10**5, stream)
    r = np.corrcoef(x[:-1], x[1:])[0, 1]
    assert abs(r - 0.9) < 0.01


def test_stationary_variance(stream):
    x = ar1sim.simulate_ar1(0.5, G, 10**5, stream)
    assert abs(x.var() / (4 / 3) - 1) < 0.02


def test_stationary_start_stable(stream):
    # the marginal law at t = 1 is SaS with scale (1-a^alpha)^(-1/alpha)
    a, alpha = 0.8, 1.5
    gen = stream.generator()
    first = np.array([ar1sim.simulate_ar1(a, inn.Stable(alpha), 1, gen)[0] for _ in range(20000)])
    theta = np.array([0.3, 0.7])
    emp = np.array([np.mean(np.exp(1j * t * first)) for t in theta])
    target = inn.stable_cf(theta, alpha, 0.0, (1 - a**alpha) ** (-1 / alpha))
    assert np.max(np.abs(emp - target)) < 0.03


def test_burn_in_length():
    assert ar1sim.burn_in_length(0.0) == 0
    assert ar1sim.burn_in_length(0.5) == math.ceil(math.log(1e-12) / math.log(0.5))
    assert ar1sim.burn_in_length(1 - 1e-15) == 10**6


def test_domain_attraction_path_uses_burn_in(stream):
    x = ar1sim.simulate_ar1(0.7, inn.DomainAttraction(1.5), 200, stream)
    assert x.shape == (200,) and np.all(np.isfinite(x))


def test_rejects_bad_coefficient(stream):
    with pytest.raises(SpecError):
        ar1sim.simulate_ar1(1.0, G, 10, stream)
    with pytest.raises(SpecError):
        ar1sim.simulate_ar1(-0.1, G, 10, stream)


def test_single_row_panel_matches_path():
    st_ = Stream(5)
    panel = ar1sim.simulate_panel(mix.BetaType(1, 1.5), G, 1, 64, st_)
    gen = st_.child(0).generator()
    a = float(mix.sample_coeff(mix.BetaType(1, 1.5), 1, gen)[0])
    np.testing.assert_array_equal(panel.values[0], ar1sim.simulate_ar1(a, G, 64, gen))
    assert panel.coeffs[0] == a


def test_panel_workers_identical():
    m = mix.BetaType(1, 1.5)
    p1 = ar1sim.simulate_panel(m, G, 37, 20, Stream(9), workers=1)
    p8 = ar1sim.simulate_panel(m, G, 37, 20, Stream(9), workers=8)
    np.testing.assert_array_equal(p1.values, p8.values)
    np.testing.assert_array_equal(p1.coeffs, p8.coeffs)


def test_panel_cap():
    with pytest.raises(ResourceCapError):
        ar1sim.simulate_panel(mix.BetaType(1, 1.5), G, 10**4, 10**4, Stream(1), max_cells=10**7)


def test_clipping_reported():
    p = ar1sim.simulate_panel(mix.CanonicalRegVar(-0.99), G, 200, 4, Stream(2))
    assert p.clipped == int(np.sum(p.coeffs == ar1sim.COEFF_CAP))
    assert np.all(p.coeffs <= ar1sim.COEFF_CAP)


@pytest.mark.slow
def test_panel_cov_matches_theory():
    m = mix.BetaType(1, 1.5)
    panel = ar1sim.simulate_panel(m, G, 10**4, 50, Stream(11))
    x = panel.values
    for k in range(6):
        per_row = np.mean(x[:, : 50 - k] * x[:, k:], axis=1)
        se = per_row.std(ddof=1) / math.sqrt(per_row.size)
        assert abs(panel_cov(panel, k) - theoretical_cov(m, 1.0, k)) < 3 * se


def test_aggregate_single_row(stream):
    p = ar1sim.simulate_panel(mix.BetaType(2, 2), G, 1, 30, stream)
    np.testing.assert_array_equal(ar1sim.aggregate(p).values, p.values[0])


@pytest.mark.slow
def test_aggregate_autocovariance():
    m = mix.BetaType(1, 1.5)
    n, R = 100, 40
    stream = Stream(12)
    covs = []
    for r in range(R):
        agg = ar1sim.aggregate(ar1sim.simulate_panel(m, G, 10**4, n, stream.child(r))).values
        covs.append([sample_cov(agg, k, demean=False) for k in range(6)])
    covs = np.array(covs)
    se = covs.std(axis=0, ddof=1) / math.sqrt(R)
    expected = np.array([(n - k) / n * theoretical_cov(m, 1.0, k) for k in range(6)])
    assert np.all(np.abs(covs.mean(axis=0) - expected) < 3 * se)


@pytest.mark.slow
def test_degenerate_aggregate_is_nearly_constant():
    m = mix.CanonicalRegVar(-0.5)
    vals = np.array(
        [ar1sim.aggregate(ar1sim.simulate_panel(m, inn.Stable(1.5), 1000, 11, Stream(13, (r,))), "degenerate-check").values for r in range(200)]
    )
    assert np.corrcoef(vals[:, 0], vals[:, 10])[0, 1] >= 0.9


def test_aggregate_scheme_checks(stream):
    p = ar1sim.simulate_panel(mix.BetaType(2, 2), inn.Stable(1.5), 4, 10, stream)
    with pytest.raises(SpecError):
        ar1sim.aggregate(p, "finite-variance")
    assert ar1sim.aggregate(p, "stable").exponent == pytest.approx(1 / 1.5)
    with pytest.raises(SpecError):
        ar1sim.aggregate(p, "degenerate-check")
    assert ar1sim.aggregate(p, "degenerate-check", beta=-0.5).exponent == pytest.approx(4 / 3)
    with pytest.raises(SpecError):
        ar1sim.aggregate(p, "bogus")


def test_triangular_scheme(stream):
    spec = inn.IdTriplet(sigma=1.0)
    p = ar1sim.simulate_panel(mix.BetaType(2, 2), spec, 100, 5, stream, fixed_coeff=0.0)
    agg = ar1sim.aggregate(p, "triangular")
    assert agg.exponent == 0.0
    np.testing.assert_allclose(agg.values, p.values.sum(axis=0))


def test_joint_sum(stream):
    p = ar1sim.simulate_panel(mix.BetaType(2, 2), G, 1, 40, stream)
    assert ar1sim.joint_sum(p, [1.0])[0] == pytest.approx(p.values[0].sum())
    s = ar1sim.joint_sum(p, [0.25, 0.75])
    assert s[1] - s[0] == pytest.approx(p.values[0, 10:30].sum())
    with pytest.raises(SpecError):
        ar1sim.joint_sum(p, [0.0])


@pytest.mark.slow
def test_fast_growth_variance():
    beta, n = 0.5, 10
    N = n**3
    m = mix.CanonicalRegVar(beta)
    stream = Stream(14)
    norm = n ** (-1 + beta / 2) * N ** -0.5
    vals = np.array([norm * ar1sim.joint_sum(ar1sim.simulate_panel(m, G, N, n, stream.child(r)), [1.0])[0] for r in range(500)])
    target = n ** (-2 + beta) * partial_sum_variance(m, 1.0, n)
    assert abs(vals.var(ddof=1) / target - 1) < 0.15


@pytest.mark.parametrize(
    "N,n,beta,case",
    [(10**4, 10**2, 1.0, "jjj"), (10**8, 10, 0.0, "j"), (10, 10**6, 0.0, "jj")],
)
def test_growth_case(N, n, beta, case):
    g = ar1sim.growth_case(N, n, beta)
    assert g.case == case
    if case == "jjj":
        assert g.mu == pytest.approx(1.0)


def test_save_load_roundtrip(tmp_path, stream):
    p = ar1sim.simulate_panel(mix.Farima(0.3), inn.Stable(1.7, 0.2), 5, 12, stream)
    files = ar1sim.save_panel(p, tmp_path / "run")
    assert all(f.exists() for f in files)
    q = ar1sim.load_panel(tmp_path / "run")
    np.testing.assert_array_equal(p.values, q.values)
    assert q.mixing == p.mixing and q.innovation == p.innovation and q.lineage == p.lineage


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0, 0.99), n=st.integers(2, 60), seed=st.integers(0, 2**31))
def test_recursion_holds(a, n, seed):
    gen = Stream(seed).generator()
    x = ar1sim.simulate_ar1(a, G, n, gen)
    z = Stream(seed).generator().standard_normal(n)
    np.testing.assert_allclose(x[1:] - a * x[:-1], z[1:], atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(N=st.integers(1, 10**9), n=st.integers(1, 10**9), beta=st.floats(-0.9, 1.0))
def test_growth_case_total(N, n, beta):
    g = ar1sim.growth_case(N, n, beta)
    assert g.case in ("j", "jj", "jjj") and g.norm_value > 0
