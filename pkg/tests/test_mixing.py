import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from aggrolab import mixing as mix
from aggrolab.errors import SpecError

SPECS = [
    mix.BetaType(1, 1.5),
    mix.BetaType(2, 3),
    mix.CanonicalRegVar(0.5),
    mix.CanonicalRegVar(-0.5),
    mix.Farima(0.25),
    mix.Tabulated((0.0, 0.3, 0.7, 0.95), (1.0, 2.0, 0.5, 0.2), beta=0.5),
]


def test_canonical_density_at_zero():
    assert mix.density(mix.CanonicalRegVar(1.0), 0.0) == 2.0


@pytest.mark.parametrize("spec", SPECS, ids=repr)
def test_unit_mass(spec):
    assert mix.integrate_against(spec, lambda u: 1.0) == pytest.approx(1.0, abs=1e-8)
    assert mix.moment(spec, 0) == 1.0
    assert mix.cdf(spec, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_farima_normaliser_by_quadrature():
    d = 0.25
    f = mix.Farima(d)
    raw = integrate.quad(lambda x: x ** (d - 1) * (1 - x) ** (1 - 2 * d) * (1 + x), 0, 1, limit=200)[0]
    assert f.C == pytest.approx(1 / raw, rel=1e-8)


@pytest.mark.parametrize(
    "spec,expected",
    [
        (mix.CanonicalRegVar(0.5), (1.5, 0.5)),
        (mix.BetaType(1, 1.5), (3 * math.sqrt(2), 0.5)),
    ],
)
def test_tail_params(spec, expected):
    c, b = mix.tail_params(spec)
    assert c == pytest.approx(expected[0], rel=1e-12) and b == expected[1]


def test_tail_params_limit_numerically():
    spec = mix.BetaType(1, 1.5)
    c, b = mix.tail_params(spec)
    x = 1 - 1e-6
    assert mix.density(spec, x) / (1 - x) ** b == pytest.approx(c, rel=1e-5)
    assert mix.tail_params(mix.Farima(0.25))[1] == pytest.approx(0.5)


def test_tabulated_tail_params_limit():
    spec = SPECS[-1]
    c, b = mix.tail_params(spec)
    x = 1 - 1e-7
    assert mix.density(spec, x) / (1 - x) ** b == pytest.approx(c, rel=1e-9)


def test_betatype_square_mean(stream):
    a = mix.sample_coeff(mix.BetaType(1, 1.5), 10**5, stream)
    assert abs(np.mean(a * a) / 0.4 - 1) < 0.01


def test_canonical_tail_probability(stream):
    a = mix.sample_coeff(mix.CanonicalRegVar(0.5), 10**6, stream)
    t = 0.05
    assert abs(np.mean(a > 1 - t) / t**1.5 - 1) < 0.1


def test_tabulated_uniform_ks(stream):
    spec = mix.Tabulated((0.0, 0.5, 0.99), (1.0, 1.0, 1.0))
    a = mix.sample_coeff(spec, 20000, stream)
    assert stats.kstest(a, "uniform").pvalue > 1e-3


@pytest.mark.parametrize("spec", SPECS, ids=repr)
def test_sampler_matches_cdf(spec, stream):
    a = mix.sample_coeff(spec, 50000, stream)
    assert np.all((a >= 0) & (a < 1))
    assert stats.kstest(a, lambda x: mix.cdf(spec, x)).pvalue > 1e-4


@pytest.mark.parametrize("p,q", [(1, 1.5), (2, 2), (0.7, 3.5)])
@pytest.mark.parametrize("k", [2, 4, 10])
def test_betatype_even_moments(p, q, k):
    spec = mix.BetaType(p, q)
    exact = special.beta(p + k / 2, q) / special.beta(p, q)
    assert mix.moment(spec, k) == pytest.approx(exact, rel=1e-10)


def test_canonical_first_moment():
    assert mix.moment(mix.CanonicalRegVar(1.0), 1) == pytest.approx(1 / 3, rel=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=repr)
def test_moment_increment_consistent(spec):
    for k in (0, 1, 5, 40):
        assert mix.moment_increment(spec, k) == pytest.approx(mix.moment(spec, k) - mix.moment(spec, k + 1), rel=1e-7, abs=1e-12)


@pytest.mark.parametrize("spec", [mix.CanonicalRegVar(0.3), mix.BetaType(2, 1.8), mix.Farima(0.3)], ids=repr)
def test_moment_power_law(spec):
    c, b = mix.tail_params(spec)
    k = 10**6
    assert k ** (b + 1) * mix.moment(spec, k) == pytest.approx(c * special.gamma(b + 1), rel=1e-3)
    assert k ** (b + 2) * mix.moment_increment(spec, k) == pytest.approx(c * special.gamma(b + 2), rel=1e-3)


def test_farima_innovation_variance():
    d = 0.25
    assert mix.farima_innovation_variance(d) == pytest.approx(math.sin(math.pi * d) / (math.pi * mix.Farima(d).C))


def test_load_tabulated_csv(tmp_path):
    p = tmp_path / "phi.csv"
    p.write_text("x,phi\n0.0,1\n0.5,1\n0.9,1\n")
    spec = mix.load_tabulated_csv(p, beta=0.0)
    assert spec.x == (0.0, 0.5, 0.9)
    assert mix.density(spec, 0.2) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "ctor", [lambda: mix.BetaType(0, 2), lambda: mix.BetaType(1, 1), lambda: mix.CanonicalRegVar(-1), lambda: mix.Farima(0.5),
             lambda: mix.Tabulated((0.5, 0.2), (1, 1)), lambda: mix.Tabulated((0.0, 1.0), (1, 1)), lambda: mix.Tabulated((0, 0.5), (-1, 1))]
)
def test_invalid_specs(ctor):
    with pytest.raises(SpecError):
        ctor()


def test_density_domain():
    with pytest.raises(SpecError):
        mix.density(mix.CanonicalRegVar(0.5), 1.0)


@settings(max_examples=30, deadline=None)
@given(p=st.floats(0.3, 4), q=st.floats(1.05, 5), k=st.integers(0, 30))
def test_moments_monotone_and_bounded(p, q, k):
    spec = mix.BetaType(p, q)
    mk, mk1 = mix.moment(spec, k), mix.moment(spec, k + 1)
    assert 0 < mk1 <= mk <= 1 + 1e-12
    assert mix.moment_increment(spec, k) >= 0


@settings(max_examples=30, deadline=None)
@given(beta=st.floats(-0.9, 3), x=st.floats(0, 0.999))
def test_cdf_is_integral_of_density(beta, x):
    spec = mix.CanonicalRegVar(beta)
    q = integrate.quad(lambda t: mix.density(spec, t), 0, x)[0]
    assert mix.cdf(spec, x) == pytest.approx(q, rel=1e-7, abs=1e-10)
