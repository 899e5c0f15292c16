import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal, special

from aggrolab import fields as F
from aggrolab import innovations as inn
from aggrolab import mixing as mix
from aggrolab.errors import ResourceCapError, SpecError
from aggrolab.rng import Stream

CANON = mix.CanonicalRegVar(0.5)


def test_step_probs():
    assert F.step_probs("4N") == {(1, 0): 0.25, (-1, 0): 0.25, (0, 1): 0.25, (0, -1): 0.25}
    assert sum(F.step_probs("2N").values()) == 1
    assert (-1, 0) not in F.step_probs("3N")
    assert F.step_probs("FourN") == F.step_probs("4N")
    with pytest.raises(SpecError):
        F.step_probs("5N")


@pytest.mark.parametrize("variant", F.VARIANTS)
def test_walk_mass_conserved(variant):
    p = F.walk_probs(variant, 60, 60)
    assert np.max(np.abs(p.sum(axis=(1, 2)) - 1)) <= 1e-12


def test_walk_closed_forms():
    R = 12
    p = F.walk_probs("2N", R, R)
    assert p[2, R + 1, R + 1] == 0.5
    for k in range(R + 1):
        for t in range(k + 1):
            assert p[k, R + t, R + k - t] == pytest.approx(special.comb(k, t) * 2.0**-k, abs=1e-15)
    assert F.walk_probs("4N", 2, 2)[2, 2, 2] == 0.25


def test_walk_window_check():
    with pytest.raises(SpecError):
        F.walk_probs("4N", 5, 3)


def test_green_2n_closed_form():
    g = F.green("2N", 0.8, tol=1e-12)
    assert g.at(1, 0) == pytest.approx(0.4, abs=1e-15)
    for t in range(6):
        for s in range(6):
            exact = 0.8 ** (t + s) * special.comb(t + s, t) * 2.0 ** -(t + s)
            assert g.at(t, s) == pytest.approx(exact, abs=1e-12)


@pytest.mark.parametrize("variant", F.VARIANTS)
def test_green_at_zero_coefficient(variant):
    g = F.green(variant, 0.0)
    assert g.at(0, 0) == 1 and g.values.sum() == 1


def green_residual(table: F.GreenTable) -> float:
    steps = F.step_probs(table.variant)
    g = table.values
    res = g - table.a * F._step(g, steps)
    R = table.R
    res[R, R] -= 1.0
    return float(np.max(np.abs(res[1:-1, 1:-1])))


@pytest.mark.parametrize("variant", F.VARIANTS)
@pytest.mark.parametrize("a", [0.3, 0.6, 0.9])
def test_green_identity_and_mass(variant, a):
    tol = 1e-10
    table = F.green(variant, a, tol=tol)
    assert green_residual(table) <= 10 * tol
    assert abs(table.values.sum() - 1 / (1 - a)) <= table.bound


def test_green_small_window_bound():
    table = F.green("4N", 0.9, R=10, tol=1e-10)
    assert abs(table.values.sum() - 10) <= table.bound
    assert table.bound > 1e-10


def test_green_cap():
    with pytest.raises(ResourceCapError):
        F.green("4N", 0.9999, k_cap=1000)


@pytest.mark.parametrize("variant", F.VARIANTS)
def test_kernel_matches_series(variant):
    a = 0.7
    ker = F.green_kernel(variant, a, tol=1e-12)
    table = F.green(variant, a, tol=1e-12)
    R = min(ker.shape[0] // 2, table.R)
    k = ker[ker.shape[0] // 2 - R : ker.shape[0] // 2 + R + 1, ker.shape[0] // 2 - R : ker.shape[0] // 2 + R + 1]
    t = table.values[table.R - R : table.R + R + 1, table.R - R : table.R + R + 1]
    assert np.max(np.abs(k - t)) < 1e-10


def test_field_without_coefficient_is_innovation():
    model = F.FieldModel("4N", CANON)
    fp = F.simulate_field_panel(model, 16, 1, Stream(40), fixed_coeff=0.0)
    eps = Stream(40).child(0).generator().standard_normal(256).reshape(16, 16)
    np.testing.assert_array_equal(fp.aggregate, eps)


@pytest.mark.slow
def test_field_variance_matches_green_sum():
    a = 0.5
    model = F.FieldModel("4N", CANON)
    fp = F.simulate_field_panel(model, 320, 1, Stream(41), fixed_coeff=a)
    target = float(np.sum(F.green("4N", a, tol=1e-14).values ** 2))
    assert abs(fp.aggregate.var() / target - 1) < 0.03


def test_field_workers_identical():
    model = F.FieldModel("3N", mix.BetaType(2, 3), inn.Stable(1.6))
    a = F.simulate_field_panel(model, 12, 19, Stream(42), workers=1)
    b = F.simulate_field_panel(model, 12, 19, Stream(42), workers=3)
    assert a.aggregate.tobytes() == b.aggregate.tobytes()
    np.testing.assert_array_equal(a.coeffs, b.coeffs)
    assert a.exponent == pytest.approx(1 / 1.6)


def test_field_clipping_and_cap():
    model = F.FieldModel("4N", mix.CanonicalRegVar(-0.9))
    fp = F.simulate_field_panel(model, 8, 8, Stream(43))
    assert fp.clipped == int(np.sum(fp.coeffs == F.RADIAL_CAP))
    with pytest.raises(ResourceCapError):
        F.simulate_field_panel(model, 100, 100, Stream(43), keep_fields=True, max_cells=10**5)


def test_field_model_rejects_heavy_innovations():
    with pytest.raises(SpecError):
        F.FieldModel("4N", CANON, inn.Stable(0.8))


def test_white_noise_spectrum():
    assert F.field_spectral_density("4N", None, 2.0, 0.3, -1.2) == pytest.approx(2.0 / (2 * math.pi) ** 2)


def test_spectral_symmetries():
    f4 = lambda x, y: F.field_spectral_density("4N", CANON, 1.0, x, y)
    f2 = lambda x, y: F.field_spectral_density("2N", CANON, 1.0, x, y)
    v = f4(0.3, -0.1)
    for w in (f4(-0.1, 0.3), f4(-0.3, -0.1), f4(0.3, 0.1), f4(-0.3, 0.1)):
        assert w == pytest.approx(v, rel=1e-10)
    assert f2(0.3, -0.1) == pytest.approx(f2(-0.1, 0.3), rel=1e-10)
    assert abs(f2(0.3, -0.1) / f2(-0.3, -0.1) - 1) > 1e-3


def test_f4_radial_exponent():
    vals = [(r * r) ** 0.5 * F.field_spectral_density("4N", CANON, 1.0, r / math.sqrt(2), r / math.sqrt(2)) for r in (1e-2, 1e-3)]
    assert abs(vals[1] / vals[0] - 1) < 0.03


def f2_sum_diff(e, d):
    return F.field_spectral_density("2N", CANON, 1.0, (e + d) / 2, (e - d) / 2)


def test_f2_exponent_along_scaling_curve():
    # (x-y)^2 / |x+y| held at 1 keeps the scaling function at a fixed argument
    vals = [e**0.5 * f2_sum_diff(e, math.sqrt(e)) for e in (1e-3, 1e-4)]
    assert abs(vals[1] / vals[0] - 1) < 0.03


@pytest.mark.xfail(strict=True, reason="with x-y fixed the scaling-function argument diverges; see decisions ledger")
def test_f2_exponent_with_fixed_difference():
    vals = [e**0.5 * f2_sum_diff(e, 0.5) for e in (1e-2, 1e-3)]
    assert abs(vals[1] / vals[0] - 1) < 0.03


def test_scaling_exponents():
    assert F.scaling_exponents("4N", 2.0, 0.5) == (1.5, 1.5, True)
    assert F.scaling_exponents("2N", 2.0, 0.5) == (1.0, 2.0, False)
    assert F.scaling_exponents("3N", 1.7, 0.3) == F.scaling_exponents("2N", 1.7, 0.3)


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(1.05, 2.0), frac=st.floats(0.01, 0.99), variant=st.sampled_from(["2N", "3N"]))
def test_anisotropic_exponent_ratio(alpha, frac, variant):
    h1, h2, iso = F.scaling_exponents(variant, alpha, frac * (alpha - 1))
    assert h2 == 2 * h1 and not iso


def test_rectangle_sums(stream):
    x = stream.generator().standard_normal((9, 7))
    V = F.partial_sums(x)
    assert F.increment(V, (3, 2, 3, 6)) == 0
    assert F.rectangle_sum(x, (1, 2, 5, 6)) == pytest.approx(x[1:5, 2:6].sum())
    parts = [(1, 2, 3, 4), (3, 2, 5, 4), (1, 4, 3, 6), (3, 4, 5, 6)]
    assert sum(F.increment(V, c) for c in parts) == pytest.approx(F.increment(V, (1, 2, 5, 6)))
    assert F.scaled_rectangle(16, 1.0, 1.0, 1.0, 2.0) == (0, 0, 16, 4)
    with pytest.raises(SpecError):
        F.increment(V, (0, 0, 10, 1))


def test_exports(tmp_path):
    table = F.green("2N", 0.5, tol=1e-6)
    p = F.write_green_csv(table, tmp_path / "g.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "t,s,g" and len(lines) > 1
    files = F.save_field(np.zeros((3, 3)), tmp_path / "f", {"variant": "4N"})
    assert np.load(files[0]).shape == (3, 3)


def expected_scaled_variance(n: int, H: float = 1.5) -> float:
    """E_A Var(n^-H * rectangle sum) for 4N, CanonicalRegVar(0.5), radial clipping included."""
    delta = 1 - F.RADIAL_CAP

    def cond(a):
        ker = F.green_kernel("4N", a, tol=1e-8)
        conv = signal.fftconvolve(np.ones((n, n)), ker)
        return float(np.sum(conv**2))

    total = delta**1.5 * cond(F.RADIAL_CAP)  # clipped mass P(1 - A < delta)
    x, w = np.polynomial.legendre.leggauss(8)
    edges = np.geomspace(delta, 1.0, 4)
    for lo, hi in zip(edges[:-1], edges[1:]):
        u = 0.5 * (hi - lo) * (x + 1) + lo
        total += 0.5 * (hi - lo) * sum(wi * 1.5 * ui**0.5 * cond(1 - ui) for wi, ui in zip(w, u))
    return total / n ** (2 * H)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="radial clipping caps the correlation length below the window sizes; see decisions ledger")
def test_scaling_collapse_4n():
    v = [expected_scaled_variance(n) for n in (16, 32, 64)]
    assert max(v) / min(v) - 1 <= 0.25
