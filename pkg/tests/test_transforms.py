import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import comb

from weightlab.geometry import SpaceParams
from weightlab.quadrature import QuadratureGrid
from weightlab.transforms import (
    berezin, grid_build, grid_descriptor, heat_tilde, kernel_eval, poisson_hat, twisted_berezin,
)


def radial_power_oracle(zeta, gamma):
    # B_gamma(w_zeta)(0) as a 1-D integral in s = |u|^2
    val, _ = integrate.quad(lambda s: gamma + 1.0, 0, 1, weight="alg", wvar=(0.0, gamma + zeta))
    return val


@given(st.complex_numbers(max_magnitude=0.95))
def test_bergman_kernel_at_origin(z):
    assert kernel_eval("BergmanK", z, 0) == pytest.approx(1.0)


def test_normalized_kernel_diagonal():
    z = 0.6 - 0.2j
    k = kernel_eval("BergmanNormalized", z, z, SpaceParams(gamma=0.5))
    assert abs(k) == pytest.approx((1 - abs(z) ** 2) ** (-2.5 / 2))


def test_heat_kernel_is_probability_density():
    val, _ = integrate.dblquad(lambda y, x: kernel_eval("Heat", 0.3, x + 1j * y, SpaceParams("Fock", alpha=2.0)).real,
                               -6, 6, -6, 6)
    assert val == pytest.approx(1.0, rel=1e-8)


@pytest.mark.parametrize("z", [0, 0.5, 0.9 + 0.1j, -0.99])
def test_berezin_of_one(z):
    r = berezin("const:c=1", z, SpaceParams(gamma=0.3))
    assert r.value == pytest.approx(1.0, abs=1e-8)
    assert r.verdict == "Convergent"


def test_berezin_ball_of_one():
    r = berezin("const:c=1", np.array([0.3, 0.2j]), SpaceParams("BergmanBall", n=2, gamma=0.0))
    assert r.value == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("zeta", [-0.5, 0.5, 1.0, 2.5])
@pytest.mark.parametrize("gamma", [-0.5, 0.0, 1.0])
def test_berezin_power_weight_closed_form(zeta, gamma):
    r = berezin(f"power:zeta={zeta}", 0, SpaceParams(gamma=gamma))
    if gamma + zeta <= -1:
        assert r.verdict == "Divergent"
        return
    assert r.value == pytest.approx(radial_power_oracle(zeta, gamma), rel=1e-9)
    assert r.value == pytest.approx((gamma + 1) / (gamma + zeta + 1), rel=1e-9)


def test_berezin_divergent_power():
    assert berezin("power:zeta=-1.5", 0.2, SpaceParams(gamma=0.0)).verdict == "Divergent"


def test_berezin_error_shrinks_with_level():
    exact = 1 / 1.5
    errs = [abs(berezin("power:zeta=0.5", 0, SpaceParams(), level=L).value - exact) for L in range(5)]
    for a, b in zip(errs, errs[1:]):
        assert b <= max(a, 1e-13)


def test_twisted_reduces_to_berezin():
    r = twisted_berezin("const:c=1", 0.7, 0.0, 2.0, SpaceParams())
    assert r.value == pytest.approx(1.0, abs=1e-8)


def test_twisted_kernel_power_series_oracle():
    # integral of |k_z|^4 dA at z = 0.9 via the power series of (1 - zbar u)^-4
    x = 0.81
    k = np.arange(4000)
    oracle = (1 - x) ** 4 * np.sum(comb(k + 3, 3) ** 2 * x ** k / (k + 1))
    r = twisted_berezin("const:c=1", 0.9, 1 - 2 / 4, 4, SpaceParams(gamma=0.0, p=4))
    assert r.value == pytest.approx(oracle, rel=1e-8)


def test_poisson_examples():
    assert poisson_hat("const:c=1", 0.8j).value == pytest.approx(1.0)
    z = 0.4 + 0.2j
    assert complex(poisson_hat("poly:c=0;1", z).value) == pytest.approx(z, abs=1e-12)


@given(st.floats(0, 0.95), st.floats(0, 2 * math.pi))
@settings(max_examples=25, deadline=None)
def test_poisson_of_harmonic_polynomial(r, t):
    z = r * complex(math.cos(t), math.sin(t))
    # |1 - e^{it}|^2 = 2 - 2 cos t extends to 2 - 2 Re z
    v = poisson_hat("abspow:base=analytic(1-z)^1,s=2", z).value
    assert v == pytest.approx(2 - 2 * z.real, abs=1e-10)


def test_berezin_approaches_poisson_as_gamma_decreases():
    f = "abspow:base=analytic(1-z)^1,s=2"
    z = 0.4 + 0.2j
    target = poisson_hat(f, z).value
    gaps = [abs(berezin(f, z, SpaceParams(gamma=g)).value - target) for g in (0.0, -0.5, -0.9, -0.99)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_heat_of_one():
    r = heat_tilde("const:c=1", np.array([1.0 + 2.0j]), 0.7)
    assert r.value == pytest.approx(1.0, abs=1e-10)


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-2, 2), st.floats(-2, 2), st.sampled_from([0.5, 1.0, 2.0]))
@settings(max_examples=25, deadline=None)
def test_heat_of_real_exponential(c1, c2, x, y, alpha):
    r = heat_tilde(f"expreal:c={c1};{c2}", np.array([x + 1j * y]), alpha)
    expect = math.exp(c1 * x + c2 * y + (c1 * c1 + c2 * c2) / (4 * alpha))
    assert r.value == pytest.approx(expect, rel=1e-7)


def test_heat_semigroup():
    # the heat transform of e^{c.x} is a constant multiple of e^{c.x}, so nesting is checkable
    c, a, b = "expreal:c=0.8;-0.4", 1.0, 0.5
    z = np.array([0.3 - 0.1j])
    factor = heat_tilde(c, np.array([0j]), b).value
    nested = heat_tilde(f"scale:{factor!r},{c}", z, a).value
    direct = heat_tilde(c, z, a * b / (a + b)).value
    assert nested == pytest.approx(direct, rel=1e-7)


def test_heat_of_holomorphic_exponential_is_mean_value():
    z = 0.3 + 0.2j
    r = heat_tilde("explinear:b=1", np.array([z]), 1.0)
    assert complex(r.value) == pytest.approx(np.exp(z), rel=1e-6)


def test_grid_build_total_weights():
    for params in (SpaceParams(gamma=0.4), SpaceParams("HardyCircle"), SpaceParams("BergmanBall", n=2)):
        g = grid_build(params, 2)
        assert isinstance(g, QuadratureGrid)
        assert g.total_weight() == pytest.approx(1.0, rel=1e-10)
        d = grid_descriptor(g)
        assert d["nodes"] == g.size
    with pytest.raises(ValueError):
        grid_build(SpaceParams(), -1)
