import numpy as np
import pytest
from hypothesis import given, strategies as st

from weightlab.symbols import DSLError, Points, parse_symbol

SPECS = [
    "const:c=2.5", "power:zeta=0.5", "analytic:a=0.3", "abspow:base=analytic(1-z)^0.3,s=2",
    "abspow:base=[explinear:b=1],s=0.5", "explinear:b=1-2j", "expquad:delta=0.1", "expabs:c=1",
    "expreal:c=1;0.5", "coordpow:a=0.5", "linear:c=-2", "logabs:base=[explinear:b=1]", "poly:c=1;2;0.5",
    "scale:2,explinear:b=-1",
]

disk = Points.disk(np.array([0.1 + 0.2j, -0.5j, 0.7, 0.3 - 0.6j]))
plane = Points.plane(np.array([0.1 + 0.2j, -1.5j, 2.0, 0.3 - 0.6j]))


@pytest.mark.parametrize("text", SPECS)
def test_dsl_round_trip(text):
    a = parse_symbol(text)
    b = parse_symbol(a.dsl())
    assert b.dsl() == a.dsl()
    pts = plane if text.split(":")[0] in ("expquad", "expabs", "expreal", "coordpow", "linear") else disk
    assert np.allclose(a.value(pts), b.value(pts), equal_nan=True)


@pytest.mark.parametrize("bad", ["", "power", "power:zeta", "nosuch:x=1", "power:eta=1", "scale:2", "expreal:c=x"])
def test_dsl_errors(bad):
    with pytest.raises(DSLError):
        parse_symbol(bad)


def test_power_weight_values():
    z = np.array([0.0, 0.5, 0.9j])
    v = parse_symbol("power:zeta=1.5").value(Points.disk(z))
    assert np.allclose(v, (1 - np.abs(z) ** 2) ** 1.5)


@given(st.complex_numbers(max_magnitude=0.99))
def test_analytic_power_matches_principal_branch(z):
    v = parse_symbol("analytic:a=0.3").value(Points.disk(np.array([z])))[0]
    assert v == pytest.approx((1 - z) ** 0.3, rel=1e-12, abs=1e-14)


def test_taylor_coefficients_of_analytic_power():
    c = parse_symbol("analytic:a=0.3").taylor(6)
    expect = [1.0]
    for k in range(1, 6):
        expect.append(expect[-1] * (k - 1 - 0.3) / k)
    assert np.allclose(c, expect)


def test_polynomial_boundary_zero_detected():
    assert parse_symbol("poly:c=1;-1").singular_points() == [pytest.approx(1.0)]
    assert parse_symbol("poly:c=1;-0.5").singular_points() == []
