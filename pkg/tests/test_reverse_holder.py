import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weightlab.geometry import TreeNode, annular_measure, enumerate_rects
from weightlab.reverse_holder import (
    admissible_epsilon, c1_characteristic, constants_from_c1, doubling_constant, epsilon_pair,
    lemma52_check, lemma59_check, rh_certificate, rh_constant, verify_theorem51,
)

F = "analytic:a=0.1"


def test_c1_of_constant_is_one():
    C1, info = c1_characteristic("const:c=1", 2.0, 0.0, 4)
    assert C1 == pytest.approx(1.0)
    assert info["kind"] == "DyadicRect"


def test_c1_stable_in_depth():
    a, _ = c1_characteristic(F, 2.0, 0.0, 5)
    b, info = c1_characteristic(F, 2.0, 0.0, 6)
    assert math.isfinite(a) and abs(b - a) <= 0.05 * a
    assert info["value"] == pytest.approx(b)


def test_c1_divergent_for_nonintegrable_dual():
    # |1 - z|^-2 is not area integrable at z = 1
    C1, _ = c1_characteristic("analytic:a=1.0", 2.0, 0.0, 3)
    assert C1 == math.inf


def test_constants_from_c1():
    c = constants_from_c1(1.0, 2.0)
    assert c["delta"] == 0.75 and c["delta_prime"] == 0.75
    with pytest.raises(ValueError):
        constants_from_c1(0.5, 2.0)


@given(st.floats(1.0, 50.0), st.floats(1.5, 6.0))
def test_delta_in_unit_interval(C1, p):
    c = constants_from_c1(C1, p)
    assert 0 < c["delta"] < 1 and 0 < c["delta_prime"] < 1


@pytest.mark.parametrize("gamma", [-0.5, 0.0, 1.0])
def test_doubling_constant_plateau(gamma):
    a, b = doubling_constant(gamma, 7), doubling_constant(gamma, 8)
    assert b >= 4.0
    assert abs(b - a) <= 0.01 * b


def test_flat_doubling_ratio_clusters_at_four():
    r = enumerate_rects(8)
    sel = (r["N"] >= 3) & (r["m"] < 2 ** r["N"]) & (r["m"] > 2)
    N, m = r["N"][sel], r["m"][sel]
    h = 0.5 ** N
    mq = annular_measure(np.maximum(1 - m * h, 0), 1 - (m - 1) * h, 2 * math.pi * h, 0.0)
    m2 = (m + 1) // 2
    m2q = annular_measure(np.maximum(1 - m2 * 2 * h, 0), 1 - (m2 - 1) * 2 * h, 4 * math.pi * h, 0.0)
    assert np.median(m2q / mq) == pytest.approx(4.0, rel=0.02)
    assert doubling_constant(0.0, 8, away_from_boundary=True) >= 4.0


def test_admissible_epsilon():
    res = admissible_epsilon(1.0, 0.75)
    assert res["epsilon_max"] == pytest.approx(math.log(4 / 3) / math.log(2))
    with pytest.raises(ValueError):
        res["rh_constant"](res["epsilon_max"])


def test_rh_constant_monotone_and_blows_up():
    C, d = 8.0, 0.8
    emax = admissible_epsilon(C, d)["epsilon_max"]
    grid = np.linspace(0.01, 0.99, 40) * emax
    vals = [rh_constant(C, d, e) for e in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert rh_constant(C, d, emax * 1.0001) == math.inf


def test_epsilon_pair_symmetric_case():
    assert epsilon_pair(0.1, 2.0) == pytest.approx(0.1, abs=1e-15)


@given(st.floats(0.001, 0.2), st.floats(1.2, 5.0))
def test_epsilon_pair_balance(eps2, p):
    q = p / (p - 1)
    eps1 = epsilon_pair(eps2, p)
    assert eps2 / (q * (q + eps2)) == pytest.approx(eps1 / (p * (p + eps1)), rel=1e-13, abs=1e-15)


def test_epsilon_pair_p3():
    eps1 = epsilon_pair(0.05, 3.0)
    assert abs(0.05 / (1.5 * 1.55) - eps1 / (3 * (3 + eps1))) < 1e-14


def test_rh_certificate_chain(tmp_path):
    path = tmp_path / "squares.csv"
    cert = rh_certificate(F, 2.0, 0.0, 6, squares_csv=str(path))
    assert cert.passed
    assert cert.delta == pytest.approx(1 - 1 / (4 * cert.C1), abs=1e-15)
    assert 0 < cert.epsilon <= cert.epsilon2
    assert cert.rh_constant >= 1
    d = cert.to_dict()
    assert d["pass"] is True and "passed" not in d
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {"beta_depth", "beta_k", "N", "m", "k", "avg_w", "avg_dual", "product"}
    assert max(float(r["product"]) for r in rows) == pytest.approx(cert.C1, rel=1e-9)


def test_verify_constant_symbol():
    res = verify_theorem51("const:c=1", 2.0, 0.0, 0.1, 0.1, max_j=4)
    assert res["verdict_52"] == "Finite"
    assert res["sup_52"] == pytest.approx(1.0)


def test_verify_monotone_in_epsilon():
    small = verify_theorem51(F, 2.0, 0.0, 0.05, 0.05, max_j=6)
    large = verify_theorem51(F, 2.0, 0.0, 0.1, 0.1, max_j=6)
    assert small["verdict_52"] == large["verdict_52"] == "Finite"
    for a, b in zip(small["trace"], large["trace"]):
        assert a["sup_52"] <= b["sup_52"] * (1 + 1e-10)


def test_subset_bound_constant_symbol():
    assert lemma59_check("const:c=1", 2.0, 0.0, 0.05)["C"] == pytest.approx(1.0)


def test_subset_bound_stable_under_more_trials():
    a = lemma59_check(F, 2.0, 0.0, 0.05, betas=[TreeNode(2, 0), TreeNode(4, 0)], subset_trials=200)["C"]
    b = lemma59_check(F, 2.0, 0.0, 0.05, betas=[TreeNode(2, 0), TreeNode(4, 0)], subset_trials=400)["C"]
    assert a >= 1 and abs(b - a) <= 0.1 * a


def test_subset_bound_reproducible():
    a = lemma59_check(F, 2.0, 0.0, 0.05, betas=[TreeNode(3, 1)], subset_trials=50, seed=7)
    b = lemma59_check(F, 2.0, 0.0, 0.05, betas=[TreeNode(3, 1)], subset_trials=50, seed=7)
    assert a == b


def test_pair_ratio_constant():
    assert lemma52_check("const:c=1")["C_R"] == 1.0
    a = lemma52_check(F, pair_samples=400)["C_R"]
    b = lemma52_check(F, pair_samples=800)["C_R"]
    assert math.isfinite(a) and abs(b - a) <= 0.05 * a
    assert lemma52_check(F, R=2.0)["C_R"] > a
