import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import binom

from weightlab.geometry import SpaceParams
from weightlab.operators import (
    OperatorMatrix, TailBudgetExceeded, apply_projection, bergman_grid, boyd_norm, evidence_trend,
    fock_grid, fock_product_criterion, gaussian_margin, invertibility_criterion,
    product_invertibility_evidence, sarason_fock_classifier, toeplitz_matrix, weighted_opnorm,
)

HARDY = SpaceParams("HardyCircle")


def brute_pnorm_2x2(A, p):
    # a nonnegative matrix attains its p-norm on a nonnegative vector; scan the positive quadrant
    t = np.linspace(0, math.pi / 2, 200001)
    c, s = np.cos(t), np.sin(t)
    nrm = (c ** p + s ** p) ** (1 / p)
    X = np.vstack([c / nrm, s / nrm])
    Y = A @ X
    return float(np.max((np.abs(Y) ** p).sum(axis=0) ** (1 / p)))


def test_fock_h_of_one():
    alpha = 1.0
    g = fock_grid(alpha, R=gaussian_margin(alpha) + 2.0, accurate_radius=2.0)
    m = g.mask()
    assert m.sum() > 10
    v = apply_projection("FockH", "const:c=1", g)
    assert np.max(np.abs(v[m] - 2 * math.pi / alpha)) < 1e-7


def test_fock_p_reproduces_entire_functions():
    alpha = 0.5
    g = fock_grid(alpha, R=gaussian_margin(alpha) + 2.5, accurate_radius=2.5)
    rows = np.nonzero(g.mask())[0]
    z = g.z1()[rows]
    v = apply_projection("FockP", "poly:c=1;2;0.5", g, rows=rows)
    assert np.max(np.abs(v - (1 + 2 * z + 0.5 * z * z))) < 1e-8
    v = apply_projection("FockP", "explinear:b=0.5j", g, rows=rows)
    assert np.max(np.abs(v - np.exp(0.5j * z))) < 1e-8


def test_fock_p_rejects_undecayed_input():
    g = fock_grid(1.0, level=0)
    with pytest.raises(TailBudgetExceeded):
        apply_projection("FockP", "expquad:delta=0.6", g)


def test_bergman_projection_exact_on_polynomials():
    g = bergman_grid(0.5, 2)
    z = g.nodes
    assert np.max(np.abs(apply_projection("BergmanP", "poly:c=0;1;3", g) - (z + 3 * z * z))) < 1e-12
    # conj(z) is orthogonal to every analytic function
    assert np.max(np.abs(apply_projection("BergmanP", np.conj(z), g))) < 1e-12
    assert g.weights.sum() == pytest.approx(1.0)


@given(st.lists(st.floats(0.01, 5), min_size=4, max_size=4), st.sampled_from([1.5, 2.0, 3.0]))
@settings(max_examples=20, deadline=None)
def test_boyd_matches_brute_force(entries, p):
    A = np.array(entries).reshape(2, 2)
    est, ok, _ = boyd_norm(A.astype(complex), p)
    assert ok
    assert est == pytest.approx(brute_pnorm_2x2(A, p), rel=1e-6)


def test_boyd_two_norm_is_spectral():
    rng = np.random.default_rng(3)
    A = np.abs(rng.normal(size=(6, 6)))
    est, ok, _ = boyd_norm(A.astype(complex), 2.0)
    assert ok and est == pytest.approx(np.linalg.norm(A, 2), rel=1e-7)


def test_weighted_opnorm_unweighted_fock():
    rep = weighted_opnorm("FockP", "const:c=1", levels=range(0, 4))
    assert rep.verdict == "Finite"
    assert rep.estimate == pytest.approx(1.0, abs=1e-5)


def test_weighted_opnorm_gaussian_weight_diverges():
    rep = weighted_opnorm("FockP", "expquad:delta=0.1", levels=range(0, 4))
    assert rep.verdict == "Divergent"
    ests = [t["estimate"] for t in rep.trace]
    assert ests == sorted(ests)


def test_weighted_opnorm_heat_operator_approaches_integral():
    rep = weighted_opnorm("FockH", "const:c=1")
    ests = [t["estimate"] for t in rep.trace]
    target = 2 * math.pi / 0.25
    assert ests == sorted(ests)
    assert all(e < target * (1 + 1e-9) for e in ests)
    assert abs(ests[-1] - target) < abs(ests[0] - target)


def test_weighted_opnorm_bergman():
    assert weighted_opnorm("BergmanP", "const:c=1").estimate == pytest.approx(1.0)
    assert weighted_opnorm("BergmanP", "power:zeta=0.5").verdict == "Finite"


def test_hardy_shift():
    T = toeplitz_matrix(HARDY, "poly:c=0;1", 5).entries
    assert np.allclose(T, np.eye(5, k=-1))


def test_hardy_analytic_column_is_binomial_series():
    T = toeplitz_matrix(HARDY, "analytic:a=0.3", 12).entries
    k = np.arange(12)
    assert np.allclose(T[:, 0], binom(0.3, k) * (-1.0) ** k, atol=1e-14)


def test_fock_multiplication_by_z():
    T = toeplitz_matrix(SpaceParams("Fock", alpha=0.5), "poly:c=0;1", 8).entries
    k = np.arange(7)
    assert np.allclose(np.diag(T, -1), np.sqrt((k + 1) / 0.5))


def test_hardy_nonanalytic_symbol_fourier():
    # |1 - e^{it}|^2 = 2 - e^{it} - e^{-it}
    T = toeplitz_matrix(HARDY, "abspow:base=analytic(1-z)^1,s=2", 6).entries
    assert np.allclose(T, 2 * np.eye(6) - np.eye(6, k=1) - np.eye(6, k=-1), atol=1e-12)


def test_conjugate_toeplitz_is_adjoint():
    S = SpaceParams("BergmanDisk", gamma=0.5)
    A = toeplitz_matrix(S, "analytic:a=0.3", 7).entries
    B = toeplitz_matrix(S, "analytic:a=0.3", 7, conjugate=True).entries
    assert np.allclose(B, A.conj().T)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_matrix_binary_round_trip(r, c, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(r, c)) + 1j * rng.normal(size=(r, c))
    om = OperatorMatrix(SpaceParams("BergmanDisk", gamma=0.25), "MonomialNormalized", M, "test")
    back = OperatorMatrix.from_bytes(om.to_bytes())
    assert back.space == om.space and back.basis == om.basis and back.label == "test"
    assert np.array_equal(back.entries, M)


def test_matrix_binary_file_and_csv(tmp_path):
    om = toeplitz_matrix(HARDY, "poly:c=1;2", 3)
    path = tmp_path / "m.bin"
    om.write_binary(path)
    assert np.array_equal(OperatorMatrix.read_binary(path).entries, om.entries)
    lines = om.to_csv().splitlines()
    assert lines[0] == "row,col,real,imag" and len(lines) == 10


def test_identity_product_singular_values():
    ev = product_invertibility_evidence(HARDY, "const:c=1", "const:c=1", Ns=(8, 16))
    assert ev == [(8, pytest.approx(1.0)), (16, pytest.approx(1.0))]
    assert evidence_trend(ev) == "stable"
    assert evidence_trend([(8, 1.0), (64, 0.1)]) == "decaying"


def test_criterion_identity():
    rep = invertibility_criterion(HARDY, "const:c=1", "const:c=1")
    assert rep.inf_product == pytest.approx(1.0)
    assert rep.sup_product == pytest.approx(1.0)
    assert rep.verdict == "BoundedInvertible"


def test_criterion_bergman_pair():
    rep = invertibility_criterion(SpaceParams("BergmanDisk", p=2.0), "analytic:a=0.3", "analytic:a=-0.3")
    assert rep.inf_product == pytest.approx(1.0)
    assert rep.sup_verdict == "Finite"
    assert rep.verdict == "BoundedInvertible"
    assert evidence_trend(rep.matrix_evidence) == "stable"


def test_criterion_vanishing_symbol():
    rep = invertibility_criterion(SpaceParams("BergmanDisk"), "poly:c=1;-1", "const:c=1")
    assert rep.inf_product < 1e-3
    assert rep.verdict == "NotInvertible"


def test_fock_product_criterion_cases():
    one = fock_product_criterion("const:c=1", "const:c=1")
    assert one.sup_product == pytest.approx(1.0) and one.sup_verdict == "Finite"
    pair = fock_product_criterion("explinear:b=1", "explinear:b=-1", p=2, alpha=1.0)
    assert pair.sup_product == pytest.approx(math.e, rel=1e-6)
    assert fock_product_criterion("poly:c=0;1", "const:c=1").sup_verdict == "Divergent"


def test_sarason_classifier():
    res = sarason_fock_classifier("explinear:b=1", "scale:2,explinear:b=-1")
    assert res["is_pair"] and res["P_text"] == "z" and res["c"] == pytest.approx(2.0)
    res = sarason_fock_classifier("poly:c=1;1", "explinear:b=-1")
    assert not res["is_pair"] and res["reason"] == "fg nonconstant or g not entire"
    res = sarason_fock_classifier("const:c=0", "explinear:b=1")
    assert not res["is_pair"] and res["reason"] == "degenerate symbol"
