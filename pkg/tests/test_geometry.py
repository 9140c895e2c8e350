import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from weightlab.geometry import (
    DyadicRect, SpaceParams, TreeNode, annular_measure, bergman_disk_contains, bergman_distance,
    discrete_path, dyadic_subrects, enumerate_rects, mobius_ball, mobius_disk, neighbor_union,
    pseudo_metric, region_sampler, tree_decompose,
)

disk_pts = st.builds(lambda r, t: r * complex(math.cos(t), math.sin(t)),
                     st.floats(0.0, 0.99), st.floats(0.0, 2 * math.pi))


def test_pseudo_metric_examples():
    assert pseudo_metric(0.5, 0.5) == 0.0
    assert pseudo_metric(0.5, -0.5) == pytest.approx(2.0)


@given(disk_pts, disk_pts)
def test_pseudo_metric_symmetric_nonnegative(z, u):
    assert pseudo_metric(z, u) >= 0
    assert pseudo_metric(z, u) == pytest.approx(pseudo_metric(u, z), abs=1e-12)


def test_space_params_validation():
    with pytest.raises(ValueError):
        SpaceParams("BergmanDisk", gamma=-1.0)
    with pytest.raises(ValueError):
        SpaceParams("HardyCircle", n=2)
    with pytest.raises(ValueError):
        SpaceParams("Fock", alpha=0)
    with pytest.raises(ValueError):
        SpaceParams("Nowhere")
    assert SpaceParams(p=3.0).q == pytest.approx(1.5)


def test_mobius_fixed_values():
    u = 0.3 - 0.4j
    assert mobius_disk(u, 0) == pytest.approx(u)
    assert abs(mobius_disk(u, u)) < 1e-15
    assert abs(mobius_disk(0.5, mobius_disk(0.5, 0.3j)) - 0.3j) < 1e-14


@given(disk_pts, disk_pts)
def test_mobius_disk_involution(u, w):
    assert abs(mobius_disk(u, mobius_disk(u, w)) - w) < 1e-9


@settings(max_examples=30)
@given(st.lists(st.floats(-0.5, 0.5), min_size=4, max_size=4), st.lists(st.floats(-0.5, 0.5), min_size=4, max_size=4))
def test_mobius_ball_involution(a, z):
    a = np.array([a[0] + 1j * a[1], a[2] + 1j * a[3]])
    z = np.array([[z[0] + 1j * z[1], z[2] + 1j * z[3]]])
    assert np.allclose(mobius_ball(a, mobius_ball(a, z)), z, atol=1e-10)
    assert np.allclose(mobius_ball(a, np.zeros((1, 2))), a)


def test_bergman_disk_contains():
    assert bergman_disk_contains(0, 0.3, 0)
    assert bergman_disk_contains(0, 1.0, math.tanh(1.0))
    assert not bergman_disk_contains(0, 1.0, math.tanh(1.0) + 1e-6)


@given(disk_pts, disk_pts)
def test_bergman_distance_invariant(c, z):
    a = 0.2 + 0.1j
    d1 = bergman_distance(c, z)
    d2 = bergman_distance(mobius_disk(a, c), mobius_disk(a, z))
    assert d1 == pytest.approx(d2, rel=1e-7, abs=1e-9)


@pytest.mark.parametrize("gamma", [-0.5, 0.0, 1.0])
def test_annular_measure_against_dblquad(gamma):
    s_lo, s_hi, t0, t1 = 0.1, 0.35, 0.4, 1.3
    dens = lambda r, t: (gamma + 1) / math.pi * (1 - r * r) ** gamma * r
    ref, _ = integrate.dblquad(dens, t0, t1, 1 - s_hi, 1 - s_lo)
    assert float(annular_measure(s_lo, s_hi, t1 - t0, gamma)) == pytest.approx(ref, rel=1e-10)


def test_tree_root_is_disk():
    nodes = tree_decompose(0.0, 0)
    assert len(nodes) == 1
    root = nodes[0]["node"]
    assert (root.depth, root.k) == (0, 0)
    assert nodes[0]["A_S"] == pytest.approx(1.0)


@pytest.mark.parametrize("gamma", [-0.5, 0.0, 1.0])
def test_tree_top_measure_scaling_bounded(gamma):
    vals = [d["A_T"] * 2 ** (d["node"].depth * (2 + gamma)) for d in tree_decompose(gamma, 8)]
    assert max(vals) / min(vals) < 8.0
    deep = [d["A_T"] * 2 ** (d["node"].depth * (2 + gamma)) for d in tree_decompose(gamma, 8) if d["node"].depth >= 4]
    assert max(deep) / min(deep) < 1.1


def test_tree_children_partition_square():
    node = TreeNode(3, 5)
    a, b = node.children()
    assert node.is_ancestor_of(a) and node.is_ancestor_of(b)
    assert a.parent() == node
    total = a.square.measure(0.0) + b.square.measure(0.0) + node.top.measure(0.0)
    assert total == pytest.approx(node.square.measure(0.0))
    with pytest.raises(ValueError):
        TreeNode(2, 4)


def test_dyadic_subrects_depth_one():
    S = TreeNode(2, 1)
    pairs = dyadic_subrects(S, 1)
    assert len(pairs) == 4
    for Q, Q2 in pairs:
        assert Q2 == S.as_rect()
        assert Q.double() == Q2
    assert sum(Q.measure(0.3) for Q, _ in pairs) == pytest.approx(S.square.measure(0.3))


@given(st.integers(1, 8), st.data())
def test_rect_center_formula(N, data):
    m = data.draw(st.integers(1, 2 ** N))
    k = data.draw(st.integers(1, 2 ** N))
    Q = DyadicRect(N, m, k)
    expect = (m - 0.5) * 2.0 ** -N * np.exp(1j * (k - 0.5) * 2.0 ** (1 - N) * math.pi)
    assert abs(Q.center - expect) < 1e-14
    assert Q.box.contains(Q.center)


@pytest.mark.parametrize("gamma", [-0.5, 0.0, 1.0])
def test_doubling_ratio_uniform(gamma):
    R = enumerate_rects(8)
    keep = R["N"] >= 1
    N, m, k = R["N"][keep], R["m"][keep], R["k"][keep]
    h = 0.5 ** N
    meas_q = annular_measure(np.maximum(1 - m * h, 0), 1 - (m - 1) * h, 2 * math.pi * h, gamma)
    m2, h2 = (m + 1) // 2, 2 * h
    meas_2q = annular_measure(np.maximum(1 - m2 * h2, 0), 1 - (m2 - 1) * h2, 2 * math.pi * h2, gamma)
    ratio = meas_2q / meas_q
    # a rectangle never fills its double, and some sibling quadruple reaches 4
    assert np.all(ratio > 1.0)
    assert 4.0 - 1e-9 <= ratio.max() < 64.0


def test_neighbor_union_depth_one_wraps_around():
    for k in (0, 1):
        reg = neighbor_union(TreeNode(1, k))
        assert sorted(reg.params["members"]) == [[1, 0], [1, 1]]
        # both squares together fill the outer annulus 1/2 <= |z| < 1
        assert reg.measure == pytest.approx(float(annular_measure(0.0, 0.5, 2 * math.pi, 0.0)))


def test_neighbor_union_three_members():
    reg = neighbor_union(TreeNode(3, 0), gamma=0.5)
    assert sorted(reg.params["members"]) == [[3, 0], [3, 1], [3, 7]]
    assert reg.measure == pytest.approx(3 * TreeNode(3, 0).square.measure(0.5))


def test_discrete_path_examples():
    assert discrete_path((0, 0), (0, 0), 1.0).length == 0
    p = discrete_path((0, 0), (2, 3), 1.0)
    assert p.length == 5
    steps = np.abs(np.diff(p.points, axis=0)).sum(axis=1)
    assert np.allclose(steps, 1.0)
    with pytest.raises(ValueError):
        discrete_path((0.3, 0), (1, 1), 1.0)


@given(st.lists(st.integers(-20, 20), min_size=4, max_size=4), st.lists(st.integers(-20, 20), min_size=4, max_size=4),
       st.sampled_from([0.5, 1.0, 2.0]))
def test_discrete_path_length_bound(a, b, r):
    a = np.array(a) * r
    b = np.array(b) * r
    p = discrete_path(a, b, r)
    assert p.length == round(np.abs(a - b).sum() / r)
    assert p.length <= math.sqrt(4) * np.linalg.norm(a - b) / r + 1e-9
    assert np.allclose(p.points[-1], b)


def test_region_sampler_families():
    arcs = region_sampler(SpaceParams("HardyCircle"), "ApArcs", 0)
    assert len(arcs) == 1 and arcs[0].params["length"] == pytest.approx(2 * math.pi)
    balls = region_sampler(SpaceParams("BergmanDisk"), "BpGammaBalls", 3)
    assert any(b.params["radius"] == 0.125 and b.flags["boundary_intersecting"] for b in balls)
    small = region_sampler(SpaceParams("BergmanDisk"), "BpGammaBalls", 2)
    assert [b.params for b in balls[:len(small)]] == [b.params for b in small]
    cubes = region_sampler(SpaceParams("Fock"), "AprCubes", 2, r=0.5)
    assert all(c.measure == pytest.approx(0.25) for c in cubes)


def test_region_budget_env(monkeypatch):
    monkeypatch.setenv("WEIGHTLAB_BUDGET", "10")
    with pytest.raises(ValueError):
        region_sampler(SpaceParams("Fock"), "AprCubes", 3)
