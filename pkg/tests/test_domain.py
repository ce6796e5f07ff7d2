"""Ball adjacency vs O(n^2) distance scans, grid construction, interior masks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import atv


def _dist(a, b, metric):
    d = np.abs(np.asarray(a, float) - np.asarray(b, float))
    if metric == "euclidean":
        return float(np.sqrt((d * d).sum()))
    if metric == "l1":
        return float(d.sum())
    if metric == "linf":
        return float(d.max())
    raise AssertionError(metric)


def balls_by_scan(points, metric, eps):
    """The whole adjacency by brute-force pairwise distances."""
    pts = np.atleast_2d(np.asarray(points, float))
    thr = eps * (1.0 + 1e-12)
    return [
        sorted(j for j in range(len(pts)) if _dist(pts[i], pts[j], metric) <= thr)
        for i in range(len(pts))
    ]


def test_grid_1d_frozen_layout(grid1d):
    assert grid1d.n == 10
    assert grid1d.dim == 1
    xs = grid1d.points[:, 0]
    assert xs[0] == 0.05
    assert repr(float(xs[-1])) == "0.9500000000000001"
    assert np.allclose(np.diff(xs), 0.1)
    assert grid1d.balls[0].tolist() == [0, 1, 2]
    assert grid1d.balls[4].tolist() == [2, 3, 4, 5, 6]


def test_grid_weights_sum_to_box_volume():
    dom = atv.build_grid([(0.0, 2.0), (0.0, 1.0)], h=0.25, epsilon=0.5)
    assert dom.quad_weights.shape == (dom.n,)
    assert np.all(dom.quad_weights == 0.25**2)
    assert abs(dom.quad_weights.sum() - 2.0) < 1e-12


def test_grid_2d_corner_ball_excludes_diagonal():
    dom = atv.build_grid([(0.0, 1.0), (0.0, 1.0)], h=0.25, epsilon=0.3)
    assert dom.n == 16
    corner = dom.balls[0]
    dists = np.linalg.norm(dom.points[corner] - dom.points[0], axis=1)
    # self plus the two axis neighbours at 0.25; the diagonal at ~0.354 is out
    assert len(corner) == 3
    assert sorted(np.round(dists, 12).tolist()) == [0.0, 0.25, 0.25]


def test_grid_rejects_starved_balls():
    with pytest.raises(ValueError, match="epsilon"):
        atv.build_grid([(0.0, 1.0)], h=0.1, epsilon=0.05)


def test_grid_rejects_uneven_spacing():
    with pytest.raises(ValueError, match="divide"):
        atv.build_grid([(0.0, 1.0)], h=0.3, epsilon=0.6)


def test_grid_rejects_bad_boxes_and_radii():
    with pytest.raises(ValueError):
        atv.build_grid([(1.0, 0.0)], h=0.1, epsilon=0.25)
    with pytest.raises(ValueError):
        atv.build_grid([(0.0, 1.0)], h=-0.1, epsilon=0.25)
    with pytest.raises(ValueError):
        atv.build_grid([(0.0, 1.0)], h=0.1, epsilon=-1.0)
    with pytest.raises(ValueError):
        atv.build_grid([(0.0, 1.0)], h=0.1)


def test_unknown_metric_rejected():
    with pytest.raises(ValueError, match="metric"):
        atv.build_grid([(0.0, 1.0)], h=0.1, epsilon=0.25, metric="minkowski")


def test_single_point_cloud():
    dom = atv.build_point_cloud([[0.7]], epsilon=0.1)
    assert dom.n == 1
    assert dom.balls[0].tolist() == [0]
    assert dom.quad_weights.tolist() == [1.0]


def test_mutual_inclusion_at_exact_radius():
    # distances representable exactly in binary: 3.0 in 1D, the 3-4-5 pair in 2D
    dom = atv.build_point_cloud([[0.0], [3.0]], epsilon=3.0)
    assert dom.balls[0].tolist() == [0, 1]
    assert dom.balls[1].tolist() == [0, 1]

    dom2 = atv.build_point_cloud([[0.0, 0.0], [3.0, 4.0]], epsilon=5.0)
    assert dom2.balls[0].tolist() == [0, 1]
    assert dom2.balls[1].tolist() == [0, 1]


@pytest.mark.parametrize("metric", ["euclidean", "l1", "linf"])
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_cloud_adjacency_matches_scan(metric, dim):
    rng = np.random.default_rng(7 * dim + hash(metric) % 97)
    pts = rng.random((60, dim))
    eps = 0.35
    dom = atv.build_point_cloud(pts, epsilon=eps, metric=metric)
    expected = balls_by_scan(pts, metric, eps)
    got = [b.tolist() for b in dom.balls]
    assert got == expected


def test_grid_adjacency_matches_scan_2d():
    dom = atv.build_grid([(0.0, 1.0), (0.0, 1.0)], h=0.125, epsilon=0.3)
    expected = balls_by_scan(dom.points, "euclidean", 0.3)
    assert [b.tolist() for b in dom.balls] == expected


def test_ball_reciprocity_exhaustive():
    rng = np.random.default_rng(11)
    pts = rng.random((300, 2))
    dom = atv.build_point_cloud(pts, epsilon=0.2)
    member_sets = [set(b.tolist()) for b in dom.balls]
    for i in range(dom.n):
        assert i in member_sets[i]
        for j in member_sets[i]:
            assert i in member_sets[j]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 40))
def test_ball_symmetry_and_self_inclusion(seed, n):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2)) * 2.0
    dom = atv.build_point_cloud(pts, epsilon=0.5)
    member_sets = [set(b.tolist()) for b in dom.balls]
    assert all(i in member_sets[i] for i in range(n))
    assert all(i in member_sets[j] for i in range(n) for j in member_sets[i])


def test_ball_sizes_match_indptr(grid1d):
    sizes = [len(b) for b in grid1d.balls]
    assert grid1d.ball_sizes.tolist() == sizes
    assert grid1d.ball_indptr[-1] == sum(sizes)


def test_pair_positions_roundtrip(grid1d):
    rows = np.repeat(np.arange(grid1d.n), grid1d.ball_sizes)
    cols = grid1d.ball_indices
    pos = grid1d.pair_positions(rows, cols)
    assert np.array_equal(pos, np.arange(len(cols)))


def test_pair_positions_rejects_far_pairs(grid1d):
    with pytest.raises(KeyError):
        grid1d.pair_positions(np.array([0]), np.array([9]))


def test_check_field_validates_shape_and_values(grid1d):
    grid1d.check_field(np.zeros(10), "u")
    with pytest.raises(ValueError, match="u"):
        grid1d.check_field(np.zeros(9), "u")
    with pytest.raises(ValueError, match="finite"):
        grid1d.check_field(np.full(10, np.nan), "u")


def test_interior_mask_1d(grid1d):
    mask = atv.interior_mask(grid1d)
    xs = grid1d.points[:, 0]
    assert np.array_equal(mask.flags, (xs > 0.25) & (xs < 0.75))
    assert mask.count == 4


def test_interior_mask_empty_when_radius_spans_half_the_box():
    dom = atv.build_grid([(0.0, 1.0)], h=0.05, epsilon=0.5)
    mask = atv.interior_mask(dom)
    assert mask.count == 0
    assert mask.indices.size == 0


def test_interior_mask_2d_corners_unflagged():
    dom = atv.build_grid([(0.0, 1.0), (0.0, 1.0)], h=0.25, epsilon=0.3)
    mask = atv.interior_mask(dom)
    corner_ids = [0, 3, 12, 15]
    assert not mask.flags[corner_ids].any()


def test_interior_mask_needs_grid_mode():
    dom = atv.build_point_cloud([[0.1], [0.9]], epsilon=1.0)
    with pytest.raises(ValueError):
        atv.interior_mask(dom)


def test_point_cloud_custom_weights():
    dom = atv.build_point_cloud([[0.0], [1.0]], epsilon=2.0, quad_weights=[0.25, 0.75])
    assert dom.quad_weights.tolist() == [0.25, 0.75]
    with pytest.raises(ValueError):
        atv.build_point_cloud([[0.0], [1.0]], epsilon=2.0, quad_weights=[1.0])
