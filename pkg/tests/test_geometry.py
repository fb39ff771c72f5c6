import math

import numpy as np
import pytest

from wph.geometry import (
    Affine,
    Linear,
    PointCloud,
    PowerLaw,
    Region,
    linear_radii,
    pairwise_distances,
    weighted_distance_matrix,
)
from _oracles import brute_distance_matrix


class TestPointCloud:
    def test_shapes_and_freeze(self):
        cloud = PointCloud([[0, 0], [3, 4]], [1, 2], labels=("a", "b"))
        assert cloud.n == 2 and cloud.dim == 2
        with pytest.raises(ValueError):
            cloud.points[0, 0] = 5.0

    def test_one_dimensional_input(self):
        cloud = PointCloud([0.0, 1.0, 2.5], [1, 1, 1])
        assert cloud.dim == 1 and len(cloud) == 3

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            PointCloud([[0, 0]], [0.0])
        with pytest.raises(ValueError):
            PointCloud([[0, 0]], [-1.0])
        with pytest.raises(ValueError):
            PointCloud([[0, 0]], [math.nan])

    def test_rejects_count_mismatch(self):
        with pytest.raises(ValueError):
            PointCloud([[0, 0], [1, 1]], [1.0])
        with pytest.raises(ValueError):
            PointCloud([[0, 0]], [1.0], labels=("a", "b"))

    def test_empty_cloud_is_valid(self):
        cloud = PointCloud(np.zeros((0, 2)), np.zeros(0))
        assert len(cloud) == 0


class TestPairwiseDistances:
    def test_three_four_five(self):
        m = pairwise_distances(PointCloud([[0, 0], [3, 4]], [1, 1]))
        assert m[0, 1] == 5.0 and m[1, 0] == 5.0
        assert m[0, 0] == 0.0

    def test_single_point(self):
        m = pairwise_distances(PointCloud([[2, 7]], [1]))
        assert m.shape == (1, 1) and m[0, 0] == 0.0

    def test_matches_two_loop_oracle(self):
        rng = np.random.default_rng(42)
        pts = rng.uniform(0, 1, (10, 2))
        cloud = PointCloud(pts, np.ones(10))
        np.testing.assert_array_equal(pairwise_distances(cloud), brute_distance_matrix(pts))


class TestWeightedDistanceMatrix:
    def test_unit_weights_pair(self):
        m = weighted_distance_matrix(PointCloud([[0, 0], [2, 0]], [1, 1]))
        assert m[0, 1] == 1.0

    def test_mixed_weights_pair(self):
        m = weighted_distance_matrix(PointCloud([[0, 0], [3, 0]], [1, 2]))
        assert m[0, 1] == pytest.approx(1.0)

    def test_half_weights_reduce_to_plain_distances(self):
        rng = np.random.default_rng(1)
        cloud = PointCloud(rng.uniform(0, 1, (8, 3)), np.full(8, 0.5))
        np.testing.assert_array_equal(
            weighted_distance_matrix(cloud), pairwise_distances(cloud)
        )

    def test_matches_edge_entry_times(self):
        from wph.filtration import edge_entry_time

        rng = np.random.default_rng(7)
        cloud = PointCloud(rng.uniform(0, 1, (8, 2)), rng.uniform(0.3, 3.0, 8))
        m = weighted_distance_matrix(cloud)
        radii = linear_radii(cloud)
        for i in range(8):
            for j in range(i + 1, 8):
                assert m[i, j] == pytest.approx(
                    edge_entry_time(cloud, radii, i, j), abs=1e-12
                )


FAMILIES = [
    Linear(2.0),
    Linear(0.37),
    Affine(0.5, 1.5),
    Affine(0.0, 3.0),
    PowerLaw(1.0, 2.0),
    PowerLaw(2.5, 0.6),
]


class TestRadiusFunctions:
    def test_linear_closed_forms(self):
        f = Linear(2.0)
        assert f(3.0) == 6.0
        assert f.inverse(6.0) == 3.0
        assert f.inverse_derivative(13.7) == 0.5

    def test_power_law_closed_forms(self):
        f = PowerLaw(1.0, 2.0)
        assert f.inverse(9.0) == pytest.approx(3.0)
        # centered finite difference of the inverse
        h = 1e-6
        fd = (f.inverse(9 + h) - f.inverse(9 - h)) / (2 * h)
        assert f.inverse_derivative(9.0) == pytest.approx(1 / 6, abs=1e-6)
        assert f.inverse_derivative(9.0) == pytest.approx(fd, abs=1e-6)

    def test_affine_range_error_and_clamp(self):
        f = Affine(0.5, 1.5)
        with pytest.raises(ValueError):
            f.inverse(0.2)
        assert f.inverse_clamped(0.2) == 0.0
        assert f.inverse(2.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("f", FAMILIES, ids=repr)
    def test_eval_strictly_increasing(self, f):
        ts = np.linspace(0.0, 100.0, 1000)
        vals = np.array([f(t) for t in ts])
        assert np.all(np.diff(vals) > 0)

    @pytest.mark.parametrize("f", FAMILIES, ids=repr)
    def test_inverse_of_eval_is_identity(self, f):
        ts = np.linspace(0.0, 100.0, 1000)[1:]
        back = np.array([f.inverse(f(t)) for t in ts])
        np.testing.assert_allclose(back, ts, rtol=1e-10)

    @pytest.mark.parametrize("f", FAMILIES, ids=repr)
    def test_inverse_round_trip_large_arguments(self, f):
        for t in (1e-3, 1.0, 17.3, 1e4, 1e6):
            assert f.inverse(f(t)) == pytest.approx(t, rel=1e-12)

    @pytest.mark.parametrize("f", FAMILIES, ids=repr)
    def test_inverse_derivative_matches_finite_differences(self, f):
        ss = np.linspace(f.range_start + 0.5, f.range_start + 40.0, 50)
        h = 1e-6
        for s in ss:
            fd = (f.inverse(s + h) - f.inverse(s - h)) / (2 * h)
            assert f.inverse_derivative(s) == pytest.approx(fd, rel=1e-5)

    @pytest.mark.parametrize("f", FAMILIES, ids=repr)
    def test_inverse_array_matches_scalar(self, f):
        ss = np.linspace(f.range_start, f.range_start + 10, 20)
        vec = f.inverse_array(ss)
        for s, v in zip(ss, vec):
            assert v == pytest.approx(f.inverse_clamped(s), abs=1e-14)

    def test_sup_inverse_derivative(self):
        assert Linear(4.0).sup_inverse_derivative(10.0) == 0.25
        assert Affine(2.0, 4.0).sup_inverse_derivative(1.0) == 0.0
        assert Affine(2.0, 4.0).sup_inverse_derivative(3.0) == 0.25
        assert PowerLaw(1.0, 2.0).sup_inverse_derivative(5.0) == math.inf
        f = PowerLaw(2.0, 0.5)
        grid = np.linspace(1e-9, 7.0, 4000)
        sup = max(f.inverse_derivative(s) for s in grid)
        assert f.sup_inverse_derivative(7.0) == pytest.approx(sup, rel=1e-3)
        assert f.sup_inverse_derivative(7.0) >= sup

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            Linear(0.0)
        with pytest.raises(ValueError):
            Affine(-1.0, 1.0)
        with pytest.raises(ValueError):
            PowerLaw(1.0, 0.0)


class TestRegion:
    def test_basic_properties(self):
        k = Region([0, 0], [3, 4], (2, 2))
        assert k.diameter() == 5.0
        assert k.grid().shape == (4, 2)
        assert k.contains(np.array([[1, 1]]))
        assert not k.contains(np.array([[5, 1]]))

    def test_grid_resolution(self):
        k = Region([0, 0], [1, 1], 4)
        g = k.grid()
        assert g.shape == (16, 2)
        assert g[0] == pytest.approx([0, 0])
        assert g[-1] == pytest.approx([1, 1])

    def test_rejects_inverted_corners(self):
        with pytest.raises(ValueError):
            Region([1, 0], [0, 1], 4)

    def test_bounding(self):
        pts = np.array([[0.0, 1.0], [2.0, -1.0]])
        k = Region.bounding(pts, margin=0.5, resolution=3)
        assert k.contains(pts)
        assert k.lower == pytest.approx([-0.5, -1.5])
