import math

import numpy as np
import pytest

from wph.geometry import PointCloud, PowerLaw, Region, linear_radii
from wph.metrics import (
    Relation,
    bottleneck_distance,
    entry_function,
    entry_function_grid,
    entry_sup_distance,
    stability_bound,
    verify_diagram_stability,
)
from wph.persistence import PersistenceDiagram
from _oracles import exhaustive_bottleneck


def jittered_pair(rng, n, jitter=0.1, w_jitter=0.1):
    pts = rng.uniform(0, 1, (n, 2))
    w = rng.uniform(0.5, 2.0, n)
    direction = rng.normal(size=(n, 2))
    direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-12)
    pts_y = pts + direction * (jitter * np.sqrt(rng.uniform(0, 1, n)))[:, None]
    w_y = w * (1 + rng.uniform(-w_jitter, w_jitter, n))
    return PointCloud(pts, w), PointCloud(pts_y, w_y)


class TestRelation:
    def test_identity_and_validation(self):
        rel = Relation.identity(3)
        rel.validate(3, 3)
        with pytest.raises(ValueError):
            rel.validate(4, 3)

    def test_mutual_nearest_covers_both_sides(self):
        rng = np.random.default_rng(0)
        x = PointCloud(rng.uniform(0, 1, (5, 2)), np.ones(5))
        y = PointCloud(rng.uniform(0, 1, (3, 2)), np.ones(3))
        rel = Relation.mutual_nearest(x, y)
        rel.validate(5, 3)

    def test_norm(self):
        x = PointCloud([[0, 0], [1, 0]], [1, 1])
        y = PointCloud([[0, 1], [1, 2]], [1, 1])
        assert Relation.identity(2).norm(x, y) == pytest.approx(2.0)


class TestEntryFunction:
    def test_single_point_linear(self):
        cloud = PointCloud([[0, 0]], [1])
        assert entry_function(cloud, linear_radii(cloud), [3, 4]) == pytest.approx(5.0)

    def test_on_a_data_point(self):
        cloud = PointCloud([[2, 2], [5, 5]], [1, 3])
        assert entry_function(cloud, linear_radii(cloud), [5, 5]) == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_sublevel_membership(self, seed):
        # f(y) <= t exactly when y is inside some ball of radius w*t
        rng = np.random.default_rng(seed)
        cloud = PointCloud(rng.uniform(0, 1, (6, 2)), rng.uniform(0.3, 2.0, 6))
        radii = linear_radii(cloud)
        for _ in range(100):
            y = rng.uniform(-0.5, 1.5, 2)
            t = entry_function(cloud, radii, y)
            d = np.linalg.norm(cloud.points - y, axis=1)
            assert np.any(d <= cloud.weights * (t + 1e-9))
            assert not np.any(d <= cloud.weights * (t - 1e-9))

    def test_lipschitz_in_query_point(self):
        rng = np.random.default_rng(3)
        cloud = PointCloud(rng.uniform(0, 1, (7, 2)), rng.uniform(0.4, 2.5, 7))
        radii = linear_radii(cloud)
        lip = max(f.sup_inverse_derivative(10.0) for f in radii)
        for _ in range(200):
            a = rng.uniform(-1, 2, 2)
            b = rng.uniform(-1, 2, 2)
            fa = entry_function(cloud, radii, a)
            fb = entry_function(cloud, radii, b)
            assert abs(fa - fb) <= lip * np.linalg.norm(a - b) + 1e-12


class TestEntrySupDistance:
    def test_identical_inputs_give_zero(self):
        rng = np.random.default_rng(1)
        cloud = PointCloud(rng.uniform(0, 1, (5, 2)), rng.uniform(0.5, 2, 5))
        region = Region([-0.5, -0.5], [1.5, 1.5], 16)
        r = linear_radii(cloud)
        assert entry_sup_distance(cloud, r, cloud, r, region) == 0.0

    def test_translated_singleton_on_a_line(self):
        eps = 0.125
        x = PointCloud([[0.0]], [1.0])
        y = PointCloud([[eps]], [1.0])
        region = Region([-1.0], [1.0], 33)
        sup = entry_sup_distance(x, linear_radii(x), y, linear_radii(y), region)
        assert sup == pytest.approx(eps, abs=1e-12)

    def test_grid_too_coarse_rejected(self):
        x = PointCloud([[0.0, 0.0]], [1.0])
        region = Region([-1, -1], [1, 1], (1, 8))
        with pytest.raises(ValueError, match="grid"):
            entry_sup_distance(x, linear_radii(x), x, linear_radii(x), region)

    @pytest.mark.parametrize("seed", range(10))
    def test_never_exceeds_stability_bound(self, seed):
        rng = np.random.default_rng(seed)
        x, y = jittered_pair(rng, int(rng.integers(3, 9)))
        region = Region([-0.2, -0.2], [1.2, 1.2], 32)
        r, s = linear_radii(x), linear_radii(y)
        eta = Relation.identity(len(x))
        bound = stability_bound(x, r, y, s, eta, region)
        sup = entry_sup_distance(x, r, y, s, region)
        assert sup <= bound.total + 1e-9


class TestStabilityBound:
    def test_identical_inputs_zero(self):
        rng = np.random.default_rng(2)
        cloud = PointCloud(rng.uniform(0, 1, (4, 2)), rng.uniform(0.5, 2, 4))
        region = Region.bounding(cloud.points, margin=0.1, resolution=2)
        r = linear_radii(cloud)
        b = stability_bound(cloud, r, cloud, r, Relation.identity(4), region)
        assert b.total == 0.0 and b.d_term == 0.0 and b.eta_norm == 0.0

    def test_linear_closed_form_matches_grid(self):
        # closed-form D for linear growth equals the 1-d grid evaluation
        rng = np.random.default_rng(4)
        for _ in range(20):
            x, y = jittered_pair(rng, 5)
            region = Region([-0.2, -0.2], [1.2, 1.2], 8)
            diam = region.diameter()
            r, s = linear_radii(x), linear_radii(y)
            eta = Relation.identity(5)
            b = stability_bound(x, r, y, s, eta, region)
            ss = np.linspace(0, diam, 1024)
            grid_d = max(
                float(np.max(np.abs(r[i].inverse_array(ss) - s[j].inverse_array(ss))))
                for i, j in eta.pairs
            )
            assert b.d_term == pytest.approx(grid_d, abs=1e-9)

    def test_point_perturbation_only_kills_d_term(self):
        # same growth rates on both sides: the bound is ||eta|| * max inverse rate
        rng = np.random.default_rng(5)
        pts = rng.uniform(0, 1, (6, 2))
        w = rng.uniform(0.5, 2.0, 6)
        shift = rng.normal(size=(6, 2))
        shift = 0.05 * shift / np.linalg.norm(shift, axis=1, keepdims=True)
        x = PointCloud(pts, w)
        y = PointCloud(pts + shift, w)
        region = Region([-0.2, -0.2], [1.2, 1.2], 4)
        b = stability_bound(x, linear_radii(x), y, linear_radii(y), Relation.identity(6), region)
        assert b.d_term == 0.0
        assert b.total == pytest.approx(b.eta_norm * max(1.0 / wi for wi in w))
        assert b.eta_norm == pytest.approx(0.05)

    def test_weight_perturbation_only_kills_eta_term(self):
        rng = np.random.default_rng(6)
        pts = rng.uniform(0, 1, (5, 2))
        w = rng.uniform(0.5, 2.0, 5)
        w2 = w * (1 + rng.uniform(-0.1, 0.1, 5))
        x = PointCloud(pts, w)
        y = PointCloud(pts, w2)
        region = Region([-0.2, -0.2], [1.2, 1.2], 4)
        b = stability_bound(x, linear_radii(x), y, linear_radii(y), Relation.identity(5), region)
        assert b.eta_norm == 0.0
        diam = region.diameter()
        expected = max(diam * abs(1 / a - 1 / c) for a, c in zip(w, w2))
        assert b.total == pytest.approx(expected)
        assert b.total == pytest.approx(b.d_term)

    def test_power_law_grid_path(self):
        x = PointCloud([[0, 0]], [1.0])
        y = PointCloud([[0, 0]], [1.0])
        r = (PowerLaw(1.0, 2.0),)
        s = (PowerLaw(1.2, 2.0),)
        region = Region([-1, -1], [1, 1], 4)
        b = stability_bound(x, r, y, s, Relation.identity(1), region)
        diam = region.diameter()
        expected = abs(math.sqrt(diam) - math.sqrt(diam / 1.2))
        assert b.d_term == pytest.approx(expected, rel=1e-3)

    def test_region_must_contain_clouds(self):
        x = PointCloud([[0, 0], [5, 5]], [1, 1])
        region = Region([-1, -1], [1, 1], 4)
        with pytest.raises(ValueError, match="contain"):
            stability_bound(x, linear_radii(x), x, linear_radii(x), Relation.identity(2), region)


def dgm1(points):
    return PersistenceDiagram.from_points([(1, b, d) for b, d in points])


class TestBottleneckDistance:
    def test_identical_diagrams(self):
        d = dgm1([(0.0, 2.0), (1.0, 3.0)])
        assert bottleneck_distance(d, d, 1) == 0.0

    def test_single_point_to_empty(self):
        assert bottleneck_distance(dgm1([(0.0, 2.0)]), dgm1([]), 1) == pytest.approx(1.0)

    def test_direct_match_beats_diagonal(self):
        a = dgm1([(0.0, 4.0)])
        b = dgm1([(1.0, 5.0)])
        assert bottleneck_distance(a, b, 1) == pytest.approx(1.0)

    def test_diagonal_touching_point_is_free(self):
        a = dgm1([(0.0, 3.0)])
        b = dgm1([(0.0, 3.0), (2.0, 2.0)])
        assert bottleneck_distance(a, b, 1) == 0.0

    def test_infinite_count_mismatch(self):
        a = PersistenceDiagram.from_points([(0, 0.0, math.inf)])
        b = PersistenceDiagram.from_points([(0, 0.0, 1.0)])
        assert bottleneck_distance(a, b, 0) == math.inf

    def test_infinite_matched_by_birth(self):
        a = PersistenceDiagram.from_points([(0, 0.0, math.inf), (0, 3.0, math.inf)])
        b = PersistenceDiagram.from_points([(0, 0.5, math.inf), (0, 2.0, math.inf)])
        assert bottleneck_distance(a, b, 0) == pytest.approx(1.0)

    def test_dimensions_are_separate(self):
        a = PersistenceDiagram.from_points([(0, 0.0, 5.0)])
        b = PersistenceDiagram.from_points([(1, 0.0, 5.0)])
        assert bottleneck_distance(a, b, 0) == pytest.approx(2.5)
        assert bottleneck_distance(a, b, 1) == pytest.approx(2.5)

    @pytest.mark.parametrize("seed", range(40))
    def test_matches_exhaustive_oracle(self, seed):
        rng = np.random.default_rng(seed)
        def rand_bars():
            out = []
            for _ in range(int(rng.integers(0, 7))):
                b = float(rng.uniform(0, 2))
                out.append((b, b + float(rng.uniform(0, 2))))
            return out
        bars_a, bars_b = rand_bars(), rand_bars()
        got = bottleneck_distance(dgm1(bars_a), dgm1(bars_b), 1)
        assert got == pytest.approx(exhaustive_bottleneck(bars_a, bars_b), abs=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_pseudometric_properties(self, seed):
        rng = np.random.default_rng(seed)
        def rand_dgm():
            return dgm1(
                [
                    (b, b + float(rng.uniform(0, 2)))
                    for b in rng.uniform(0, 2, int(rng.integers(1, 5)))
                ]
            )
        a, b, c = rand_dgm(), rand_dgm(), rand_dgm()
        dab = bottleneck_distance(a, b, 1)
        dba = bottleneck_distance(b, a, 1)
        assert dab == dba
        dac = bottleneck_distance(a, c, 1)
        dcb = bottleneck_distance(c, b, 1)
        assert dab <= dac + dcb + 1e-12


class TestVerifyDiagramStability:
    def test_identical_inputs(self):
        rng = np.random.default_rng(1)
        cloud = PointCloud(rng.uniform(0, 1, (5, 2)), rng.uniform(0.5, 2, 5))
        r = linear_radii(cloud)
        report = verify_diagram_stability(cloud, r, cloud, r, max_dim=1)
        assert report.holds
        for _, dist, ok in report.distances:
            assert dist == 0.0 and ok

    @pytest.mark.parametrize("seed", range(10))
    def test_random_perturbations_hold(self, seed):
        rng = np.random.default_rng(seed)
        x, y = jittered_pair(rng, int(rng.integers(3, 9)))
        report = verify_diagram_stability(
            x, linear_radii(x), y, linear_radii(y), max_dim=1
        )
        assert report.holds, report.summary()

    @pytest.mark.parametrize("seed", range(5))
    def test_pure_point_jitter_specialization(self, seed):
        # same rates both sides: D = 0 and the bound reduces to the point term
        rng = np.random.default_rng(200 + seed)
        pts = rng.uniform(0, 1, (6, 2))
        w = rng.uniform(0.5, 2.0, 6)
        shift = rng.normal(size=(6, 2))
        shift = 0.05 * shift / np.linalg.norm(shift, axis=1, keepdims=True)
        x, y = PointCloud(pts, w), PointCloud(pts + shift, w)
        report = verify_diagram_stability(x, linear_radii(x), y, linear_radii(y), max_dim=1)
        assert report.bound.d_term == 0.0
        assert report.holds, report.summary()

    def test_rejects_nonlinear_growth(self):
        cloud = PointCloud([[0, 0], [1, 0]], [1, 1])
        with pytest.raises(ValueError, match="linear"):
            verify_diagram_stability(
                cloud, (PowerLaw(1, 2), PowerLaw(1, 2)), cloud, (PowerLaw(1, 2), PowerLaw(1, 2))
            )
