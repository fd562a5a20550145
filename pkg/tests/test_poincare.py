"""Discrete reduction: interval map, image map, 1-D parameterizations."""

import numpy as np
import pytest

import reset_lab as rl
from reset_lab import DegenerateImageError, DimensionError, NoCrossingError
from reset_lab.poincare import CROSSING_TOL, TAU_PRECISION

from conftest import FORE_BETA, NATURAL_INTERVAL_3, taylor_expm


@pytest.fixture(scope="module")
def pm025(horowitz3):
    return rl.PoincareMap(horowitz3, 0.25)


@pytest.fixture(scope="module")
def pm135(horowitz3):
    return rl.PoincareMap(horowitz3, 1.35)


@pytest.fixture(scope="module")
def pm_fore(fore3):
    return rl.PoincareMap(fore3, 0.7)


class TestIntervalMap:
    def test_interior_crossing_matches_closed_form(self, pm025):
        tau = rl.interval_map(pm025, np.array([0.0, 1.0]))
        assert abs(tau - NATURAL_INTERVAL_3) < 1e-6

    def test_scale_invariance(self, pm025):
        z = np.array([0.3, 0.8])
        assert rl.interval_map(pm025, z) == rl.interval_map(pm025, 100.0 * z)

    def test_literal_floor_return_on_immediate_branch(self, pm135):
        # points already inside the jump condition at the dwell floor return
        # the floor as an exact float, not a bisection approximation
        p1 = np.array([np.cos(0.532232), np.sin(0.532232)])
        p2 = np.array([np.cos(1.424617), np.sin(1.424617)])
        assert rl.interval_map(pm135, p1) == 1.35
        assert rl.interval_map(pm135, p2) == 1.35

    def test_fore_natural_interval(self, pm_fore):
        tau = rl.interval_map(pm_fore, np.array([1.0, 0.0]))
        assert abs(tau - np.pi / FORE_BETA) < 1e-9

    def test_crossing_located_to_tolerance(self, pm025, horowitz3):
        z = np.array([0.0, 1.0])
        tau = rl.interval_map(pm025, z)
        c = horowitz3.C[0]
        # h is nonnegative at the located point and negative shortly before
        h_at = c @ taylor_expm(horowitz3.A, tau) @ horowitz3.J @ z
        h_before = c @ taylor_expm(horowitz3.A, tau - 1e-6) @ horowitz3.J @ z
        assert h_at >= -CROSSING_TOL
        assert h_before < 0.0

    def test_rejects_zero_vector(self, pm025):
        with pytest.raises(DimensionError):
            rl.interval_map(pm025, np.zeros(2))

    def test_interval_and_image_consistent(self, pm025):
        z = np.array([0.4, -0.9])
        tau, g = rl.interval_and_image(pm025, z)
        assert tau == rl.interval_map(pm025, z)
        assert np.allclose(g, rl.g_map(pm025, z))


class TestImageMap:
    def test_image_matches_series_oracle(self, pm025, horowitz3):
        z = np.array([0.0, 1.0])
        tau = rl.interval_map(pm025, z)
        g = rl.g_map(pm025, z)
        J = horowitz3.J
        oracle = -J.T @ taylor_expm(horowitz3.A, tau) @ J @ z
        assert np.allclose(g, oracle, atol=1e-9)
        assert abs(g[1] - 0.189117340) < 1e-6

    def test_positive_homogeneity(self, pm025):
        z = np.array([-0.7, 0.2])
        g1 = rl.g_map(pm025, z)
        g2 = rl.g_map(pm025, 3.5 * z)
        assert np.allclose(3.5 * g1, g2, atol=1e-9)

    def test_interior_image_lands_on_reset_surface(self, pm025):
        # interior crossings land exactly on the switching plane, so the
        # image direction has zero first coordinate
        z = np.array([0.0, 1.0])
        g = rl.g_map(pm025, z)
        assert abs(g[0]) < 1e-8


class TestBatchedCrossings:
    def test_batch_agrees_with_scalar_route(self, pm025, horowitz3):
        rng = np.random.default_rng(3)
        Z = rng.standard_normal((2, 40))
        Z /= np.linalg.norm(Z, axis=0)
        taus, W = pm025.crossings(Z)
        c = horowitz3.C[0]
        from reset_lab.numerics import expm, first_crossing

        for j in range(Z.shape[1]):
            h = lambda t: float(c @ expm(horowitz3.A, t) @ horowitz3.J @ Z[:, j])
            ref = first_crossing(h, 0.25, pm025.tau_cap)
            assert ref is not None
            assert abs(taus[j] - ref) < 5e-9
            assert np.allclose(W[:, j], expm(horowitz3.A, taus[j]) @ horowitz3.J @ Z[:, j], atol=1e-9)

    def test_map_many_matches_g_map(self, pm025):
        rng = np.random.default_rng(4)
        Z = rng.standard_normal((2, 25))
        taus, G = pm025.map_many(Z)
        for j in range(25):
            assert abs(taus[j] - rl.interval_map(pm025, Z[:, j])) < 1e-12
            assert np.allclose(G[:, j], rl.g_map(pm025, Z[:, j]), atol=1e-12)

    def test_no_crossing_raises_with_hurwitz_report(self):
        A = np.diag([-1.0, -2.0, -3.0])
        sysd = rl.closed_loop_from_matrices(A, np.diag([1.0, 1.0, 0.0]), np.array([[-1.0, 0.0, 0.0]]), 1)
        pm = rl.PoincareMap(sysd, 0.5)
        with pytest.raises(NoCrossingError) as exc:
            rl.interval_map(pm, np.array([1.0, 0.5]))
        assert exc.value.hurwitz is True
        assert "Hurwitz" in str(exc.value)

    def test_shape_validation(self, pm025):
        with pytest.raises(DimensionError):
            pm025.crossings(np.zeros((3, 4)))  # wrong reduced dimension


class TestSearchCap:
    def test_default_cap_uses_dominant_oscillation(self, horowitz3):
        cap = rl.default_search_cap(horowitz3.A, 0.25)
        # dominant complex pair has |Im| = sqrt(19)/2
        expected = 10.0 * (0.25 + 2.0 * np.pi / (np.sqrt(19.0) / 2.0))
        assert abs(cap - expected) < 1e-9

    def test_default_cap_without_oscillation(self):
        cap = rl.default_search_cap(np.diag([-1.0, -2.0]), 0.3)
        assert cap == pytest.approx(30.0)


class TestCircleParam:
    def test_round_trip(self):
        p = rl.CircleParam()
        for th in np.linspace(-np.pi + 1e-6, np.pi, 17):
            v = p.to_vector(th)
            assert np.allclose(v, [np.cos(th), np.sin(th)])
            assert abs(p.from_vector(v) - th) < 1e-12

    def test_wrap_into_half_open_interval(self):
        p = rl.CircleParam()
        assert p.wrap(np.pi + 0.1) == pytest.approx(-np.pi + 0.1)
        assert p.wrap(-np.pi - 0.1) == pytest.approx(np.pi - 0.1)
        assert p.wrap(0.0) == 0.0

    def test_distance_is_circular(self):
        p = rl.CircleParam()
        assert p.distance(np.pi - 0.01, -np.pi + 0.01) == pytest.approx(0.02)

    def test_grid_spans_domain(self):
        p = rl.CircleParam()
        g = p.grid(11)
        assert g[0] == -np.pi and g[-1] == np.pi and len(g) == 11


class TestSegmentParam:
    def test_round_trip(self):
        p = rl.SegmentParam(a=-3.0, b=4.0, dim=3)
        for u in np.linspace(-3, 4, 9):
            v = p.to_vector(u)
            assert abs(np.linalg.norm(v) - 1.0) < 1e-12
            assert abs(v[0] / v[1] - u) < 1e-9
            assert abs(p.from_vector(v) - u) < 1e-9

    def test_rejects_off_segment_vectors(self):
        p = rl.SegmentParam(a=-3.0, b=4.0, dim=3)
        with pytest.raises(DegenerateImageError):
            p.from_vector(np.array([0.0, 1.0, 0.5]))  # third coordinate too large
        with pytest.raises(DegenerateImageError):
            p.from_vector(np.array([0.0, -1.0, 0.0]))  # wrong orientation

    def test_clamps_within_slack(self):
        p = rl.SegmentParam(a=-3.0, b=4.0, dim=3)
        v = p.to_vector(4.0)
        u = p.from_vector(v * (1.0 + 1e-12))
        assert u <= 4.0

    def test_rejects_far_outside_domain(self):
        p = rl.SegmentParam(a=-3.0, b=4.0, dim=3)
        v = np.array([5.0, 1.0, 0.0])
        v /= np.linalg.norm(v)
        with pytest.raises(DegenerateImageError):
            p.from_vector(v)


class TestOneDimensionalMaps:
    def test_angle_map_fixed_point(self, pm025):
        th = rl.angle_map_1d(pm025, rl.CircleParam(), np.pi / 2)
        assert abs(th - np.pi / 2) < 1e-6

    def test_map_graph_layout(self, pm135):
        us, images, taus = rl.map_graph(pm135, rl.CircleParam(), 101)
        assert us.shape == images.shape == taus.shape == (101,)
        assert np.all(taus >= 1.35 - 1e-12)

    def test_orbit_iterates(self, horowitz3):
        pm2 = rl.PoincareMap(horowitz3, 2.0)
        pts = rl.orbit(pm2, rl.CircleParam(), -1.549395, 3)
        assert len(pts) == 4
        assert abs(pts[1] - np.pi / 2) < 1e-4
        assert abs(pts[2] - (-0.216175)) < 1e-4
        assert abs(pts[3] - pts[0]) < 1e-4

    def test_segment_map_stays_in_segment(self, chaos4):
        pm = rl.PoincareMap(chaos4, 0.1)
        seg = rl.SegmentParam(a=-3.0, b=4.0, dim=3)
        us = np.linspace(-3.0, 4.0, 120)
        images, taus = rl.map_1d_many(pm, seg, us)
        assert np.all(images >= -3.0) and np.all(images <= 4.0)
        assert np.all(taus >= 0.1 - 1e-12)

    def test_chaos_segment_invariance_third_coordinate(self, chaos4):
        pm = rl.PoincareMap(chaos4, 0.1)
        seg = rl.SegmentParam(a=-3.0, b=4.0, dim=3)
        us = np.linspace(-3.0, 4.0, 60)
        Z = np.column_stack([seg.to_vector(u) for u in us])
        _, G = pm.map_many(Z)
        rel = np.abs(G[2, :]) / np.linalg.norm(G, axis=0)
        assert rel.max() < 1e-8
