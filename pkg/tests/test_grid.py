import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopflab.grid import (Annulus, Ball, CartesianGrid2D, GridFunction, RadialGrid, ball_volume,
                          discrete_gradient, discrete_hessian, dist_to_boundary, inf_sup, lp_norm)


class TestConstruction:
    def test_radial_spacing(self):
        g = RadialGrid(0.0, 1.0, 11, 3)
        assert g.h == pytest.approx(0.1)
        assert g.is_ball

    def test_radial_rejects_bad_input(self):
        with pytest.raises(ValueError):
            RadialGrid(1.0, 0.5, 11)
        with pytest.raises(ValueError):
            RadialGrid(0.0, 1.0, 2)

    def test_disk_needs_odd_m(self):
        with pytest.raises(ValueError):
            CartesianGrid2D(1.0, 10)
        g = CartesianGrid2D(1.0, 11)
        assert np.any(np.all(g.points == 0, axis=1))

    def test_disk_boundary_band(self):
        g = CartesianGrid2D(1.0, 21)
        assert np.all(g.radii[g.boundary] > 1 - g.h)
        assert np.all(g.radii[g.interior] <= 1 - g.h + 1e-12)

    def test_grid_function_is_immutable_and_finite(self):
        g = RadialGrid(0, 1, 5)
        u = GridFunction(g, np.ones(5))
        with pytest.raises(ValueError):
            u.values[0] = 2.0
        with pytest.raises(ValueError):
            GridFunction(g, [1, 2, np.nan, 4, 5])
        with pytest.raises(ValueError):
            GridFunction(g, np.ones(4))

    def test_csv_columns(self):
        g = CartesianGrid2D(1.0, 5)
        text = GridFunction(g, np.arange(g.size, dtype=float)).to_csv()
        lines = text.split("\n")
        assert lines[0] == "x,y,value"
        assert len(lines) == g.size + 2 and lines[-1] == ""
        assert "\r" not in text


class TestNorms:
    @pytest.mark.parametrize("eps", [0.25, 0.5, 1.0])
    def test_constant_on_half_ball_radial(self, eps):
        g = RadialGrid(0, 1, 101, 2)
        u = GridFunction(g, np.ones(g.m))
        assert lp_norm(u, eps, Ball(0.5)) == pytest.approx((math.pi / 4) ** (1 / eps), rel=1e-12)

    def test_constant_on_half_ball_disk(self):
        g = CartesianGrid2D(1.0, 257)
        u = GridFunction(g, np.ones(g.size))
        assert lp_norm(u, 0.5, Ball(0.5)) == pytest.approx((math.pi / 4) ** 2, rel=1e-6)

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_ball_volume_radial(self, n):
        g = RadialGrid(0, 1, 513, n)
        u = GridFunction(g, np.ones(g.m))
        for r in (0.3, 0.5, 1.0):
            assert lp_norm(u, 1, Ball(r)) == pytest.approx(ball_volume(n, r), rel=1e-6)

    def test_ball_volume_disk(self):
        g = CartesianGrid2D(1.0, 257)
        u = GridFunction(g, np.ones(g.size))
        for r in (0.3, 0.5, 1.0):
            assert lp_norm(u, 1, Ball(r)) == pytest.approx(math.pi * r * r, rel=1e-6)

    def test_annulus_area(self):
        g = RadialGrid(0, 1, 201, 2)
        u = GridFunction(g, np.ones(g.m))
        assert lp_norm(u, 1, Annulus(0.5, 1.0)) == pytest.approx(0.75 * math.pi, rel=1e-12)

    def test_zero_and_sup(self):
        g = RadialGrid(0, 1, 101, 3)
        assert lp_norm(GridFunction(g, np.zeros(g.m)), 0.5) == 0
        d = dist_to_boundary(g)
        assert lp_norm(d, math.inf) == 1.0

    def test_second_order_quadrature(self):
        errs = []
        for m in (33, 65, 129):
            g = RadialGrid(0, 1, m, 2)
            u = GridFunction(g, np.cos(g.r))
            exact = 2 * math.pi * (math.cos(1) + math.sin(1) - 1)
            errs.append(abs(lp_norm(u, 1) - exact))
        assert np.log2(errs[0] / errs[1]) > 1.9 and np.log2(errs[1] / errs[2]) > 1.9

    @settings(max_examples=30, deadline=None)
    @given(st.one_of(st.just(0.0), st.floats(1e-6, 50), st.floats(-50, -1e-6)), st.sampled_from([0.25, 0.5, 1.0, 2.0, math.inf]))
    def test_positive_homogeneity(self, c, p):
        g = RadialGrid(0, 1, 41, 2)
        u = GridFunction(g, np.sin(3 * g.r) + 0.5)
        assert lp_norm(u * c, p) == pytest.approx(abs(c) * lp_norm(u, p), rel=1e-10, abs=1e-300)

    def test_empty_region_rejected(self):
        g = RadialGrid(0.5, 1, 11, 2)
        with pytest.raises(ValueError):
            lp_norm(GridFunction(g, np.ones(11)), 1, Ball(0.2))


class TestInfSup:
    def test_constant(self):
        g = CartesianGrid2D(1, 11)
        assert inf_sup(GridFunction(g, np.full(g.size, 3.0))) == (3.0, 3.0)

    def test_radius(self):
        g = RadialGrid(0, 1, 101, 2)
        assert inf_sup(GridFunction(g, g.r)) == (0.0, 1.0)

    def test_cone_on_half_ball(self):
        g = CartesianGrid2D(1, 41)
        lo, hi = inf_sup(GridFunction.from_callable(g, lambda x, y: 1 - np.hypot(x, y)), Ball(0.5))
        assert hi == 1.0
        assert abs(lo - 0.5) <= g.h


class TestDerivatives:
    def test_affine_disk(self):
        g = CartesianGrid2D(1, 21)
        u = GridFunction.from_callable(g, lambda x, y: 1 + 2 * x - 3 * y)
        assert np.allclose(discrete_gradient(u), [2, -3], atol=1e-10)
        assert np.allclose(discrete_hessian(u), 0, atol=1e-9)

    def test_quadratic_disk(self):
        g = CartesianGrid2D(1, 21)
        u = GridFunction.from_callable(g, lambda x, y: x * x + y * y)
        assert np.allclose(discrete_gradient(u), 2 * g.points, atol=1e-10)
        assert np.allclose(discrete_hessian(u), 2 * np.eye(2), atol=1e-9)

    def test_mixed_derivative(self):
        g = CartesianGrid2D(1, 21)
        H = discrete_hessian(GridFunction.from_callable(g, lambda x, y: x * y))
        assert np.allclose(H[:, 0, 1], 1, atol=1e-9)
        assert np.allclose(H[:, 1, 0], 1, atol=1e-9)

    def test_quadratic_radial(self):
        g = RadialGrid(0, 1, 21, 3)
        u = GridFunction(g, g.r**2)
        assert np.allclose(discrete_gradient(u), 2 * g.r, atol=1e-10)
        assert np.allclose(discrete_hessian(u), 2, atol=1e-9)

    def test_second_order_radial(self):
        errs = []
        for m in (41, 81, 161):
            g = RadialGrid(0, 1, m, 2)
            u = GridFunction(g, np.exp(-g.r**2))
            du = -2 * g.r * np.exp(-g.r**2)
            errs.append(np.abs(discrete_gradient(u) - du).max())
        assert np.log2(errs[0] / errs[1]) >= 1.9 and np.log2(errs[1] / errs[2]) >= 1.9

    def test_second_order_disk_interior(self):
        errs = []
        for m in (21, 41, 81):
            g = CartesianGrid2D(1, m)
            u = GridFunction.from_callable(g, lambda x, y: np.sin(x) * np.cos(2 * y))
            H = discrete_hessian(u)
            exact = -5 * np.sin(g.points[:, 0]) * np.cos(2 * g.points[:, 1])
            inner = g.radii <= 0.5
            errs.append(np.abs(H[inner, 0, 0] + H[inner, 1, 1] - exact[inner]).max())
        assert np.log2(errs[0] / errs[1]) >= 1.9 and np.log2(errs[1] / errs[2]) >= 1.9


class TestDistance:
    def test_ball(self):
        g = RadialGrid(0, 1, 11, 2)
        d = dist_to_boundary(g, Ball(1.0))
        assert d.values[0] == 1.0 and d.values[-1] == 0.0

    def test_node_set_origin(self):
        g = CartesianGrid2D(1, 11)
        d = dist_to_boundary(g, np.zeros((1, 2)))
        assert np.allclose(d.values, g.radii)
