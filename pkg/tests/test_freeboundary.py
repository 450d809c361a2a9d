import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopflab.cli import one_phase_profile
from hopflab.freeboundary import (FBProblem, FlameProblem, GlueInput, TraceError, cutoff,
                                  fb_lipschitz_check, free_boundary, glue, limit_profile,
                                  positive_part, random_glue_input, truncation)
from hopflab.grid import CartesianGrid2D, GridFunction, RadialGrid
from hopflab.operators import EllipticParams, OperatorSpec

DISK = CartesianGrid2D(1.0, 81)
LAP2 = OperatorSpec.laplacian(EllipticParams(2))


class TestPositivePart:
    def test_half_plane_function(self):
        pp = positive_part(GridFunction.from_callable(DISK, lambda x, y: x))
        # int_{x > 0} x over the unit disk is 2/3 and {x > 0} has area pi/2
        assert pp.norm(1) == pytest.approx(2 / 3, rel=1e-2)
        assert pp.grad_norm(1) == pytest.approx(math.pi / 2, rel=2e-2)
        assert pp.norm(math.inf) == pytest.approx(1.0, abs=DISK.h)

    def test_gradient_vanishes_off_positive_set(self):
        pp = positive_part(GridFunction.from_callable(DISK, lambda x, y: y - 0.2))
        assert np.all(pp.gradient[~pp.positive] == 0)
        assert np.allclose(pp.gradient[pp.positive], [0, 1])

    def test_nonpositive(self):
        g = RadialGrid(0, 1, 21, 2)
        pp = positive_part(GridFunction(g, -g.r))
        assert pp.norm(2) == 0 and not pp.positive.any()

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.01, 100), st.integers(0, 2**32 - 1))
    def test_idempotent_and_homogeneous(self, c, seed):
        g = RadialGrid(0, 1, 51, 3)
        vals = np.random.default_rng(seed).normal(size=g.m)
        u = GridFunction(g, vals)
        plus = positive_part(u).u_plus
        assert np.array_equal(positive_part(plus).u_plus.values, plus.values)
        assert np.allclose(positive_part(u * c).u_plus.values, c * plus.values)


class TestTruncation:
    def test_values(self):
        assert np.array_equal(truncation([-2.0, -0.5, 0.0, 0.5, 2.0], 1.0), [-1.0, 0, 0, 0, 1.0])

    def test_cutoff(self):
        assert np.allclose(cutoff([0, 0.05, 0.075, 0.1, 1.0], 0.1), [0, 0, 0.5, 1, 1])


def half_plane_input(v_zero=True):
    X = DISK.points
    G = X[:, 1] == 0
    A, B = (X[:, 1] > 0), (X[:, 1] < 0)
    u = GridFunction(DISK, X[:, 1])
    v = GridFunction(DISK, np.zeros(DISK.size) if v_zero else X[:, 1] ** 2)
    return GlueInput(u, v, A, B, G)


class TestGlue:
    def test_positive_part_of_coordinate(self):
        res = glue(half_plane_input(), 0.05, 0.1)
        assert res.passed, res.failures
        for key in ("1", "2"):
            assert res.norms[key]["w"] == pytest.approx(res.norms[key]["u_A"], rel=1e-12)
        assert res.collar_max_mismatch == 0

    def test_two_sided(self):
        res = glue(half_plane_input(False), 0.05, 0.1)
        assert res.passed
        assert res.norms["1"]["w"] <= res.norms["1"]["u_A"] + res.norms["1"]["v_B"] + 1e-12

    def test_truncated_field_vanishes_near_interface(self):
        res = glue(half_plane_input(), 0.05, 0.1)
        near = np.abs(DISK.points[:, 1]) <= 0.05
        assert np.all(res.w_eta.values[near] == 0)

    def test_trace_rejected(self):
        inp = half_plane_input()
        with pytest.raises(TraceError):
            GlueInput(inp.u.with_values(inp.u.values + 1), inp.v, inp.A, inp.B, inp.Gamma)

    def test_touching_sets_rejected(self):
        X = DISK.points
        with pytest.raises(ValueError, match="separate"):
            GlueInput(GridFunction(DISK, X[:, 1] * (X[:, 0] != 0.5)), GridFunction(DISK, np.zeros(DISK.size)),
                      X[:, 1] >= 0, (X[:, 1] < 0) & (X[:, 0] != 0.5), (X[:, 1] < 0) & (X[:, 0] == 0.5))

    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            glue(half_plane_input(), 0.0, 0.1)

    @pytest.mark.parametrize("grid", [CartesianGrid2D(1.0, 31), RadialGrid(0, 1, 101, 3)])
    def test_random_inputs(self, grid):
        rng = np.random.default_rng(5)
        for k in range(10):
            inp = random_glue_input(rng, grid, v_zero=k % 2 == 0)
            assert inp.Gamma.any()
            res = glue(inp, 0.05, 0.1)
            assert res.passed, res.failures


class TestFreeBoundary:
    def test_linear_crossing(self):
        g = RadialGrid(0, 1, 11, 2)
        fb = free_boundary(GridFunction(g, g.r - 0.33))
        assert fb.points.shape == (1, 1)
        assert fb.points[0, 0] == pytest.approx(0.33)
        assert fb.quotients[0] == pytest.approx(1.0)

    def test_disk_circle(self):
        u = GridFunction.from_callable(DISK, lambda x, y: x * x + y * y - 0.25)
        fb = free_boundary(u)
        assert np.allclose(np.linalg.norm(fb.points, axis=1), 0.5, atol=DISK.h**2)

    @pytest.mark.parametrize("n, alpha", [(2, 0.0), (3, 1.0)])
    def test_one_phase_profile(self, n, alpha):
        spec = OperatorSpec.pucci_minus(EllipticParams(n, 1, 2, alpha))
        g = RadialGrid(0, 1, 2001, n)
        u = GridFunction(g, one_phase_profile(spec, 1.0, 0.3)(g.r))
        rep = fb_lipschitz_check(FBProblem(spec, 0.0, 1.0), u)
        assert rep.passed
        assert rep.extra["fb_quotient_max"] == pytest.approx(1.0, abs=10 * g.h)
        assert not fb_lipschitz_check(FBProblem(spec, 0.0, 0.9), u).passed

    def test_no_free_boundary(self):
        g = RadialGrid(0, 1, 101, 2)
        rep = fb_lipschitz_check(FBProblem(LAP2, 4.0, 1.0), GridFunction(g, 1 + g.r**2))
        assert rep.passed and rep.notes.startswith("no free boundary")
        assert rep.lhs == pytest.approx(1.0, abs=1e-12)

    def test_empty_positive_set(self):
        g = RadialGrid(0, 1, 11, 2)
        assert fb_lipschitz_check(FBProblem(LAP2), GridFunction(g, np.zeros(11))).passed

    def test_negative_bound_rejected(self):
        g = RadialGrid(0, 1, 11, 2)
        with pytest.raises(ValueError):
            fb_lipschitz_check(FBProblem(LAP2, 0.0, -1.0), GridFunction(g, g.r - 0.5))


class TestLimitProfile:
    def test_laplacian(self):
        prim, g, slope = limit_profile(LAP2, 0.2)
        assert slope == pytest.approx(math.sqrt(2))
        assert g == pytest.approx(math.sqrt(2) * 0.2 * math.log(5))
        assert prim(0.1) == 0 and prim(0.2) == 0
        h = 1e-6
        assert (prim(0.2 + h) - prim(0.2)) / h == pytest.approx(slope, rel=1e-4)

    def test_weighted(self):
        spec = OperatorSpec.laplacian(EllipticParams(2, 1, 1, 1.0))
        _, _, slope = limit_profile(spec, 0.2)
        assert slope == pytest.approx(3 ** (1 / 3))

    def test_rejects_bad_radius(self):
        with pytest.raises(ValueError):
            limit_profile(LAP2, 1.0)


class TestFlameProblem:
    def test_epsilons_sorted_and_bounded(self):
        fp = FlameProblem(LAP2, 0.5, epsilons=(1 / 64, 1 / 8, 1 / 16))
        assert fp.epsilons == (1 / 8, 1 / 16, 1 / 64)
        with pytest.raises(ValueError):
            FlameProblem(LAP2, 0.5, epsilons=(0.25,))
        with pytest.raises(ValueError):
            FlameProblem(LAP2, 0.5, epsilons=())

    def test_initial_matches_profile(self):
        fp = FlameProblem.from_free_boundary_radius(LAP2, 0.2)
        prim, g, _ = limit_profile(LAP2, 0.2)
        r = np.linspace(0, 1, 11)
        assert fp.outer == pytest.approx(g, rel=1e-8)
        assert np.allclose(fp.initial(r), prim(r), rtol=1e-8)
