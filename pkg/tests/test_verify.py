import csv
import io
import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from hopflab.barrier import BarrierSpec, barrier_constants, barrier_eval
from hopflab.grid import CartesianGrid2D, GridFunction, RadialGrid
from hopflab.operators import EllipticParams
from hopflab.verify import (LEDGER_COLUMNS, SweepConfig, append_ledger, comparison_check,
                            counterexample_audit, harnack_ratio, harnack_sweep, hopf_consistency,
                            hopf_growth_check, hopf_sweep, large_gradient_reduction_check, ledger_csv,
                            normal_derivative, weak_harnack_ratio, weak_harnack_sweep)

P2 = EllipticParams(2, 1, 2, 0)


def radial(values_fn, m=401, n=2):
    g = RadialGrid(0, 1, m, n)
    return GridFunction(g, values_fn(g.r))


def cone_norm(eps, n=2):
    """||1 - |x| ||_{L^eps(B_1/2)} in the plane, by adaptive quadrature."""
    val, _ = quad(lambda r: (1 - r) ** eps * 2 * math.pi * r, 0, 0.5, epsabs=1e-14)
    return val ** (1 / eps)


class TestHarnack:
    def test_constant(self):
        u = radial(np.ones_like)
        rep = harnack_ratio(u, 0.0, P2)
        assert rep.measured_constant == pytest.approx(1.0) and rep.passed

    def test_rhs_term_uses_homogeneous_power(self):
        params = EllipticParams(2, 1, 2, 1.0)
        u = radial(lambda r: 1 + 0 * r)
        rep = harnack_ratio(u, 4.0, params)
        assert rep.rhs == pytest.approx(1 + 2.0)

    def test_zero_is_vacuous(self):
        rep = harnack_ratio(radial(np.zeros_like), 0.0, P2)
        assert rep.measured_constant == 0.0 and rep.passed

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            harnack_ratio(radial(lambda r: r - 0.5), 0.0, P2)

    def test_weak_harnack_constant(self):
        u = radial(np.ones_like)
        for eps in (0.25, 0.5, 1.0):
            rep = weak_harnack_ratio(u, 0.0, P2, eps)
            assert rep.measured_constant == pytest.approx((math.pi / 4) ** (2 / eps), rel=1e-12)

    def test_weak_harnack_zero(self):
        rep = weak_harnack_ratio(radial(np.zeros_like), 0.0, P2)
        assert rep.measured_constant == 0.0 and rep.passed and rep.notes

    def test_disk_grid(self):
        g = CartesianGrid2D(1.0, 41)
        u = GridFunction.from_callable(g, lambda x, y: 2 - x * x - y * y)
        rep = harnack_ratio(u, 0.0, P2)
        assert rep.lhs == 2.0
        assert rep.rhs == pytest.approx(1.75, abs=g.h)


class TestHopfGrowth:
    @pytest.mark.parametrize("eps", [0.25, 0.5, 1.0])
    def test_cone(self, eps):
        u = radial(lambda r: 1 - r, m=2001)
        rep = hopf_growth_check(u, 0.0, P2, epsilon_exp=eps)
        assert rep.passed
        assert rep.extra["A1"] * cone_norm(eps) == pytest.approx(1.0, abs=1e-4)

    def test_barrier_growth(self):
        spec = BarrierSpec(1, 1, EllipticParams(2, 1, 1, 0))
        A1 = barrier_constants(spec).A1
        g = RadialGrid(0.5, 1, 501, 2)
        u = GridFunction(g, barrier_eval(spec, np.column_stack([g.r, 0 * g.r])))
        d = 1 - g.r[:-1]
        # the barrier lies above A1 * dist and is tangent to it on the outer sphere
        assert np.all(u.values[:-1] / d >= A1 - 1e-12)
        assert (u.values[-2] / d[-1]) == pytest.approx(A1, rel=1e-2)

    def test_zero_norm_vacuous(self):
        rep = hopf_growth_check(radial(np.zeros_like), 0.0, P2)
        assert rep.passed and rep.notes.startswith("vacuous")

    def test_sup_variant(self):
        u = radial(lambda r: 1 - r)
        rep = hopf_growth_check(u, 0.0, P2, norm="sup")
        assert rep.extra["A1"] == pytest.approx(1.0)
        with pytest.raises(ValueError):
            hopf_growth_check(u, 0.0, P2, norm="l2")

    def test_positive_source_lowers_requirement(self):
        u = radial(lambda r: (1 - r) ** 2)
        plain = hopf_growth_check(u, 0.0, P2)
        helped = hopf_growth_check(u, 1.0, P2, A2=1.0)
        assert plain.extra["A1"] < helped.extra["A1"]


class TestNormalDerivative:
    def test_cone(self):
        nd = normal_derivative(lambda p: 1 - np.linalg.norm(p, axis=1), [1.0, 0.0])
        assert nd.value == pytest.approx(1.0, abs=1e-12)

    def test_square_has_zero_derivative(self):
        nd = normal_derivative(lambda p: (1 - np.linalg.norm(p, axis=1)) ** 2, [0.0, 1.0])
        assert abs(nd.value) < 1e-12
        assert np.allclose(nd.quotients, nd.offsets)

    def test_barrier_between_bounds(self):
        spec = BarrierSpec(1, 1, EllipticParams(2, 1, 1, 0))
        c = barrier_constants(spec)
        nd = normal_derivative(lambda p: barrier_eval(spec, p), [1.0, 0.0], 2.0 ** -np.arange(8, 15))
        assert c.A3 - 1e-6 <= nd.value <= c.A4
        assert nd.value == pytest.approx(3 / 7, rel=1e-6)

    def test_grid_function(self):
        u = radial(lambda r: 1 - r * r, m=801)
        assert normal_derivative(u, [1.0]).value == pytest.approx(2.0, abs=1e-3)

    def test_rejections(self):
        f = lambda p: 1 - np.linalg.norm(p, axis=1)  # noqa: E731
        with pytest.raises(ValueError):
            normal_derivative(f, [0.5, 0.0])
        with pytest.raises(ValueError):
            normal_derivative(lambda p: 2 - np.linalg.norm(p, axis=1), [1.0, 0.0])
        with pytest.raises(ValueError):
            normal_derivative(f, [1.0, 0.0], offsets=[0.01, 0.1])

    def test_consistency(self):
        u = radial(lambda r: 1 - r, m=2001)
        growth = hopf_growth_check(u, 0.0, P2)
        ok = hopf_consistency(growth, 1.0)
        bad = hopf_consistency(growth, 0.5)
        assert ok.passed and not bad.passed


class TestLargeGradient:
    @pytest.mark.parametrize("n", [2, 3])
    def test_convex_quadratic(self, n):
        params = EllipticParams(n, 1, 2, 0)
        u = radial(lambda r: r * r, n=n)
        # M^-(2I) = 2 n lambda
        assert large_gradient_reduction_check(u, 2.0 * n + 0.01, params, 0.5).passed
        assert not large_gradient_reduction_check(u, 2.0 * n - 0.01, params, 0.5).passed

    def test_weighted_threshold(self):
        params = EllipticParams(2, 1, 2, 2.0)
        u = radial(lambda r: r * r)
        rep = large_gradient_reduction_check(u, 4.0 * 0.25, params, 0.5)
        assert rep.rhs == pytest.approx(4.0)
        assert rep.passed

    def test_empty_set(self):
        rep = large_gradient_reduction_check(radial(lambda r: r * r), 0.0, P2, 10.0)
        assert rep.passed and rep.extra["nodes"] == 0
        with pytest.raises(ValueError):
            large_gradient_reduction_check(radial(lambda r: r), 0.0, P2, 0.0)


class TestCounterexample:
    @pytest.mark.parametrize("n, lap", [(2, 0.0), (3, -2.0), (5, -6.0)])
    def test_audit(self, n, lap):
        rep = counterexample_audit(n)
        assert rep.passed, rep.extra["checks"]
        assert rep.extra["laplacian_at_half"] == pytest.approx(lap, abs=1e-12)
        assert rep.extra["quotient_max_error"] == 0.0


class TestComparison:
    def test_ordered(self):
        a = radial(lambda r: 1 - r)
        b = radial(lambda r: (1 - r) ** 2)
        rep = comparison_check(a, b)
        assert rep.passed and rep.extra["margin"] == 0.0

    def test_interior_violation(self):
        a = radial(lambda r: 1 - r)
        b = radial(lambda r: (1 - r) * (1 + np.sin(np.pi * r)))
        assert not comparison_check(a, b).passed

    def test_boundary_violation_raises(self):
        with pytest.raises(ValueError, match="boundary"):
            comparison_check(radial(lambda r: 0 * r), radial(lambda r: r))


class TestLedger:
    def test_columns_and_digest(self):
        reps = [harnack_ratio(radial(np.ones_like), 0.0, P2, seed=3)]
        rows = list(csv.reader(io.StringIO(ledger_csv(reps, "abc"))))
        assert rows[0] == list(LEDGER_COLUMNS) + ["config_digest"]
        assert rows[1][0] == "harnack" and rows[1][-1] == "abc" and rows[1][8] == "3"

    def test_append_writes_one_header(self, tmp_path):
        reps = [harnack_ratio(radial(np.ones_like), 0.0, P2)]
        path = tmp_path / "ledger.csv"
        append_ledger(path, reps)
        append_ledger(path, reps)
        lines = path.read_text().splitlines()
        assert len(lines) == 3 and lines[0].startswith("name,")

    def test_json(self):
        d = json.loads(harnack_ratio(radial(np.ones_like), 0.0, P2).to_json())
        assert d["inputs"]["Lambda"] == 2.0 and d["pass"] is True


class TestSweeps:
    def test_harnack_sweep_small(self):
        out = harnack_sweep(SweepConfig(runs=3, alphas=(0.0, 1.0), ns=(2,)))
        assert out["scale_deviation"] <= 1e-8
        assert set(out["maxima"]) == {(2, 0.0), (2, 1.0)}
        assert all(math.isfinite(v) for v in out["maxima"].values())

    def test_weak_harnack_sweep_small(self):
        out = weak_harnack_sweep(SweepConfig(runs=2, alphas=(0.0,), ns=(3,)))
        assert len(out["maxima"]) == 3

    def test_hopf_sweep_small(self):
        out = hopf_sweep(SweepConfig(runs=3, alphas=(0.0, 2.0), ns=(2,)))
        for row in out["rows"]:
            assert row["growth"].passed and row["growth"].extra["A1"] > 0
            assert row["consistency"].passed
