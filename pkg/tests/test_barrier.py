import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopflab.barrier import (BarrierSpec, annulus_samples, barrier_constants, barrier_eval,
                             barrier_grad_norm, barrier_hessian_eigs, certify_barrier, extended_barrier)
from hopflab.operators import EllipticParams, pucci_minus

UNIT = BarrierSpec(1.0, 1.0, EllipticParams(2, 1, 1, 0))


def fd_hessian(spec, x, h=1e-4):
    """Central-difference Hessian of the barrier at x."""
    n = len(x)
    H = np.zeros((n, n))
    E = np.eye(n) * h
    for i in range(n):
        for j in range(n):
            H[i, j] = (barrier_eval(spec, x + E[i] + E[j]) - barrier_eval(spec, x + E[i] - E[j])
                       - barrier_eval(spec, x - E[i] + E[j]) + barrier_eval(spec, x - E[i] - E[j])) / (4 * h * h)
    return H


class TestEvaluation:
    def test_outer_and_inner_values(self):
        assert barrier_eval(UNIT, [1.0, 0.0]) == 0.0
        assert barrier_eval(UNIT, [0.5, 0.0]) == pytest.approx(1.0, abs=1e-15)

    def test_three_quarter_radius(self):
        exact = (Fraction(4, 3) ** 3 - 1) / 7
        assert exact == Fraction(37, 189)
        assert barrier_eval(UNIT, [0.0, 0.75]) == pytest.approx(float(exact), abs=1e-15)

    def test_gradient_closed_form(self):
        assert barrier_grad_norm(UNIT, [1.0, 0.0]) == pytest.approx(3 / 7, abs=1e-15)
        assert barrier_grad_norm(UNIT, [0.5, 0.0]) == pytest.approx(48 / 7, abs=1e-14)

    def test_outside_annulus_rejected(self):
        with pytest.raises(ValueError):
            barrier_eval(UNIT, [0.2, 0.0])
        with pytest.raises(ValueError):
            barrier_eval(UNIT, [1.2, 0.0])
        with pytest.raises(ValueError):
            barrier_eval(UNIT, 0.7)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            BarrierSpec(-1.0, 1.0, EllipticParams())
        with pytest.raises(ValueError):
            BarrierSpec(1.0, 0.0, EllipticParams())

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.5, 1.0), st.integers(2, 5),
           st.sampled_from([(1.0, 1.0), (1.0, 2.0), (0.5, 4.0)]))
    def test_boundary_exactness_and_scaling(self, M, R, t, n, lp):
        spec = BarrierSpec(M, R, EllipticParams(n, *lp))
        unit = BarrierSpec(1.0, 1.0, spec.params)
        e = np.zeros(n)
        e[0] = 1.0
        assert abs(barrier_eval(spec, R * e)) <= 1e-14 * M
        assert abs(barrier_eval(spec, R / 2 * e) - M) <= 1e-14 * M
        assert barrier_eval(spec, t * R * e) == pytest.approx(M * barrier_eval(unit, t * e), rel=1e-13, abs=1e-15)

    def test_strictly_decreasing(self):
        spec = BarrierSpec(2.0, 1.5, EllipticParams(3, 1, 2, 1))
        r = np.linspace(0.75, 1.5, 200)
        vals = barrier_eval(spec, np.column_stack([r, 0 * r, 0 * r]))
        assert np.all(np.diff(vals) < 0)

    @pytest.mark.parametrize("n, lam, Lam", [(2, 1.0, 1.0), (3, 1.0, 2.0), (2, 0.5, 4.0)])
    def test_hessian_eigenvalues_against_finite_differences(self, n, lam, Lam):
        spec = BarrierSpec(1.0, 1.0, EllipticParams(n, lam, Lam))
        x = np.zeros(n)
        x[0], x[1] = 0.5, 0.45
        H = fd_hessian(spec, x)
        mu1, mu2 = barrier_hessian_eigs(spec, x)
        ev = np.sort(np.linalg.eigvalsh(H))
        assert ev[-1] == pytest.approx(mu1, rel=1e-5)
        assert np.allclose(ev[:-1], mu2, rtol=1e-5)


class TestConstants:
    def test_unit_planar(self):
        c = barrier_constants(UNIT)
        assert c.beta == 3
        assert c.A1 == pytest.approx(3 / 7, abs=1e-12) and c.A3 == c.A1
        assert c.A2 == pytest.approx(48 / 7, abs=1e-12) and c.A4 == c.A2

    def test_unweighted_lower_bound_n3(self):
        spec = BarrierSpec(1, 1, EllipticParams(3, 1, 2, 0))
        c = barrier_constants(spec)
        assert c.beta == 6
        assert c.c0 == pytest.approx(2 / 7, abs=1e-12)

    @given(st.integers(2, 8), st.floats(0.1, 5), st.floats(1, 10))
    def test_positive_slack(self, n, lam, ratio):
        p = EllipticParams(n, lam, lam * ratio)
        b = BarrierSpec(1, 1, p).beta
        assert (b + 1) * p.lam - (n - 1) * p.Lam == pytest.approx(3 * p.lam, rel=1e-12)

    def test_c0_matches_pucci_at_outer_sphere(self):
        spec = BarrierSpec(1, 1, EllipticParams(2, 1, 1, 1))
        x = np.array([1.0, 0.0])
        mu1, mu2 = barrier_hessian_eigs(spec, x)
        lhs = barrier_grad_norm(spec, x) * pucci_minus(np.diag([mu1, mu2]), spec.params)
        assert lhs == pytest.approx(3 / 7 * 9 / 7, abs=1e-14)
        assert lhs - barrier_constants(spec).c0 == pytest.approx(0.0, abs=1e-14)


class TestCertificate:
    def test_planar_degenerate_passes(self):
        cert = certify_barrier(BarrierSpec(1, 1, EllipticParams(2, 1, 1, 1)), 10_000)
        assert cert.passed
        assert cert.samples >= 10_000
        assert cert.margins["pucci"] >= -1e-10
        assert cert.margins["pucci"] == pytest.approx(0.0, abs=1e-12)

    def test_scaled_height_passes(self):
        spec = BarrierSpec(2.0, 1.0, EllipticParams(3, 1, 2, 0))
        cert = certify_barrier(spec, 2000)
        assert cert.passed

    def test_zero_height(self):
        cert = certify_barrier(BarrierSpec(0.0, 1.0, EllipticParams(3, 1, 2, 2)), 500)
        assert cert.passed
        assert all(abs(v) == 0 for v in cert.margins.values())

    def test_inflated_constant_fails_naming_property(self):
        spec = BarrierSpec(1, 1, EllipticParams(2, 1, 2, 0))
        cert = certify_barrier(spec, 500)
        assert cert.passed
        import hopflab.barrier as hb
        orig = hb.barrier_constants

        def inflated(s):
            c = orig(s)
            return hb.BarrierConstants(c.beta, c.c0 * 1.01, c.A1, c.A2, c.A3, c.A4)

        hb.barrier_constants = inflated
        try:
            bad = certify_barrier(spec, 500)
        finally:
            hb.barrier_constants = orig
        assert not bad.passed
        assert bad.failures[0]["property"] == "pucci"
        assert len(bad.failures[0]["witness"]) == 2

    def test_json_keys(self):
        d = json.loads(certify_barrier(UNIT, 200).to_json())
        for key in ("n", "lambda", "Lambda", "alpha", "M", "R", "beta", "c0", "A1", "A2", "A3", "A4",
                    "margins", "samples"):
            assert key in d

    def test_samples_are_deterministic_and_cover_spheres(self):
        pts = annulus_samples(UNIT, 1000)
        assert np.array_equal(pts, annulus_samples(UNIT, 1000))
        r = np.linalg.norm(pts, axis=1)
        assert np.isclose(r.min(), 0.5) and np.isclose(r.max(), 1.0)

    def test_extension_is_continuous(self):
        spec = BarrierSpec(1.5, 1.0, EllipticParams(2, 1, 2, 0))
        r = np.linspace(0, 1, 1001)
        v = extended_barrier(spec, r)
        assert np.all(v[r <= 0.5] == 1.5)
        assert v[-1] == 0
        assert np.abs(np.diff(v)).max() < 0.05
