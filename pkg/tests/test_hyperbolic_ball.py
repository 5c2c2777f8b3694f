import math

import numpy as np
import pytest

from kecone import hyperbolic_ball as hb
from kecone.errors import BoundaryPoint, RadiusTooSmall


class TestMetric:
    def test_origin(self):
        np.testing.assert_allclose(hb.ball_metric(np.zeros(2, complex)),
                                   np.eye(2) / 4.0, atol=1e-15)

    def test_half_radius_point(self):
        h = hb.ball_metric(np.array([0.5, 0.0], complex))
        assert h[0, 0] == pytest.approx(4.0 / 9.0)
        assert h[1, 1] == pytest.approx(1.0 / 3.0)

    def test_positive_definite(self):
        for z in hb.sample_interior_points(3, 6, seed=1):
            assert np.linalg.eigvalsh(hb.ball_metric(z))[0] > 0

    def test_boundary_guard(self):
        with pytest.raises(BoundaryPoint):
            hb.ball_metric(np.array([1.0 - 1e-13, 0.0], complex))

    @pytest.mark.parametrize("n", [2, 3])
    def test_einstein_identity_fd(self, n):
        # Ricci form of the metric equals -2(n+1) h, via finite differences
        # of log det h
        for z in hb.sample_interior_points(n, 3, seed=4, rmax=0.6):
            ric = hb.ricci_metric_fd(z)
            h = hb.ball_metric(z)
            assert np.max(np.abs(ric + 2.0 * (n + 1) * h)) <= 1e-6


class TestDivisorDistance:
    def test_on_divisor(self):
        assert hb.distance_to_divisor(np.array([0.0, 0.3], complex)) == 0.0

    def test_radial_value(self):
        d = hb.distance_to_divisor(np.array([0.5, 0.0], complex))
        assert d == pytest.approx(math.acosh(2.0 / math.sqrt(3.0)), abs=1e-12)
        assert d == pytest.approx(0.5493061443340549, abs=1e-12)

    def test_two_coordinate_value(self):
        d = hb.distance_to_divisor(np.array([0.5, 0.5], complex))
        assert d == pytest.approx(math.acosh(math.sqrt(1.5)), abs=1e-12)
        assert d == pytest.approx(0.6584789484624083, abs=1e-10)

    def test_sandwich_bounds(self):
        # (1/2) log u <= d <= (1/2) log(4u)
        for z in hb.sample_interior_points(2, 10, seed=2):
            s = float(np.vdot(z, z).real)
            u = 1.0 + abs(z[0]) ** 2 / (1.0 - s)
            d = hb.distance_to_divisor(z)
            assert 0.5 * math.log(u) - 1e-12 <= d <= 0.5 * math.log(4.0 * u) + 1e-12

    def test_invariance_under_stabilizer_moves(self):
        rng = np.random.default_rng(9)
        for z in hb.sample_interior_points(3, 5, seed=3):
            a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            a *= rng.uniform(0.2, 0.7) / np.linalg.norm(a)
            q, _ = np.linalg.qr(rng.standard_normal((2, 2))
                                + 1j * rng.standard_normal((2, 2)))
            moved = hb.divisor_stabilizer_move(z, theta=rng.uniform(0, 6.28),
                                               a=a, unitary=q)
            assert np.linalg.norm(moved) < 1.0
            assert hb.distance_to_divisor(moved) == pytest.approx(
                hb.distance_to_divisor(z), abs=1e-12)

    def test_mobius_involution_points(self):
        a = np.array([0.3 + 0.1j], complex)
        np.testing.assert_allclose(hb.mobius_subball(a, a), 0.0, atol=1e-14)
        np.testing.assert_allclose(hb.mobius_subball(np.zeros(1, complex), a), a,
                                   atol=1e-14)


class TestGeodesicOracle:
    def test_coincident_points(self):
        z = np.array([0.1, 0.2 + 0.1j], complex)
        assert hb.geodesic_distance_oracle(z, z) == 0.0

    def test_radial_closed_form(self):
        # radial geodesic distance is arctanh(r) in this normalization
        p = np.zeros(2, complex)
        q = np.array([0.5, 0.0], complex)
        d = hb.geodesic_distance_oracle(p, q)
        assert d == pytest.approx(math.atanh(0.5), abs=1e-8)

    def test_symmetry(self):
        p = np.array([0.2 + 0.1j, -0.1], complex)
        q = np.array([-0.3, 0.2 - 0.2j], complex)
        d1 = hb.geodesic_distance_oracle(p, q)
        d2 = hb.geodesic_distance_oracle(q, p)
        assert d1 == pytest.approx(d2, abs=1e-9)

    def test_divisor_distance_formula_vs_oracle(self):
        # ten seeded points: free-endpoint shooting against the closed form
        for z in hb.sample_interior_points(2, 10, seed=123, rmax=0.7):
            formula = hb.distance_to_divisor(z)
            if formula < 1e-8:
                continue
            oracle = hb.divisor_distance_oracle(z)
            assert oracle == pytest.approx(formula, abs=1e-6)


class TestCutoff:
    def test_radius_guard(self):
        with pytest.raises(RadiusTooSmall):
            hb.CutoffSpec(4.0)

    def test_profile_shape(self):
        xi = hb.outer_profile(np.linspace(-1, 3, 400))
        assert np.all(xi >= 0.0) and np.all(xi <= 1.0)
        assert np.all(np.diff(xi) <= 1e-12)
        assert hb.outer_profile(1.0)[0] == 1.0
        assert hb.outer_profile(1.5)[0] == 0.0

    def test_support(self):
        for R in (8.0, 16.0, 32.0):
            spec = hb.CutoffSpec(R)
            assert hb.cutoff_radial_profile(spec, np.array([R / 4.0 - 0.1]))[0] == 1.0
            assert hb.cutoff_radial_profile(spec, np.array([R / 2.0 + 0.1]))[0] == 0.0

    def test_point_support(self):
        spec = hb.CutoffSpec(8.0)
        # d = 1.9 <= R/4, d = 4.1 >= R/2
        z_in = np.array([math.tanh(1.9), 0.0], complex)
        z_out = np.array([math.tanh(4.1), 0.0], complex)
        assert hb.cutoff(spec, z_in) == 1.0
        assert hb.cutoff(spec, z_out) == 0.0

    @pytest.mark.parametrize("k", [1, 2])
    def test_derivative_scaling(self, k):
        sups = {R: hb.cutoff_derivative_bounds(hb.CutoffSpec(R), k)
                for R in (8.0, 16.0, 32.0)}
        scaled = [s * R ** k for R, s in sups.items()]
        assert max(scaled) / min(scaled) <= 1.2

    def test_angular_independence(self):
        # chi depends on the point only through u: invariant under rotations
        spec = hb.CutoffSpec(8.0)
        z = np.array([0.4 + 0.2j, 0.3], complex)
        for theta in (0.5, 1.7):
            moved = hb.divisor_stabilizer_move(z, theta=theta)
            assert hb.cutoff(spec, moved) == pytest.approx(hb.cutoff(spec, z),
                                                           abs=1e-14)

    def test_csv_style_export_columns(self, tmp_path):
        spec = hb.CutoffSpec(8.0)
        t = np.linspace(0.0, 6.0, 50)
        chi = hb.cutoff_radial_profile(spec, t)
        d1 = np.gradient(chi, t)
        path = tmp_path / "cutoff.csv"
        with open(path, "w") as fh:
            fh.write("t,chi,chi_k1\n")
            for row in zip(t, chi, d1):
                fh.write("%.17g,%.17g,%.17g\n" % row)
        assert path.read_text().splitlines()[0] == "t,chi,chi_k1"
