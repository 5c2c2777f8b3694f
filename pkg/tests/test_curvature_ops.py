import numpy as np
import pytest

from kecone import curvature_ops as co
from kecone import tensor_lab as tl
from kecone.errors import OutOfRange
from kecone.ke_profile import fit_decay_rate


@pytest.fixture(scope="module")
def cp_ball(profiles):
    return co.curvature_profile(profiles(2, 1.0))


@pytest.fixture(scope="module")
def cp_c09(profiles):
    return co.curvature_profile(profiles(2, 0.9))


class TestCurvatureProfile:
    def test_ball_is_constant(self, cp_ball):
        assert np.max(np.abs(cp_ball.K_tr + 1.0)) <= 1e-8
        assert np.max(np.abs(cp_ball.K_disk + 4.0)) <= 1e-8
        assert np.max(np.abs(cp_ball.m - 1.0)) <= 1e-8

    def test_values_at_origin(self, profiles):
        cp = co.curvature_profile(profiles(2, 0.95))
        assert cp.K_tr[0] == pytest.approx(-(3.0 - 2.0 / 0.9025), abs=1e-10)
        assert cp.K_disk[0] == pytest.approx(-6.0 + 2.0 * (3.0 - 2.0 / 0.9025),
                                             abs=1e-10)

    def test_asymptotic_limits(self, cp_c09):
        assert cp_c09.K_tr[-1] == pytest.approx(-1.0, abs=1e-10)
        assert cp_c09.K_disk[-1] == pytest.approx(-4.0, abs=1e-10)

    def test_bounds_and_monotonicity(self, cp_c09):
        n, c = 2, 0.9
        assert np.all(cp_c09.K_tr <= -(n + 1) + n / c ** 2 + 1e-12)
        assert np.all(cp_c09.K_tr >= -1.0 - 1e-10)
        assert np.all(cp_c09.K_disk <= -4.0 + 1e-10)
        assert np.all(cp_c09.K_disk >= -2 * n - 2 - 1e-12)
        # m is nonincreasing (curvature-ratio monotonicity)
        assert np.max(np.diff(cp_c09.m)) <= 1e-11

    def test_mixed_equals_totally_real(self, cp_c09):
        np.testing.assert_allclose(cp_c09.mu_mixed, cp_c09.K_tr, atol=1e-14)

    def test_trace_identity_for_mu(self, cp_c09):
        # K_disk + (2n-2) mu = -2(n+1)
        n = 2
        lhs = cp_c09.K_disk + (2 * n - 2) * cp_c09.mu_mixed
        np.testing.assert_allclose(lhs, -2.0 * (n + 1), atol=1e-10)

    def test_csv_header(self, cp_c09, tmp_path):
        path = tmp_path / "cur.csv"
        with open(path, "w") as fh:
            cp_c09.to_csv(fh)
        assert path.read_text().splitlines()[0] == "t,Ktr,Kdisk,lambda,m,mu"


class TestAssembledOperator:
    def test_ball_operator_is_model_tensor(self, cp_ball):
        op = co.assemble_point_operator(cp_ball, 1.3)
        R0 = tl.constant_hsc_tensor(2, -4.0)
        assert np.max(np.abs(op.tensor.coeff - R0.coeff)) <= 1e-10

    def test_einstein_eigenvalues(self, cp_c09):
        for t in (0.0, 0.7, 3.0, 11.0):
            op = co.assemble_point_operator(cp_c09, t)
            np.testing.assert_allclose(op.ricci_eigenvalues(), -6.0, atol=1e-7)

    def test_algebraic_symmetries(self, cp_c09):
        op = co.assemble_point_operator(cp_c09, 0.4)
        assert op.tensor.symmetry_defect() <= 1e-12
        assert op.tensor.bianchi_defect() <= 1e-12
        assert op.tensor.kahler_defect() <= 1e-12

    def test_block_values_scalar_on_decomposables(self, cp_c09):
        op = co.assemble_point_operator(cp_c09, 0.9)
        e = np.eye(4)
        assert op.sectional(e[0], e[1]) == pytest.approx(op.k_disk, abs=1e-12)
        rng = np.random.default_rng(8)
        # every mixed plane (disk direction x horizontal direction) sees mu
        for _ in range(20):
            a, b = rng.standard_normal(2)
            v = np.array([a, b, 0.0, 0.0])
            w = np.zeros(4)
            w[2:] = rng.standard_normal(2)
            assert op.sectional(v, w) == pytest.approx(op.mu, abs=1e-12)

    def test_horizontal_block_is_scaled_model(self, profiles):
        cp = co.curvature_profile(profiles(3, 0.9))
        op = co.assemble_point_operator(cp, 0.5)
        R0 = tl.constant_hsc_tensor(2, -4.0)  # n-1 = 2 complex dimensions
        np.testing.assert_allclose(op.horizontal_block().coeff,
                                   op.m * R0.coeff, atol=1e-12)

    def test_horizontal_j_plane_range(self, profiles):
        cp = co.curvature_profile(profiles(3, 0.9))
        op = co.assemble_point_operator(cp, 0.0)
        e = np.eye(6)
        assert op.sectional(e[2], e[3]) == pytest.approx(-4.0 * op.m, abs=1e-12)
        assert op.sectional(e[2], e[4]) == pytest.approx(-op.m, abs=1e-12)

    def test_out_of_range(self, cp_c09):
        with pytest.raises(OutOfRange):
            co.assemble_point_operator(cp_c09, 25.0)

    def test_operator_converges_to_ball_operator(self, cp_c09):
        # Frobenius distance to the constant-curvature operator at the same t
        # decays at rate 2n+2; fit where the signal beats round-off
        ball = tl.constant_hsc_tensor(2, -4.0)
        ts = np.linspace(0.5, 8.0, 40)
        norms = []
        for t in ts:
            op = co.assemble_point_operator(cp_c09, float(t))
            norms.append(np.sqrt(np.sum((op.tensor.coeff - ball.coeff) ** 2)))
        fit = fit_decay_rate(np.column_stack([ts, norms]), (0.5, 6.0))
        assert fit.rate >= 0.9
        assert fit.r_squared >= 0.98


class TestExtremization:
    def test_ball_extrema(self, cp_ball):
        op = co.assemble_point_operator(cp_ball, 1.3)
        res = co.extremize_sectional(op, 1000, 11)
        assert res.min_K == pytest.approx(-4.0, abs=1e-6)
        assert res.max_K == pytest.approx(-1.0, abs=1e-6)

    def test_sup_formula_at_origin(self, profiles):
        cp = co.curvature_profile(profiles(2, 0.95))
        op = co.assemble_point_operator(cp, 0.0)
        res = co.extremize_sectional(op, 1000, 11)
        assert res.max_K == pytest.approx(-3.0 + 2.0 / 0.9025, abs=1e-6)

    def test_argmax_plane_is_totally_real(self, profiles):
        cp = co.curvature_profile(profiles(2, 0.95))
        op = co.assemble_point_operator(cp, 0.0)
        res = co.extremize_sectional(op, 1000, 3)
        v, w = res.argmax_plane
        J = tl.standard_complex_structure(4)
        assert abs((J @ v) @ w) <= 1e-6

    def test_lower_bound_n3(self, profiles):
        cp = co.curvature_profile(profiles(3, 0.9))
        op = co.assemble_point_operator(cp, 0.0)
        res = co.extremize_sectional(op, 1000, 11)
        assert res.min_K >= -8.0 - 1e-6
        assert res.max_K < 0.0

    def test_negativity_of_random_planes(self, cp_c09):
        op = co.assemble_point_operator(cp_c09, 2.0)
        rng = np.random.default_rng(4)
        V = rng.standard_normal((2000, 4))
        W = rng.standard_normal((2000, 4))
        assert np.max(op.tensor.sectional_batch(V, W)) < 0.0

    def test_sample_count_guard(self, cp_ball):
        op = co.assemble_point_operator(cp_ball, 0.0)
        with pytest.raises(ValueError):
            co.extremize_sectional(op, 10, 1)

    def test_json_export(self, cp_ball, tmp_path):
        op = co.assemble_point_operator(cp_ball, 0.0)
        res = co.extremize_sectional(op, 1000, 1)
        doc = res.to_json_dict()
        assert doc["schema_version"] == 1
        assert len(doc["argmax_plane"]["v"]) == 4


class TestHolomorphicRange:
    def test_ball_constant(self, cp_ball):
        op = co.assemble_point_operator(cp_ball, 0.7)
        hmin, hmax = co.holomorphic_sectional_range(op, 1000, 3)
        assert hmin == pytest.approx(-4.0, abs=1e-6)
        assert hmax == pytest.approx(-4.0, abs=1e-6)

    def test_extremes_at_origin(self, cp_c09):
        # min over J-planes is the disk-plane value; the max is attained on
        # the diagonal mixed plane at (K_disk - 4m + 8 K_tr)/4, above -4
        op = co.assemble_point_operator(cp_c09, 0.0)
        hmin, hmax = co.holomorphic_sectional_range(op, 1000, 3)
        assert hmin >= op.k_disk - 1e-6
        assert hmin == pytest.approx(op.k_disk, abs=1e-6)
        mixed = (op.k_disk - 4.0 * op.m + 8.0 * op.mu) / 4.0
        assert hmax == pytest.approx(mixed, abs=1e-6)
        assert hmax > -4.0
        assert hmin >= -6.0 - 1e-6

    def test_pure_plane_values_stay_below_minus_four(self, cp_c09):
        op = co.assemble_point_operator(cp_c09, 0.0)
        e = np.eye(4)
        assert op.sectional(e[0], e[1]) <= -4.0
        assert op.sectional(e[2], e[3]) <= -4.0


class TestVsnConsistency:
    def test_ball_operator_is_vsn(self, cp_ball):
        op = co.assemble_point_operator(cp_ball, 1.1)
        verdict = tl.vsn_test(op.to_hermitian(), 200, 5)
        assert verdict.is_vsn

    def test_cone_operators_are_vsn(self, profiles):
        for (n, c, t) in [(2, 0.9, 0.0), (2, 0.9, 1.5), (2, 0.85, 3.0),
                          (3, 0.95, 0.0), (3, 0.9, 2.0)]:
            cp = co.curvature_profile(profiles(n, c))
            op = co.assemble_point_operator(cp, t)
            herm = op.to_hermitian()
            assert herm.symmetry_defect() <= 1e-12
            verdict = tl.vsn_test(herm, 200, 5)
            assert verdict.is_vsn, (n, c, t, verdict.worst_margin)
            assert verdict.worst_margin > 0.1
