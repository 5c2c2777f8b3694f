import numpy as np
import pytest

from kecone import gluing_lab as gl
from kecone.curvature_ops import curvature_profile
from kecone.errors import DefectUnderflow, NewtonDivergence


@pytest.fixture(scope="module")
def glued_d2():
    return {R: gl.build_glued_profile(2, 2, R) for R in (8.0, 12.0, 16.0, 20.0)}


class TestGluedProfile:
    def test_degenerate_order_is_ball(self):
        g = gl.build_glued_profile(2, 1, 12.0)
        assert g.c == 1.0
        assert abs(g.s_d) <= 1e-12
        assert g.sup_defect <= 1e-11
        np.testing.assert_allclose(g.f_glue, np.cosh(g.t), rtol=1e-9)

    def test_matches_cone_inside_and_ball_outside(self, glued_d2):
        g = glued_d2[12.0]
        inner = g.t <= g.R / 4.0
        outer = g.t >= g.R / 2.0
        np.testing.assert_allclose(g.f_glue[inner], g.cone_profile.f[inner],
                                   rtol=0, atol=0)
        np.testing.assert_allclose(g.f_glue[outer], np.cosh(g.t[outer] + g.s_d),
                                   rtol=0, atol=0)

    def test_defect_supported_in_annulus(self, glued_d2):
        for g in glued_d2.values():
            assert g.defect_outside_annulus() <= 1e-12
            assert g.sup_defect > 0.0
            supp = g.t[np.abs(g.defect) > 10.0 * g.defect_outside_annulus() + 1e-15]
            if len(supp):
                assert supp.min() >= g.R / 4.0 - 1e-9
                assert supp.max() <= g.R / 2.0 + (g.t[1] - g.t[0]) + 1e-9

    def test_sup_defect_decreases(self, glued_d2):
        sups = [glued_d2[R].sup_defect for R in (8.0, 12.0, 16.0, 20.0)]
        assert all(a > b for a, b in zip(sups, sups[1:]))

    def test_glue_region_closeness_decays(self, glued_d2):
        vals = [glued_d2[R].glue_region_closeness() for R in (8.0, 12.0, 16.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        rate = -np.polyfit((8.0, 12.0, 16.0), np.log(vals), 1)[0]
        assert rate > 0.5

    def test_validation(self):
        with pytest.raises(ValueError):
            gl.build_glued_profile(2, 2, 6.0)
        with pytest.raises(ValueError):
            gl.build_glued_profile(2, 2, 12.0, T=13.0)

    def test_csv_export(self, glued_d2, tmp_path):
        path = tmp_path / "glue.csv"
        with open(path, "w") as fh:
            glued_d2[8.0].to_csv(fh)
        assert path.read_text().splitlines()[0] == "t,f,fp,fpp,chi,defect"


class TestDefectDecay:
    def test_high_precision_fit(self):
        rate, r2 = gl.defect_decay(2, 2, [8, 12, 16, 20])
        assert rate > 0.0
        assert r2 >= 0.95

    def test_float_fit_floors_but_decays(self):
        rate, r2 = gl.defect_decay(2, 2, [8, 10, 12, 14], precision="float")
        assert rate > 0.0
        assert r2 >= 0.9

    def test_degenerate_order_underflows(self):
        with pytest.raises(DefectUnderflow):
            gl.defect_decay(2, 1, [8, 12, 16, 20], precision="float")

    def test_radii_validation(self):
        with pytest.raises(ValueError):
            gl.defect_decay(2, 2, [8, 12, 16])
        with pytest.raises(ValueError):
            gl.defect_decay(2, 2, [8, 12, 10, 16])
        with pytest.raises(ValueError):
            gl.defect_decay(2, 2, [6, 8, 10, 12])


class TestNewtonResolve:
    def test_zero_defect_returns_immediately(self):
        g = gl.build_glued_profile(2, 1, 12.0)
        rep = gl.newton_resolve(g)
        assert rep.newton_iters == 0
        assert rep.converged
        assert rep.correction_norm <= 1e-10

    def test_converges_quickly(self, glued_d2):
        for R in (12.0, 16.0, 20.0):
            rep = gl.newton_resolve(glued_d2[R])
            assert rep.converged
            assert rep.newton_iters <= 10
            assert rep.residual <= 1e-10

    def test_correction_norms_decay(self, glued_d2):
        norms = [gl.newton_resolve(glued_d2[R]).correction_norm
                 for R in (8.0, 12.0, 16.0, 20.0)]
        slope = np.polyfit((8.0, 12.0, 16.0, 20.0), np.log(norms), 1)[0]
        assert slope < 0.0
        assert norms[0] > norms[-1]

    def test_two_sided_metric_bound(self, glued_d2):
        for R in (12.0, 16.0, 20.0):
            rep = gl.newton_resolve(glued_d2[R])
            ratio = rep.corrected.f / glued_d2[R].f_glue
            C = max(ratio.max(), 1.0 / ratio.min())
            assert C <= 1.01

    def test_curvature_stability(self, glued_d2):
        g = glued_d2[16.0]
        rep = gl.newton_resolve(g)
        cp = curvature_profile(rep.corrected)
        target = -(2 + 1.0) + 2.0 / g.c ** 2
        assert cp.K_tr.max() == pytest.approx(target, abs=1e-3)

    def test_divergence_guard(self, glued_d2):
        import copy

        broken = copy.copy(glued_d2[8.0])
        broken.f_glue = glued_d2[8.0].f_glue.copy()
        broken.f_glue[-1] *= 1.5  # unreachable boundary value within 0 iterations
        with pytest.raises(NewtonDivergence):
            gl.newton_resolve(broken, max_iter=0)
