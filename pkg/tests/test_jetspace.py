"""Jet-space tests: nonlinear connection blocks, d-connection structure, and
the closed-vs-general cross-validation of all 45 torsion/curvature blocks."""

import numpy as np
import pytest

from finslerlab import finsler as F
from finslerlab import jetspace as JS
from finslerlab import maps as M
from finslerlab.connection import base_geometry
from finslerlab.finsler import BasePoint


def generic_jet_point(p=2, n=2, seed=3):
    rng = np.random.default_rng(seed)
    return JS.JetPoint(
        t=rng.uniform(-1.0, 1.0, p),
        s=rng.uniform(0.4, 1.2, p),
        x=rng.uniform(0.6, 2.4, n),
        x_t=rng.uniform(-1.2, 1.2, (n, p)),
        y_s=rng.uniform(0.4, 1.2, (n, p)),
    )


class TestTemporalNLC:
    def test_euclidean_all_blocks_vanish(self, euclidean2):
        jp = generic_jet_point()
        m1, m2, m3, m4 = JS.berwald_temporal_nlc(euclidean2, jp)
        for block in (m1, m2, m3, m4):
            assert np.abs(block).max() == 0.0

    def test_riemannian_vertical_blocks(self, sphere):
        # for a quadratic structure the Berwald table is the Christoffel
        # table, so the mixed blocks are -gamma^c_{a beta}(t) y^j_c
        jp = generic_jet_point(seed=9)
        jp = JS.JetPoint(np.array([1.1, 0.3]), jp.s, jp.x, jp.x_t, jp.y_s)
        m1, m2, m3, m4 = JS.berwald_temporal_nlc(sphere, jp)
        geo = base_geometry(sphere, BasePoint(jp.t, jp.s))
        expected = -np.einsum("cab,jc->baj", geo.gamma, jp.y_s)
        assert np.allclose(m2, expected, atol=1e-12)
        assert np.allclose(m3, expected.transpose(1, 0, 2), atol=1e-12)
        assert np.abs(m4).max() == 0.0

    def test_blocks_match_composite_contraction(self, randers):
        # dual-path: blocks must equal -bGamma^C_{AB} X^j_C assembled from
        # the composite normal-component table
        jp = generic_jet_point(seed=10)
        ctx = JS.JetContext(randers, randers, jp)
        xc = np.concatenate([jp.x_t, jp.y_s], axis=1)
        direct = -np.einsum("cab,jc->baj", ctx.connection.bGamma, xc)
        assert np.abs(ctx.connection.M - direct).max() <= 1e-12

    def test_fourth_block_identically_zero(self, randers, sphere):
        for seed in range(4):
            jp = generic_jet_point(seed=seed)
            _, _, _, m4 = JS.berwald_temporal_nlc(randers, jp)
            assert np.abs(m4).max() == 0.0


class TestSpatialNLC:
    def test_flat_targets_vanish(self, euclidean2, minkowski_quartic):
        jp = generic_jet_point(seed=12)
        for tgt in (euclidean2, minkowski_quartic):
            n1, n2 = JS.berwald_spatial_nlc(tgt, jp)
            assert np.abs(n1).max() <= 1e-12
            assert np.abs(n2).max() <= 1e-12

    def test_sphere_target_christoffel_contraction(self, sphere):
        # oracle: for a Riemannian target the Berwald table is gamma-tilde(x)
        jp = generic_jet_point(seed=13)
        jp = JS.JetPoint(jp.t, jp.s, np.array([1.2, -0.5]), jp.x_t, jp.y_s)
        n1, n2 = JS.berwald_spatial_nlc(sphere, jp)
        t1 = jp.x[0]
        gam = np.zeros((2, 2, 2))
        gam[0, 1, 1] = -np.sin(t1) * np.cos(t1)
        gam[1, 0, 1] = gam[1, 1, 0] = np.cos(t1) / np.sin(t1)
        assert np.allclose(n1, np.einsum("jik,kb->bij", gam, jp.x_t), atol=1e-10)
        assert np.allclose(n2, np.einsum("jik,kb->bij", gam, jp.y_s), atol=1e-10)


class TestJetDConnection:
    def test_euclidean_pair_all_zero(self, euclidean2):
        conn = JS.jet_dconnection(euclidean2, euclidean2, generic_jet_point(seed=2))
        for arr in conn.eleven_components().values():
            assert np.abs(arr).max() == 0.0

    def test_delta_structure_reproduces_berwald(self, randers, sphere):
        jp = generic_jet_point(seed=4)
        ctx = JS.JetContext(randers, sphere, jp)
        comp = ctx.connection.eleven_components()
        geo = ctx.geo_s
        assert np.array_equal(comp["Gbar^alpha_(beta gamma)"], geo.B)
        assert np.array_equal(comp["Gbar^a_(beta gamma)"], geo.Ncol)
        # G^(i)(beta)_(alpha)(j)gamma = -delta^i_j B^beta_{gamma alpha}
        g_block = comp["G_(alpha)(j)gamma^(i)(beta)"]
        for al in range(2):
            for be in range(2):
                for ga in range(2):
                    assert g_block[be, al, ga] == -geo.B[be, ga, al]
        assert np.abs(comp["L^k_(ij)"] - ctx.geo_t.B).max() <= 1e-12


class TestEuclideanPairBlocks:
    def test_all_blocks_zero_both_paths(self, euclidean2):
        jp = generic_jet_point(seed=6)
        ctx = JS.JetContext(euclidean2, euclidean2, jp)
        blocks = {**ctx.closed_torsions(), **ctx.closed_curvatures()}
        general = {**ctx.general_torsions(), **ctx.general_curvatures()}
        for label in JS.ALL_LABELS:
            assert np.abs(blocks[label]).max() <= 1e-12, label
            assert np.abs(general[label]).max() <= 1e-12, label


class TestRiemannianSourceFlatTarget:
    def test_target_blocks_vanish_and_t1_matches_torsion(self, sphere, euclidean2):
        for jp in JS.sample_jet_points(sphere, euclidean2, 3, seed=15):
            ctx = JS.JetContext(sphere, euclidean2, jp)
            ct = ctx.closed_torsions()
            for label in ("T2", "T3", "T10", "T11", "T12", "T13", "T14", "T15"):
                assert np.abs(ct[label]).max() <= 1e-12, label
            assert np.array_equal(ct["T1"], ctx.geo_s.bR3)
            cc = ctx.closed_curvatures()
            for label in ("C3", "C5", "C8", "C9"):
                assert np.abs(cc[label]).max() <= 1e-12, label
            # C1 reduces to the Riemann tensor of the sphere metric
            t1 = jp.t[0]
            expected = np.zeros((2, 2, 2, 2))
            expected[0, 1, 1, 0] = np.sin(t1) ** 2
            expected[0, 1, 0, 1] = -np.sin(t1) ** 2
            expected[1, 0, 0, 1] = 1.0
            expected[1, 0, 1, 0] = -1.0
            assert np.allclose(cc["C1"], expected, atol=1e-8)

    def test_ncol_antisymmetrization_equals_torsion(self, randers):
        # the printed identity behind T1
        for pt in F.sample_points(randers, 5, seed=16):
            geo = base_geometry(randers, pt)
            alt = geo.Ncol - geo.Ncol.transpose(0, 2, 1)
            assert np.abs(alt - geo.bR3).max() <= 1e-11


@pytest.mark.parametrize("pair", ["randers_sphere", "randers_randers"])
class TestClosedVersusGeneral:
    def test_all_blocks_agree(self, pair, randers, sphere):
        src = randers
        tgt = sphere if pair == "randers_sphere" else randers
        for jp in JS.sample_jet_points(src, tgt, 5, seed=23):
            ctx = JS.JetContext(src, tgt, jp)
            closed = {**ctx.closed_torsions(), **ctx.closed_curvatures()}
            gt, diag_t = ctx.general_torsions(with_diagnostics=True)
            gc, diag_c = ctx.general_curvatures(with_diagnostics=True)
            general = {**gt, **gc}
            for label in JS.ALL_LABELS:
                c, g = closed[label], general[label]
                assert c.shape == g.shape, label
                scale = max(1.0, np.abs(c).max(), np.abs(g).max())
                assert np.abs(c - g).max() / scale <= 1e-7, label
            for name, value in {**diag_t, **diag_c}.items():
                assert value <= 1e-10, name


class TestFlatSourceCurvedTarget:
    def test_c3_isolates_target_curvature(self, euclidean2, sphere):
        # with a flat source the general (c3) combination must reduce to the
        # target-curvature closed form of C12
        for jp in JS.sample_jet_points(euclidean2, sphere, 3, seed=47):
            ctx = JS.JetContext(euclidean2, sphere, jp)
            closed = ctx.closed_curvatures()["C12"]
            general = ctx.general_curvatures()["C12"]
            assert np.abs(closed - general).max() <= 1e-12
            # and the closed value is the Berwald curvature combination of
            # the target at the pushed point
            gt = ctx.geo_t
            qn = np.einsum("lijr,rk->lijk", gt.bP, gt.N)
            qb = np.einsum("lijr,rkp,p->lijk", gt.bP, gt.B, jp.pushed_fiber)
            expected = (
                gt.bR4
                + (qn - qn.transpose(0, 1, 3, 2))
                - (qb - qb.transpose(0, 1, 3, 2))
            )
            assert np.abs(closed - expected).max() <= 1e-12


class TestStructuralIdentities:
    def _contexts(self, randers, sphere, count=4):
        for jp in JS.sample_jet_points(randers, sphere, count, seed=31):
            yield JS.JetContext(randers, sphere, jp)

    def test_antisymmetries_exact_on_closed_path(self, randers, sphere):
        for ctx in self._contexts(randers, sphere):
            ct = ctx.closed_torsions()
            cc = ctx.closed_curvatures()
            assert np.array_equal(ct["T1"], -ct["T1"].transpose(0, 2, 1))
            assert np.array_equal(ct["T4"], -ct["T4"].transpose(0, 1, 3, 2))
            assert np.array_equal(ct["T7"], -ct["T7"].transpose(0, 1, 3, 2))
            assert np.array_equal(ct["T14"], -ct["T14"].transpose(0, 1, 3, 2))
            assert np.array_equal(ct["T15"], -ct["T15"].transpose(0, 1, 3, 2))
            assert np.array_equal(cc["C1"], -cc["C1"].transpose(0, 1, 3, 2))
            assert np.array_equal(cc["C2"], -cc["C2"].transpose(0, 1, 3, 2))

    def test_delta_factorizations(self, randers, sphere):
        dn = np.eye(2)
        dp = np.eye(2)
        for ctx in self._contexts(randers, sphere):
            cc = ctx.closed_curvatures()
            assert np.array_equal(cc["C14"], -np.einsum("li,aebg->laeibg", dn, cc["C1"]))
            assert np.array_equal(cc["C20"], -np.einsum("li,adbg->ladibg", dn, cc["C1"]))
            assert np.array_equal(cc["C27"], np.einsum("ae,lijk->laeijk", dp, cc["C12"]))
            assert np.array_equal(cc["C28"], np.einsum("ad,lijk->ladijk", dp, cc["C12"]))
            assert np.array_equal(cc["C29"], np.einsum("ae,lijkc->laeijkc", dp, cc["C13"]))
            assert np.array_equal(cc["C30"], np.einsum("ad,lijkc->ladijkc", dp, cc["C13"]))
            # the general path must reproduce the same delta structure
            gc = ctx.general_curvatures()
            assert np.allclose(
                gc["C14"], -np.einsum("li,aebg->laeibg", dn, gc["C1"]), atol=1e-12
            )
            assert np.allclose(
                gc["C27"], np.einsum("ae,lijk->laeijk", dp, gc["C12"]), atol=1e-12
            )

    def test_delta_blocks_match_printed_aliases(self, randers, sphere):
        # C15/C16 and C21/C22 are delta times the P-curvature with signs
        for ctx in self._contexts(randers, sphere, count=2):
            cc = ctx.closed_curvatures()
            bp = ctx.geo_s.bP
            dn = np.eye(2)
            assert np.array_equal(cc["C15"], -np.einsum("li,aebc->laeibc", dn, bp))
            assert np.array_equal(cc["C16"], np.einsum("li,aebg->laeibg", dn, bp))
            assert np.array_equal(cc["C23"], np.einsum("ae,libk->laeibk", np.eye(2), cc["C10"]))
            assert np.array_equal(cc["C25"], np.einsum("ad,libk->ladibk", np.eye(2), cc["C10"]))


class TestProlongation:
    def test_linear_map_prolongation_kills_all_blocks(self, euclidean2):
        phi = M.smooth_map(2, 2, ["1.2*t1 - 0.3*t2", "0.5*t1 + 0.8*t2"])
        pt = BasePoint([0.4, -0.2], [1.0, 0.6])
        jp = JS.prolong_map(phi, pt)
        assert np.array_equal(jp.x_t, jp.y_s)
        ctx = JS.JetContext(euclidean2, euclidean2, jp)
        blocks = {**ctx.closed_torsions(), **ctx.closed_curvatures()}
        for label, arr in blocks.items():
            assert np.abs(arr).max() <= 1e-12, label


class TestAdaptedDerivativeSpotCheck:
    def test_t4_ingredient_against_finite_differences(self, randers, sphere):
        # directional finite difference of the temporal-field value along the
        # adapted direction for delta^J/delta t^beta, against the engine
        jp = JS.sample_jet_points(randers, sphere, 1, seed=40)[0]
        ctx = JS.JetContext(randers, sphere, jp)
        fields = ctx._general_fields()
        p, n = ctx.p, ctx.n
        beta = 1
        mslot, aslot, m_up = 0, 0, 1

        def m_value(jp2):
            geo = base_geometry(randers, BasePoint(jp2.t, jp2.s))
            return JS._temporal_blocks(geo, jp2)[mslot, aslot, m_up]

        mval = fields["m"][..., 0]
        h = 1e-6

        def shifted(sign):
            t = jp.t.copy()
            t[beta] += sign * h
            x_t = jp.x_t.copy()
            y_s = jp.y_s.copy()
            for j in range(n):
                for b in range(2 * p):
                    delta = -sign * h * mval[b, beta, j]
                    if b < p:
                        x_t[j, b] += delta
                    else:
                        y_s[j, b - p] += delta
            return JS.JetPoint(t, jp.s, jp.x, x_t, y_s)

        fd = (m_value(shifted(+1)) - m_value(shifted(-1))) / (2 * h)
        engine = float(
            fields["m"][mslot, aslot, m_up, 1:] @ fields["w"][beta]
        )
        assert abs(fd - engine) <= 1e-5 * max(1.0, abs(engine))


class TestCoordinateTransform:
    def test_linear_jet_transform_preserves_pushed_norm(self, randers):
        # under tbar = P t, xbar = Q x the pushed fiber transforms as a target
        # tangent vector, so the target norm of y_s @ s is invariant
        jp = generic_jet_point(seed=44)
        p_mat = np.array([[1.2, 0.1], [-0.2, 0.9]])
        q_mat = np.array([[0.8, 0.3], [0.1, 1.1]])
        jp2 = JS.transform_jet_point(jp, p_mat, q_mat)
        assert np.allclose(jp2.pushed_fiber, q_mat @ jp.pushed_fiber, atol=1e-14)
        assert np.allclose(jp2.s, p_mat @ jp.s, atol=1e-15)
        assert np.allclose(jp2.x_t @ p_mat, q_mat @ jp.x_t, atol=1e-14)


class TestMixedDimensions:
    def test_rectangular_jet_spaces(self, randers):
        # p != n exercises every composite-index shape in both routes
        randers3 = F.randers(3, 0.25)
        for src, tgt in ((randers, randers3), (randers3, randers)):
            rep = JS.cross_validate(src, tgt, count=3, seed=11)
            assert rep.overall_pass
            assert max(b.max_rel_residual for b in rep.blocks) <= 1e-12


class TestCrossValidate:
    def test_report_fields_and_pass(self, randers, sphere):
        rep = JS.cross_validate(randers, sphere, count=8, seed=42)
        assert rep.overall_pass
        assert len(rep.blocks) == 45
        d = rep.to_dict()
        assert d["overall_pass"] is True
        assert {b["label"] for b in d["blocks"]} == set(JS.ALL_LABELS)

    def test_fault_injection_detected(self, randers, sphere):
        rep = JS.cross_validate(randers, sphere, count=3, seed=42, corrupt_block="T7")
        assert not rep.block("T7").passed
        assert not rep.overall_pass

    def test_sampling_determinism(self, randers, sphere):
        a = JS.sample_jet_points(randers, sphere, 4, seed=77)
        b = JS.sample_jet_points(randers, sphere, 4, seed=77)
        for x, y in zip(a, b):
            assert np.array_equal(x.t, y.t) and np.array_equal(x.y_s, y.y_s)

    def test_thread_pool_matches_serial(self, randers, sphere, monkeypatch):
        serial = JS.cross_validate(randers, sphere, count=6, seed=42)
        monkeypatch.setenv("FINSLERLAB_THREADS", "4")
        threaded = JS.cross_validate(randers, sphere, count=6, seed=42)
        for bs, bt in zip(serial.blocks, threaded.blocks):
            assert bs.max_rel_residual == bt.max_rel_residual
            assert bs.max_abs_closed == bt.max_abs_closed
