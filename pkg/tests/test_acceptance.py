"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every tolerance is pinned here exactly as stated; these are the exit criteria
of the library.  Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import json

import numpy as np
import pytest

from finslerlab import cli
from finslerlab import connection as C
from finslerlab import curves as CV
from finslerlab import finsler as F
from finslerlab import jetspace as JS
from finslerlab import maps as M


def _report(tag, passed, detail=""):
    line = f"ACCEPTANCE {tag}: {'PASS' if passed else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert passed, line


def catalog_structures():
    return [F.euclidean(2), F.round_sphere(), F.randers(2, 0.3), F.locally_minkowski(2)]


def test_01_structure_identities():
    worst = 0.0
    for fs in catalog_structures():
        rep = F.validate_structure(fs, count=64, seed=2024)
        for check in rep.checks:
            if check.name == "positive_definite":
                assert check.passed, fs.label
            else:
                worst = max(worst, check.max_residual)
    _report("01 structure-identities", worst <= 1e-10, f"max residual {worst:.3e}")


def test_02_dual_formula_identities():
    worst = 0.0
    for fs in catalog_structures():
        for pt in F.sample_points(fs, 16, seed=7):
            geo = C.base_geometry(fs, pt)
            scale_g = max(1.0, np.abs(geo.G).max())
            scale_n = max(1.0, np.abs(geo.N).max())
            scale_b = max(1.0, np.abs(geo.B).max())
            worst = max(
                worst,
                np.abs(geo.G - geo.G_euler_lagrange).max() / scale_g,
                np.abs(geo.N - geo.N_cartan).max() / scale_n,
                np.abs(geo.B - geo.B_rund).max() / scale_b,
                np.abs(geo.N - np.einsum("gam,m->ga", geo.Gamma, pt.s)).max() / scale_n,
                np.abs(2.0 * geo.G - geo.N @ pt.s).max() / scale_g,
            )
    _report("02 dual-formula-identities", worst <= 1e-8, f"max rel residual {worst:.3e}")


def test_03_rund_compatibility():
    worst = 0.0
    for fs in (F.randers(2, 0.3), F.round_sphere()):
        for pt in F.sample_points(fs, 16, seed=12):
            worst = max(
                worst,
                np.abs(C.rund_h_covariant(fs, pt, "g")).max(),
                np.abs(C.rund_h_covariant(fs, pt, "s")).max(),
                np.abs(C.rund_h_covariant(fs, pt, "F")).max(),
            )
    _report("03 rund-compatibility", worst <= 1e-8, f"max residual {worst:.3e}")


def test_04_riemannian_reduction():
    sphere = F.round_sphere()
    worst_b = worst_p = worst_r = 0.0
    for pt in F.sample_points(sphere, 16, seed=9):
        geo = C.base_geometry(sphere, pt)
        worst_b = max(worst_b, np.abs(geo.B - geo.gamma).max())
        worst_p = max(worst_p, np.abs(geo.bP).max())
        t1 = pt.t[0]
        expected = np.zeros((2, 2, 2, 2))
        expected[0, 1, 1, 0] = np.sin(t1) ** 2
        expected[0, 1, 0, 1] = -np.sin(t1) ** 2
        expected[1, 0, 0, 1] = 1.0
        expected[1, 0, 1, 0] = -1.0
        worst_r = max(worst_r, np.abs(geo.bR4 - expected).max())
    passed = worst_b <= 1e-10 and worst_p <= 1e-10 and worst_r <= 1e-8
    _report(
        "04 riemannian-reduction",
        passed,
        f"B-gamma {worst_b:.2e}, P {worst_p:.2e}, Riemann {worst_r:.2e}",
    )


def test_05_berwald_p_symmetry():
    randers = F.randers(2, 0.3)
    worst = 0.0
    for pt in F.sample_points(randers, 16, seed=13):
        _, _, pcurv = C.berwald_torsion_curvature(randers, pt)
        for perm in [(0, 1, 3, 2), (0, 2, 1, 3), (0, 3, 2, 1)]:
            worst = max(worst, np.abs(pcurv - pcurv.transpose(perm)).max())
    _report("05 berwald-p-symmetry", worst <= 1e-9, f"max residual {worst:.3e}")


def test_06_geodesics():
    eu = F.euclidean(2)
    tr = CV.integrate_autoparallel(
        eu, CV.CurveState(0.0, np.zeros(2), np.array([1.0, 1.0])), 1.0, tol=1e-8, samples=11
    )
    endpoint_err = float(np.abs(tr.positions[-1] - [1.0, 1.0]).max())

    sphere = F.round_sphere()
    tr2 = CV.integrate_autoparallel(
        sphere,
        CV.CurveState(0.0, np.array([np.pi / 2, 0.0]), np.array([0.0, 1.0])),
        2 * np.pi,
        tol=1e-8,
        samples=101,
    )
    drift_lat = float(np.abs(tr2.positions[:, 0] - np.pi / 2).max())

    randers = F.randers(2, 0.3)
    tr3 = CV.integrate_autoparallel(
        randers,
        CV.CurveState(0.0, np.array([0.1, -0.2]), np.array([0.9, 0.35])),
        1.5,
        tol=1e-8,
        samples=51,
    )
    drift_speed = float(np.abs(tr3.speeds - tr3.speeds[0]).max() / tr3.speeds[0])

    passed = endpoint_err <= 1e-9 and drift_lat <= 1e-6 and drift_speed <= 1e-5
    _report(
        "06 geodesics",
        passed,
        f"endpoint {endpoint_err:.2e}, latitude {drift_lat:.2e}, speed {drift_speed:.2e}",
    )


def test_07_affine_theorems():
    eu = F.euclidean(2)
    mink = F.locally_minkowski(2)
    c, s = float(np.cos(0.7)), float(np.sin(0.7))
    rotation = M.smooth_map(2, 2, [f"{c!r}*t1 - {s!r}*t2", f"{s!r}*t1 + {c!r}*t2"])
    pts = F.sample_points(eu, 16, seed=20)

    iso = M.isometry_check(eu, eu, rotation, pts)
    rot_affine = max(M.affine_residual(eu, eu, rotation, pt).sup for pt in pts)

    mink_pts = F.sample_points(mink, 16, seed=21)
    ident = M.identity_map(2)
    id_tau = max(M.affine_residual(eu, mink, ident, pt).sup for pt in mink_pts)
    id_tension = max(
        float(np.abs(M.tension_field(eu, mink, ident, pt)).max()) for pt in mink_pts
    )

    quad = M.smooth_map(2, 2, ["t1^2", "t2"])
    quad_tau = M.affine_residual(eu, eu, quad, F.BasePoint([1.0, 0.4], [0.8, 0.5])).tau
    quad_transport = M.autoparallel_transport_test(
        eu, eu, quad, CV.CurveState(0.0, np.array([1.0, 0.0]), np.array([1.0, 0.2])), 1.0,
        samples=11,
    ).sup_residual

    affine_transports = [
        M.autoparallel_transport_test(
            eu, eu, rotation, CV.CurveState(0.0, np.array([0.1, -0.2]), np.array([0.8, 0.5])),
            1.0, samples=11,
        ).sup_residual,
        M.autoparallel_transport_test(
            eu, mink, ident, CV.CurveState(0.0, np.zeros(2), np.array([0.9, 0.55])),
            1.0, samples=11,
        ).sup_residual,
    ]

    passed = (
        iso.max_scalar_residual <= 1e-10
        and iso.max_tensor_residual <= 1e-10
        and rot_affine <= 1e-8
        and id_tau <= 1e-10
        and id_tension <= 1e-8
        and quad_tau[0, 0, 0] == 2.0
        and quad_transport >= 1e-2
        and max(affine_transports) <= 1e-5
    )
    _report(
        "07 affine-theorems",
        passed,
        f"isometry {iso.max_scalar_residual:.2e}, rot tau {rot_affine:.2e}, "
        f"id tau {id_tau:.2e}, quad transport {quad_transport:.2e}, "
        f"affine transport {max(affine_transports):.2e}",
    )


def test_08_identity_map_criterion():
    sphere_a = F.round_sphere()
    sphere_b = F.from_expression(
        "s1^2 + (1 - cos(t1)^2)*s2^2", 2, label="sphere_rewritten",
        t_box=((0.4, np.pi - 0.4), (-np.pi, np.pi)),
    )
    ident = M.identity_map(2)
    same_tau = 0.0
    for pt in F.sample_points(sphere_a, 16, seed=30):
        same_tau = max(same_tau, M.affine_residual(sphere_a, sphere_b, ident, pt).sup)

    eu = F.euclidean(2)
    randers = F.randers(2, 0.3)
    diff_tau = 0.0
    diff_spray = 0.0
    for pt in F.sample_points(eu, 16, seed=30):
        diff_tau = max(diff_tau, M.affine_residual(eu, randers, ident, pt).sup)
        diff_spray = max(
            diff_spray,
            float(np.abs(C.base_geometry(randers, pt).G - C.base_geometry(eu, pt).G).max()),
        )
    passed = same_tau <= 1e-8 and diff_tau >= 1e-2 and diff_spray >= 1e-2
    _report(
        "08 identity-map-criterion",
        passed,
        f"equal-spray tau {same_tau:.2e}, unequal tau {diff_tau:.2e}",
    )


JET_PAIRS = [
    ("euclidean-euclidean", lambda: (F.euclidean(2), F.euclidean(2))),
    ("sphere-euclidean", lambda: (F.round_sphere(), F.euclidean(2))),
    ("randers-sphere", lambda: (F.randers(2, 0.3), F.round_sphere())),
    ("randers-randers", lambda: (F.randers(2, 0.3), F.randers(2, 0.3))),
]


def test_09_jet_cross_validation():
    worst_rel = 0.0
    euclid_abs = 0.0
    for name, make in JET_PAIRS:
        src, tgt = make()
        rep = JS.cross_validate(src, tgt, count=100, seed=42, scenario=name)
        assert rep.overall_pass, name
        worst_rel = max(worst_rel, max(b.max_rel_residual for b in rep.blocks))
        if name == "euclidean-euclidean":
            euclid_abs = max(
                max(b.max_abs_closed for b in rep.blocks),
                max(b.max_abs_general for b in rep.blocks),
            )
    passed = worst_rel <= 1e-7 and euclid_abs <= 1e-12
    _report(
        "09 jet-cross-validation",
        passed,
        f"worst rel {worst_rel:.3e}, euclid abs {euclid_abs:.3e}",
    )


def test_10_structural_identities():
    dn = np.eye(2)
    dp = np.eye(2)
    ok = True
    for name, make in (JET_PAIRS[2], JET_PAIRS[3]):
        src, tgt = make()
        for jp in JS.sample_jet_points(src, tgt, 10, seed=55):
            ctx = JS.JetContext(src, tgt, jp)
            ct = ctx.closed_torsions()
            cc = ctx.closed_curvatures()
            ok = ok and np.array_equal(ct["T1"], -ct["T1"].transpose(0, 2, 1))
            ok = ok and np.array_equal(ct["T4"], -ct["T4"].transpose(0, 1, 3, 2))
            ok = ok and np.array_equal(ct["T7"], -ct["T7"].transpose(0, 1, 3, 2))
            ok = ok and np.array_equal(ct["T14"], -ct["T14"].transpose(0, 1, 3, 2))
            ok = ok and np.array_equal(ct["T15"], -ct["T15"].transpose(0, 1, 3, 2))
            ok = ok and np.array_equal(cc["C1"], -cc["C1"].transpose(0, 1, 3, 2))
            ok = ok and np.array_equal(cc["C2"], -cc["C2"].transpose(0, 1, 3, 2))
            ok = ok and np.array_equal(
                cc["C14"], -np.einsum("li,aebg->laeibg", dn, cc["C1"])
            )
            ok = ok and np.array_equal(
                cc["C15"], -np.einsum("li,aebc->laeibc", dn, ctx.geo_s.bP)
            )
            ok = ok and np.array_equal(
                cc["C16"], np.einsum("li,aebg->laeibg", dn, ctx.geo_s.bP)
            )
            ok = ok and np.array_equal(
                cc["C20"], -np.einsum("li,adbg->ladibg", dn, cc["C1"])
            )
            ok = ok and np.array_equal(
                cc["C21"], -np.einsum("li,adbc->ladibc", dn, ctx.geo_s.bP)
            )
            ok = ok and np.array_equal(
                cc["C22"], np.einsum("li,adbg->ladibg", dn, ctx.geo_s.bP)
            )
            for lab, base, eins in (
                ("C23", "C10", "ae,libk->laeibk"),
                ("C24", "C11", "ae,libk->laeibk"),
                ("C25", "C10", "ad,libk->ladibk"),
                ("C26", "C11", "ad,libk->ladibk"),
                ("C27", "C12", "ae,lijk->laeijk"),
                ("C28", "C12", "ad,lijk->ladijk"),
                ("C29", "C13", "ae,lijkc->laeijkc"),
                ("C30", "C13", "ad,lijkc->ladijkc"),
            ):
                ok = ok and np.array_equal(cc[lab], np.einsum(eins, dp, cc[base]))
            ok = ok and np.abs(ctx.connection.m_blocks()[3]).max() == 0.0
    _report("10 structural-identities", ok)


def test_11_determinism(tmp_path):
    scenario = tmp_path / "jet.json"
    scenario.write_text(
        json.dumps(
            {
                "source": {"catalog": "randers", "params": {"dim": 2, "b": 0.3}},
                "target": {"catalog": "round_sphere"},
                "sampling": {"seed": 42, "count": 25},
            }
        )
    )
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    rc1 = cli.main(["jet-report", str(scenario), "--out", str(out1)])
    rc2 = cli.main(["jet-report", str(scenario), "--out", str(out2)])
    passed = rc1 == 0 and rc2 == 0 and out1.read_bytes() == out2.read_bytes()
    _report("11 determinism", passed)
