"""Base-manifold connection objects of a Finsler structure.

Everything here is computed per evaluation point from a single truncated
Taylor expansion of F^2 in the 2p variables (t, s); derived objects come from
series arithmetic and series derivatives, never from re-expansion, so all
extracted derivatives are mutually consistent to machine precision.

Wherever the theory provides two formulas for one object they are both
computed and compared; the derivative-of-spray path is the canonical value:

* spray: Christoffel contraction vs. the Euler-Lagrange form;
* nonlinear connection: ds-derivative of the spray vs. the Cartan formula;
* Berwald table: second ds-derivative of the spray vs. the Rund form
  (generalized Christoffel plus contracted horizontal Cartan derivative).

Array index conventions (all 0-based):

* ``g[a,b]``, ``C[a,b,c]``: lower indices;
* ``gamma[m,a,b]``, ``Gamma[m,a,b]``, ``B[m,a,b]``: upper index first;
* ``N[b,a]``: N^b_a; ``Ncol[c,a,b]``: N^c_{a:b};
* trailing axes of ``d*_dt`` / ``d*_ds`` tables are the derivative variable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from . import jets
from .config import DEFAULT_ORDER, DEFAULT_TOLERANCES, Tolerances
from .errors import CrossCheckFailure, SprayMismatch, UnsupportedVariance
from .finsler import (
    BasePoint,
    FinslerStructure,
    expand_f_squared,
    s_names,
    t_names,
)


def _rel(diff: np.ndarray, *refs: np.ndarray) -> float:
    scale = max([1.0] + [float(np.abs(r).max()) for r in refs])
    return float(np.abs(diff).max()) / scale


def _unit(n, i):
    m = [0] * n
    m[i] = 1
    return tuple(m)


@dataclass
class BaseGeometry:
    """All per-point connection data of one structure at one base point."""

    fs: FinslerStructure
    pt: BasePoint
    g: np.ndarray
    g_inv: np.ndarray
    C: np.ndarray
    C_mixed: np.ndarray
    gamma: np.ndarray
    G: np.ndarray
    G_euler_lagrange: np.ndarray
    N: np.ndarray
    N_cartan: np.ndarray
    Gamma: np.ndarray
    B: np.ndarray
    B_rund: np.ndarray
    C_h_derivative: np.ndarray  # C^g_{ab|m}
    dN_dt: np.ndarray
    dB_dt: np.ndarray
    bP: np.ndarray  # dB/ds = Berwald curvature P
    Ncol: np.ndarray
    dNcol_dt: np.ndarray
    dNcol_ds: np.ndarray
    bR3: np.ndarray  # Berwald torsion R^a_{bc}
    bR4: np.ndarray  # Berwald curvature R^a_{bcd}
    # order-1 series retained for the first-order jet lift
    B_series: list
    Ncol_series: list

    @property
    def dim(self) -> int:
        return self.fs.dim


def base_geometry(
    fs: FinslerStructure,
    pt: BasePoint,
    order: int = DEFAULT_ORDER,
    checks: bool = True,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> BaseGeometry:
    """Compute the full connection table set at one point.

    ``order`` is the truncation order of the F^2 expansion; the default of 6
    is the minimum that leaves first derivatives of the Berwald table exact.
    """
    if order < 6:
        raise ValueError("full geometry needs an order-6 expansion of F^2")
    p = fs.dim
    nv = 2 * p
    s = pt.s
    f2 = expand_f_squared(fs, pt, order)

    # fundamental tensor as a series, order K-2
    g_series = [[None] * p for _ in range(p)]
    for a in range(p):
        da = f2.derivative(p + a)
        for b in range(a, p):
            gs = da.derivative(p + b) * 0.5
            g_series[a][b] = gs
            g_series[b][a] = gs
    g0 = np.array([[g_series[a][b].value for b in range(p)] for a in range(p)])

    # t-derivatives of g, order K-3
    dgdt = [[[g_series[a][b].derivative(e) for b in range(p)] for a in range(p)] for e in range(p)]

    ord3 = order - 3
    g3 = [[g_series[a][b].truncated(ord3) for b in range(p)] for a in range(p)]
    ginv3 = jets.series_matrix_inverse(g3)
    ginv0 = np.array([[ginv3[a][b].value for b in range(p)] for a in range(p)])

    # formal Christoffel symbols, order K-3
    gamma_series = [[[None] * p for _ in range(p)] for _ in range(p)]
    for m in range(p):
        for a in range(p):
            for b in range(a, p):
                acc = None
                for e in range(p):
                    term = dgdt[b][e][a] + dgdt[a][e][b] - dgdt[e][a][b]
                    term = ginv3[m][e] * term
                    acc = term if acc is None else acc + term
                acc = acc * 0.5
                gamma_series[m][a][b] = acc
                gamma_series[m][b][a] = acc
    gamma0 = np.array(
        [[[gamma_series[m][a][b].value for b in range(p)] for a in range(p)] for m in range(p)]
    )

    # spray, order K-3
    s_lift3 = [jets.lift_variable(p + a, float(s[a]), nv, ord3) for a in range(p)]
    G_series = []
    for m in range(p):
        acc = None
        for a in range(p):
            inner = None
            for b in range(p):
                term = gamma_series[m][a][b] * s_lift3[b]
                inner = term if inner is None else inner + term
            term = inner * s_lift3[a]
            acc = term if acc is None else acc + term
        G_series.append(acc * 0.5)
    G0 = np.array([G_series[m].value for m in range(p)])

    # nonlinear connection and Berwald table by fiber differentiation
    N_series = [[G_series[b].derivative(p + a) for a in range(p)] for b in range(p)]
    N0 = np.array([[N_series[b][a].value for a in range(p)] for b in range(p)])
    B_series = [
        [[N_series[c][a].derivative(p + b) for b in range(p)] for a in range(p)] for c in range(p)
    ]
    B0 = np.array(
        [[[B_series[c][a][b].value for b in range(p)] for a in range(p)] for c in range(p)]
    )

    dN_dt = np.array(
        [[[N_series[b][a].partial(_unit(nv, e)) for e in range(p)] for a in range(p)] for b in range(p)]
    )
    dB_dt = np.empty((p, p, p, p))
    bP = np.empty((p, p, p, p))
    for c in range(p):
        for a in range(p):
            for b in range(p):
                grad = B_series[c][a][b].gradient()
                dB_dt[c, a, b, :] = grad[:p]
                bP[c, a, b, :] = grad[p:]

    # N^c_{a:b} = dN^c_a/dt^b + N^d_a B^c_{db} - N^c_g B^g_{ab}, kept at order 1
    N1 = [[N_series[b][a].truncated(1) for a in range(p)] for b in range(p)]
    Ncol_series = [[[None] * p for _ in range(p)] for _ in range(p)]
    for c in range(p):
        for a in range(p):
            for b in range(p):
                acc = N_series[c][a].derivative(b).truncated(1)
                for d in range(p):
                    acc = acc + N1[d][a] * B_series[c][d][b]
                for gidx in range(p):
                    acc = acc - N1[c][gidx] * B_series[gidx][a][b]
                Ncol_series[c][a][b] = acc
    Ncol = np.array(
        [[[Ncol_series[c][a][b].value for b in range(p)] for a in range(p)] for c in range(p)]
    )
    dNcol_dt = np.empty((p, p, p, p))
    dNcol_ds = np.empty((p, p, p, p))
    for c in range(p):
        for a in range(p):
            for b in range(p):
                grad = Ncol_series[c][a][b].gradient()
                dNcol_dt[c, a, b, :] = grad[:p]
                dNcol_ds[c, a, b, :] = grad[p:]

    # Berwald torsion: adapted antisymmetrized t-derivative of N
    # delta N^a_b / delta t^e = dN/dt - N^m_e * dN/ds^m with dN/ds = B
    deltaN = dN_dt - np.einsum("me,abm->abe", N0, B0)
    bR3 = deltaN - deltaN.transpose(0, 2, 1)

    # Berwald curvature R^a_{bge} = deltaB^a_{bg}/dt^e - (g<->e) + B^m_{bg}B^a_{me} - (g<->e)
    deltaB = dB_dt - np.einsum("me,cabm->cabe", N0, bP)
    term = deltaB + np.einsum("mbg,ame->abge", B0, B0)
    bR4 = term - term.transpose(0, 1, 3, 2)

    # Cartan tensor values and series (C = dg/ds / 2), mixed form at order 1
    C_series1 = [
        [[g_series[a][b].derivative(p + c).truncated(1) * 0.5 for c in range(p)] for b in range(p)]
        for a in range(p)
    ]
    C0 = np.array(
        [[[C_series1[a][b][c].value for c in range(p)] for b in range(p)] for a in range(p)]
    )
    ginv1 = [[ginv3[a][b].truncated(1) for b in range(p)] for a in range(p)]
    Cmix_series = [[[None] * p for _ in range(p)] for _ in range(p)]
    for b in range(p):
        for a in range(p):
            for d in range(p):
                acc = None
                for l in range(p):
                    term = ginv1[b][l] * C_series1[l][a][d]
                    acc = term if acc is None else acc + term
                Cmix_series[b][a][d] = acc
    Cmix0 = np.array(
        [[[Cmix_series[b][a][d].value for d in range(p)] for a in range(p)] for b in range(p)]
    )
    dCmix_dt = np.empty((p, p, p, p))
    dCmix_ds = np.empty((p, p, p, p))
    for b in range(p):
        for a in range(p):
            for d in range(p):
                grad = Cmix_series[b][a][d].gradient()
                dCmix_dt[b, a, d, :] = grad[:p]
                dCmix_ds[b, a, d, :] = grad[p:]

    # generalized Christoffel symbols from adapted derivatives of g
    dgdt0 = np.array(
        [[[dgdt[e][a][b].value for b in range(p)] for a in range(p)] for e in range(p)]
    )
    # delta g_{ab}/delta t^e = dg/dt^e - N^m_e dg_{ab}/ds^m, with dg/ds = 2C
    delta_g = dgdt0.transpose(1, 2, 0) - 2.0 * np.einsum("me,abm->abe", N0, C0)
    Gamma0 = np.empty((p, p, p))
    for gidx in range(p):
        for a in range(p):
            for b in range(p):
                acc = 0.0
                for m in range(p):
                    acc += ginv0[gidx, m] * (
                        delta_g[m, a, b] + delta_g[m, b, a] - delta_g[a, b, m]
                    )
                Gamma0[gidx, a, b] = 0.5 * acc

    # Rund horizontal covariant derivative of the mixed Cartan tensor
    delta_Cmix = dCmix_dt - np.einsum("me,gabm->gabe", N0, dCmix_ds)
    C_h = (
        delta_Cmix
        + np.einsum("eab,gem->gabm", Cmix0, Gamma0)
        - np.einsum("geb,eam->gabm", Cmix0, Gamma0)
        - np.einsum("gae,ebm->gabm", Cmix0, Gamma0)
    )
    B_rund = Gamma0 + np.einsum("gabm,m->gab", C_h, s)

    # dual-formula values
    # Euler-Lagrange spray: G^g = g^{gm}/4 [ d2F2/ds^m dt^v s^v - dF2/dt^m ]
    G_el = np.empty(p)
    for gidx in range(p):
        acc = 0.0
        for m in range(p):
            inner = 0.0
            for v in range(p):
                mi = [0] * nv
                mi[p + m] += 1
                mi[v] += 1
                inner += f2.partial(tuple(mi)) * s[v]
            inner -= f2.partial(_unit(nv, m))
            acc += ginv0[gidx, m] * inner
        G_el[gidx] = 0.25 * acc

    # Cartan nonlinear connection: N^b_a = gamma^b_{ae} s^e - C^b_{ae} gamma^e_{mv} s^m s^v
    gss = np.einsum("emv,m,v->e", gamma0, s, s)
    N_cartan = np.einsum("bae,e->ba", gamma0, s) - np.einsum("bae,e->ba", Cmix0, gss)

    geo = BaseGeometry(
        fs=fs,
        pt=pt,
        g=g0,
        g_inv=ginv0,
        C=C0,
        C_mixed=Cmix0,
        gamma=gamma0,
        G=G0,
        G_euler_lagrange=G_el,
        N=N0,
        N_cartan=N_cartan,
        Gamma=Gamma0,
        B=B0,
        B_rund=B_rund,
        C_h_derivative=C_h,
        dN_dt=dN_dt,
        dB_dt=dB_dt,
        bP=bP,
        Ncol=Ncol,
        dNcol_dt=dNcol_dt,
        dNcol_ds=dNcol_ds,
        bR3=bR3,
        bR4=bR4,
        B_series=B_series,
        Ncol_series=Ncol_series,
    )
    if checks:
        _run_cross_checks(geo, tol)
    return geo


def _run_cross_checks(geo: BaseGeometry, tol: Tolerances) -> None:
    s = geo.pt.s
    r = _rel(geo.G - geo.G_euler_lagrange, geo.G, geo.G_euler_lagrange)
    if r > tol.spray_mismatch:
        raise SprayMismatch(f"spray formulas disagree: rel {r:.3e} at {geo.pt!r}")
    r = _rel(geo.N - geo.N_cartan, geo.N, geo.N_cartan)
    if r > tol.nlc_crosscheck:
        raise CrossCheckFailure(f"nonlinear connection formulas disagree: rel {r:.3e}")
    r = _rel(geo.B - geo.B_rund, geo.B, geo.B_rund)
    if r > tol.berwald_crosscheck:
        raise CrossCheckFailure(f"Berwald formulas disagree: rel {r:.3e}")
    r = _rel(geo.N - np.einsum("gam,m->ga", geo.Gamma, s), geo.N)
    if r > tol.nlc_crosscheck:
        raise CrossCheckFailure(f"N != Gamma.s: rel {r:.3e}")
    r = _rel(2.0 * geo.G - geo.N @ s, geo.G)
    if r > tol.nlc_crosscheck:
        raise CrossCheckFailure(f"2G != N.s: rel {r:.3e}")


# -- public per-object operations ----------------------------------------------


def formal_christoffel(fs: FinslerStructure, pt: BasePoint) -> np.ndarray:
    """gamma^m_{ab} built from plain t-derivatives of the fundamental tensor."""
    return base_geometry(fs, pt).gamma


def spray(fs: FinslerStructure, pt: BasePoint) -> np.ndarray:
    """Spray coefficients; the two defining formulas are cross-checked."""
    return base_geometry(fs, pt).G


def nonlinear_cartan(fs: FinslerStructure, pt: BasePoint) -> np.ndarray:
    """N^b_a, canonical value from dG/ds, checked against the Cartan formula."""
    return base_geometry(fs, pt).N


def generalized_christoffel(fs: FinslerStructure, pt: BasePoint) -> np.ndarray:
    """Gamma^g_{ab} built from adapted (delta/delta t) derivatives of g."""
    return base_geometry(fs, pt).Gamma


def berwald_coeffs(fs: FinslerStructure, pt: BasePoint) -> np.ndarray:
    """Berwald table B^g_{ab}, canonical value from d2G/ds2."""
    return base_geometry(fs, pt).B


def berwald_torsion_curvature(fs: FinslerStructure, pt: BasePoint):
    """The Berwald torsion R^a_{bc} and curvatures R^a_{bcd}, P^a_{bcd}."""
    geo = base_geometry(fs, pt)
    return geo.bR3, geo.bR4, geo.bP


# -- fast paths for curve integration --------------------------------------------


def spray_values(fs: FinslerStructure, pt: BasePoint) -> np.ndarray:
    """Spray values only, from an order-3 expansion (integration hot path)."""
    p = fs.dim
    nv = 2 * p
    f2 = expand_f_squared(fs, pt, 3)
    g0 = np.empty((p, p))
    dgdt0 = np.empty((p, p, p))  # [e,a,b] = dg_ab/dt^e
    for a in range(p):
        for b in range(a, p):
            m = [0] * nv
            m[p + a] += 1
            m[p + b] += 1
            g0[a, b] = g0[b, a] = 0.5 * f2.partial(tuple(m))
            for e in range(p):
                me = list(m)
                me[e] += 1
                v = 0.5 * f2.partial(tuple(me))
                dgdt0[e, a, b] = dgdt0[e, b, a] = v
    ginv0 = np.linalg.inv(g0)
    # term_e,a,b = dg_ea/dt^b + dg_eb/dt^a - dg_ab/dt^e
    term = np.empty((p, p, p))
    for e in range(p):
        for a in range(p):
            for b in range(p):
                term[e, a, b] = dgdt0[b, e, a] + dgdt0[a, e, b] - dgdt0[e, a, b]
    gamma0 = 0.5 * np.einsum("me,eab->mab", ginv0, term)
    return 0.5 * np.einsum("mab,a,b->m", gamma0, pt.s, pt.s)


def nlc_values(fs: FinslerStructure, pt: BasePoint):
    """(N, G) values from an order-4 expansion (cheap validation path)."""
    p = fs.dim
    f2 = expand_f_squared(fs, pt, 4)
    g_series = [[None] * p for _ in range(p)]
    for a in range(p):
        da = f2.derivative(p + a)
        for b in range(a, p):
            gs = da.derivative(p + b) * 0.5
            g_series[a][b] = gs
            g_series[b][a] = gs
    g1 = [[g_series[a][b].truncated(1) for b in range(p)] for a in range(p)]
    ginv1 = jets.series_matrix_inverse(g1)
    s_lift = [jets.lift_variable(p + a, float(pt.s[a]), 2 * p, 1) for a in range(p)]
    gamma1 = [[[None] * p for _ in range(p)] for _ in range(p)]
    dgdt1 = [
        [[g_series[a][b].derivative(e).truncated(1) for b in range(p)] for a in range(p)]
        for e in range(p)
    ]
    for m in range(p):
        for a in range(p):
            for b in range(a, p):
                acc = None
                for e in range(p):
                    term = ginv1[m][e] * (dgdt1[b][e][a] + dgdt1[a][e][b] - dgdt1[e][a][b])
                    acc = term if acc is None else acc + term
                acc = acc * 0.5
                gamma1[m][a][b] = acc
                gamma1[m][b][a] = acc
    G_series = []
    for m in range(p):
        acc = None
        for a in range(p):
            inner = None
            for b in range(p):
                term = gamma1[m][a][b] * s_lift[b]
                inner = term if inner is None else inner + term
            term = inner * s_lift[a]
            acc = term if acc is None else acc + term
        G_series.append(acc * 0.5)
    G0 = np.array([gs.value for gs in G_series])
    N0 = np.array([[G_series[b].partial(_unit(2 * p, p + a)) for a in range(p)] for b in range(p)])
    return N0, G0


# -- Rund horizontal covariant derivative ------------------------------------------


def rund_h_covariant(fs: FinslerStructure, pt: BasePoint, field_spec) -> np.ndarray:
    """Horizontal covariant derivative of a built-in or user scalar field.

    ``field_spec`` is one of the strings ``"g"``, ``"s"``, ``"F"``, ``"C"``
    (the mixed Cartan tensor) or a parsed scalar expression in (t, s).
    """
    geo = base_geometry(fs, pt)
    p = fs.dim
    s = pt.s
    if isinstance(field_spec, str):
        if field_spec == "g":
            dgdt0 = np.empty((p, p, p))
            f2 = expand_f_squared(fs, pt, 3)
            for a in range(p):
                for b in range(a, p):
                    for e in range(p):
                        m = [0] * (2 * p)
                        m[p + a] += 1
                        m[p + b] += 1
                        m[e] += 1
                        dgdt0[e, a, b] = dgdt0[e, b, a] = 0.5 * f2.partial(tuple(m))
            delta_g = dgdt0.transpose(1, 2, 0) - 2.0 * np.einsum("me,abm->abe", geo.N, geo.C)
            return (
                delta_g
                - np.einsum("mb,mag->abg", geo.g, geo.Gamma)
                - np.einsum("am,mbg->abg", geo.g, geo.Gamma)
            )
        if field_spec == "s":
            return -geo.N.copy() + np.einsum("m,amg->ag", s, geo.Gamma)
        if field_spec == "F":
            f2 = expand_f_squared(fs, pt, 1)
            grad = f2.gradient()
            f_val = np.sqrt(f2.value)
            delta_f2 = grad[:p] - geo.N.T @ grad[p:]
            return delta_f2 / (2.0 * f_val)
        if field_spec == "C":
            return geo.C_h_derivative
        raise UnsupportedVariance(f"unknown built-in field {field_spec!r}")
    # user scalar expression in (t, s)
    bindings = {}
    for i, name in enumerate(t_names(p)):
        bindings[name] = jets.lift_variable(i, float(pt.t[i]), 2 * p, 1)
    for i, name in enumerate(s_names(p)):
        bindings[name] = jets.lift_variable(p + i, float(pt.s[i]), 2 * p, 1)
    val = ex.eval_taylor(field_spec, bindings)
    grad = val.gradient()
    return grad[:p] - geo.N.T @ grad[p:]
