"""Smooth maps between Finsler structures.

A map is given by component expressions in the source base coordinates
``t1..tp``.  Target-side geometry is always evaluated at the pushed fiber
point (phi(t), dphi(s)), obtained by expanding the target squared norm in its
own (x, y) variables around that point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from . import jets
from .config import DEFAULT_TOLERANCES, Tolerances
from .connection import base_geometry, nlc_values
from .curves import CurveState, GeodesicTrace, integrate_autoparallel
from .errors import DimensionMismatch, SingularJacobian, TargetZeroSection
from .finsler import BasePoint, FinslerStructure, f_value, t_names


@dataclass(frozen=True)
class SmoothMap:
    source_dim: int
    target_dim: int
    components: tuple  # target_dim expressions in t1..tp

    def __post_init__(self):
        if len(self.components) != self.target_dim:
            raise DimensionMismatch("component count must equal target_dim")
        allowed = set(t_names(self.source_dim))
        for comp in self.components:
            used = ex.variables(comp)
            if not used <= allowed:
                raise ValueError(f"map component uses non-base variables {sorted(used - allowed)}")


def smooth_map(source_dim: int, target_dim: int, texts: Sequence[str]) -> SmoothMap:
    comps = tuple(ex.parse(text, t_names(source_dim)) for text in texts)
    return SmoothMap(source_dim, target_dim, comps)


def identity_map(dim: int) -> SmoothMap:
    return smooth_map(dim, dim, t_names(dim))


@dataclass
class MapDifferentials:
    value: np.ndarray  # (n,)   phi^i
    jacobian: np.ndarray  # (n, p) phi^i_a
    hessian: np.ndarray  # (n, p, p) phi^i_{ab}
    pushed: BasePoint  # (phi(t), dphi(s)) on the target bundle


def map_differentials(
    m: SmoothMap,
    pt: BasePoint,
    tol: Tolerances = DEFAULT_TOLERANCES,
    require_push: bool = True,
) -> MapDifferentials:
    """Value, Jacobian and Hessian of the map plus the pushed fiber point."""
    p, n = m.source_dim, m.target_dim
    bindings = {
        name: jets.lift_variable(i, float(pt.t[i]), p, 2) for i, name in enumerate(t_names(p))
    }
    value = np.empty(n)
    jac = np.empty((n, p))
    hess = np.empty((n, p, p))
    for i, comp in enumerate(m.components):
        tv = ex.eval_taylor(comp, bindings)
        value[i] = tv.value
        for a in range(p):
            mi = [0] * p
            mi[a] = 1
            jac[i, a] = tv.partial(tuple(mi))
            for b in range(a, p):
                mj = [0] * p
                mj[a] += 1
                mj[b] += 1
                hess[i, a, b] = hess[i, b, a] = tv.partial(tuple(mj))
    pushed_s = jac @ pt.s
    if require_push and float(np.linalg.norm(pushed_s)) < tol.epsilon_zero_section:
        raise TargetZeroSection(f"dphi(s) = {pushed_s!r} is on the target zero section")
    return MapDifferentials(value, jac, hess, BasePoint(value, pushed_s))


@dataclass
class NondegeneracyReport:
    smallest_singular_values: np.ndarray
    passed: bool


def nondegeneracy_check(
    m: SmoothMap,
    pts: Sequence[BasePoint],
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> NondegeneracyReport:
    """Smallest Jacobian singular value per point; Ker(dphi) = 0 as a rank proxy."""
    if m.source_dim > m.target_dim:
        raise DimensionMismatch("nondegeneracy requires source_dim <= target_dim")
    sigmas = np.empty(len(pts))
    for k, pt in enumerate(pts):
        d = map_differentials(m, pt, require_push=False)
        sigmas[k] = np.linalg.svd(d.jacobian, compute_uv=False).min()
    return NondegeneracyReport(sigmas, bool(sigmas.min() >= tol.sigma_min))


@dataclass
class AffineResidual:
    tau: np.ndarray  # (n, p, p), symmetric in the lower pair
    sup: float

    @property
    def is_affine(self) -> bool:
        return self.sup <= DEFAULT_TOLERANCES.affine_declare


def affine_residual(
    src: FinslerStructure,
    tgt: FinslerStructure,
    m: SmoothMap,
    pt: BasePoint,
) -> AffineResidual:
    """tau^i_{ab} = phi^i_{ab} - B^g_{ab} phi^i_g + Btilde^i_{jk} phi^j_a phi^k_b.

    The target Berwald table is evaluated at the pushed point
    (phi(t), dphi(s)).
    """
    d = map_differentials(m, pt)
    b_src = base_geometry(src, pt).B
    b_tgt = base_geometry(tgt, d.pushed).B
    tau = (
        d.hessian
        - np.einsum("gab,ig->iab", b_src, d.jacobian)
        + np.einsum("ijk,ja,kb->iab", b_tgt, d.jacobian, d.jacobian)
    )
    return AffineResidual(tau, float(np.abs(tau).max()))


@dataclass
class IsometryReport:
    max_scalar_residual: float
    max_tensor_residual: float
    passed: bool


def isometry_check(
    src: FinslerStructure,
    tgt: FinslerStructure,
    m: SmoothMap,
    pts: Sequence[BasePoint],
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> IsometryReport:
    """Check F(t,s) = Ftilde(phi(t), dphi(s)) and the pullback of gtilde."""
    if m.source_dim != m.target_dim:
        raise DimensionMismatch("an isometry requires equal dimensions")
    from .finsler import metric_tensor

    worst_scalar = 0.0
    worst_tensor = 0.0
    for pt in pts:
        d = map_differentials(m, pt)
        if abs(np.linalg.det(d.jacobian)) < tol.sigma_min:
            raise SingularJacobian(f"Jacobian singular at {pt!r}")
        f_src = f_value(src, pt)
        f_tgt = f_value(tgt, d.pushed)
        worst_scalar = max(worst_scalar, abs(f_src - f_tgt) / max(1.0, f_src))
        g_src = metric_tensor(src, pt)
        g_tgt = metric_tensor(tgt, d.pushed)
        pulled = d.jacobian.T @ g_tgt @ d.jacobian
        worst_tensor = max(worst_tensor, float(np.abs(g_src - pulled).max()))
    passed = worst_scalar <= tol.isometry_residual and worst_tensor <= tol.isometry_residual
    return IsometryReport(worst_scalar, worst_tensor, passed)


def _cartan_y_derivative(tgt: FinslerStructure, pushed: BasePoint) -> np.ndarray:
    """dCtilde_{jkl}/dy^m as a (j,k,l,m) array: quarter of the 4th y-derivative."""
    n = tgt.dim
    from .finsler import expand_f_squared

    f2 = expand_f_squared(tgt, pushed, 4)
    out = np.empty((n, n, n, n))
    for j in range(n):
        for k in range(n):
            for l in range(n):
                for mm in range(n):
                    mi = [0] * (2 * n)
                    for idx in (j, k, l, mm):
                        mi[n + idx] += 1
                    out[j, k, l, mm] = 0.25 * f2.partial(tuple(mi))
    return out


def tension_field(
    src: FinslerStructure,
    tgt: FinslerStructure,
    m: SmoothMap,
    pt: BasePoint,
    tol: Tolerances = DEFAULT_TOLERANCES,
    crosscheck: bool = True,
) -> np.ndarray:
    """Tension field components of the map at a point.

    Canonical value: the residual-contracted form
    tau^i = g^{ab} tau^i_{ab} + 4 g^{ab} Ctilde^i_{jk} phi^k_a tau^j_{bg} s^g
          + g^{ab} Ctilde^i_{jkl} phi^k_a phi^l_b tau^j_{ge} s^g s^e,
    cross-checked against the expanded three-term form in which the second
    and third braces carry the generalized Christoffel symbols.
    """
    d = map_differentials(m, pt)
    geo_s = base_geometry(src, pt)
    geo_t = base_geometry(tgt, d.pushed)
    tau2 = affine_residual(src, tgt, m, pt).tau
    s = pt.s
    g_inv = geo_s.g_inv
    c_mix_t = geo_t.C_mixed  # Ctilde^i_{jk}
    # Ctilde^i_{jkl} = gtilde^{im} dCtilde_{jkl}/dy^m, literally as printed
    c4 = np.einsum("im,jklm->ijkl", geo_t.g_inv, _cartan_y_derivative(tgt, d.pushed))

    tension = (
        np.einsum("ab,iab->i", g_inv, tau2)
        + 4.0 * np.einsum("ab,ijk,ka,jbg,g->i", g_inv, c_mix_t, d.jacobian, tau2, s)
        + np.einsum("ab,ijkl,ka,lb,jge,g,e->i", g_inv, c4, d.jacobian, d.jacobian, tau2, s, s)
    )
    if crosscheck:
        # expanded form: braces built from the Gamma tables on both sides
        brace = (
            d.hessian
            - np.einsum("mab,im->iab", geo_s.Gamma, d.jacobian)
            + np.einsum("ipq,pa,qb->iab", geo_t.Gamma, d.jacobian, d.jacobian)
        )
        full = (
            np.einsum("ab,iab->i", g_inv, tau2)
            + 4.0 * np.einsum("ab,ijk,ka,jbg,g->i", g_inv, c_mix_t, d.jacobian, brace, s)
            + np.einsum("ab,ijkl,ka,lb,jge,g,e->i", g_inv, c4, d.jacobian, d.jacobian, brace, s, s)
        )
        diff = float(np.abs(tension - full).max()) / max(1.0, float(np.abs(tension).max()))
        if diff > tol.tension_crosscheck:
            from .errors import CrossCheckFailure

            raise CrossCheckFailure(f"tension-field forms disagree: rel {diff:.3e}")
    return tension


@dataclass
class TransportReport:
    sup_residual: float
    trace: GeodesicTrace
    image_positions: np.ndarray
    passed: bool


def autoparallel_transport_test(
    src: FinslerStructure,
    tgt: FinslerStructure,
    m: SmoothMap,
    initial: CurveState,
    t_final: float,
    tol: float = DEFAULT_TOLERANCES.ode_tol,
    samples: int = 25,
    residual_bound: float | None = None,
) -> TransportReport:
    """Integrate a source autoparallel and measure the image-curve residual.

    Along the image x(t) = phi(c(t)) the exact second derivative is
    phi_{ab} v^a v^b + phi_m acc^m, so the target residual
    d2x/dt2 + Ntilde(x, xdot) xdot is assembled without finite differences.
    """
    trace = integrate_autoparallel(src, initial, t_final, tol=tol, samples=samples)
    worst = 0.0
    images = np.empty((len(trace.times), m.target_dim))
    for k in range(len(trace.times)):
        pos, vel = trace.positions[k], trace.velocities[k]
        d = map_differentials(m, BasePoint(pos, vel))
        images[k] = d.value
        acc_src = -base_geometry(src, BasePoint(pos, vel)).N @ vel
        x_dot = d.jacobian @ vel
        x_ddot = np.einsum("iab,a,b->i", d.hessian, vel, vel) + d.jacobian @ acc_src
        n_tgt, _ = nlc_values(tgt, BasePoint(d.value, x_dot))
        resid = x_ddot + n_tgt @ x_dot
        worst = max(worst, float(np.abs(resid).max()))
    bound = residual_bound if residual_bound is not None else 10.0 * tol
    return TransportReport(worst, trace, images, worst <= bound)
