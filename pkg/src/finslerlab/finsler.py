"""Finsler structures and the level-0 tensors (fundamental and Cartan).

Coordinates follow the convention used throughout the library: base
coordinates ``t1..tp`` and fiber coordinates ``s1..sp`` on the source, and
``x1..xn`` / ``y1..yn`` on a target structure.  Internally both are treated
uniformly as (t, s); the variable spelling only matters when parsing
user-supplied expressions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from . import jets
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import NotPositiveDefinite, SingularMetric, ZeroSection


def t_names(dim: int) -> list[str]:
    return [f"t{i + 1}" for i in range(dim)]


def s_names(dim: int) -> list[str]:
    return [f"s{i + 1}" for i in range(dim)]


def x_names(dim: int) -> list[str]:
    return [f"x{i + 1}" for i in range(dim)]


def y_names(dim: int) -> list[str]:
    return [f"y{i + 1}" for i in range(dim)]


class BasePoint:
    """A point of TM minus the zero section: base t and nonzero fiber s."""

    __slots__ = ("t", "s")

    def __init__(self, t, s):
        self.t = np.asarray(t, dtype=float)
        self.s = np.asarray(s, dtype=float)
        if self.t.shape != self.s.shape or self.t.ndim != 1:
            raise ValueError("t and s must be 1-d arrays of equal length")

    def __repr__(self):
        return f"BasePoint(t={self.t.tolist()}, s={self.s.tolist()})"


@dataclass(frozen=True)
class FinslerStructure:
    """Dimension + expression for F^2 + sampling domain."""

    dim: int
    f_squared: ex.Expr
    label: str = "structure"
    # per-coordinate sampling boxes, shape (dim, 2)
    t_box: tuple = ()
    s_box: tuple = ()
    # minimum fiber norm accepted when sampling (looser guard than the hard
    # zero-section epsilon, keeps samples numerically comfortable)
    s_sample_min_norm: float = 0.3

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.t_box:
            object.__setattr__(self, "t_box", tuple((-1.5, 1.5) for _ in range(self.dim)))
        if not self.s_box:
            object.__setattr__(self, "s_box", tuple((-1.5, 1.5) for _ in range(self.dim)))
        names = set(t_names(self.dim) + s_names(self.dim))
        used = ex.variables(self.f_squared)
        if not used <= names:
            raise ValueError(f"expression uses undeclared variables {sorted(used - names)}")

    def contains(self, t: np.ndarray, s: np.ndarray) -> bool:
        """Whether (t, s) lies inside the declared sampling domain."""
        for v, (lo, hi) in zip(t, self.t_box):
            if not lo <= v <= hi:
                return False
        for v, (lo, hi) in zip(s, self.s_box):
            if not lo <= v <= hi:
                return False
        return float(np.linalg.norm(s)) >= self.s_sample_min_norm


def check_base_point(fs: FinslerStructure, pt: BasePoint, tol: Tolerances = DEFAULT_TOLERANCES):
    if pt.t.shape[0] != fs.dim:
        raise ValueError(f"point dimension {pt.t.shape[0]} != structure dimension {fs.dim}")
    if float(np.linalg.norm(pt.s)) < tol.epsilon_zero_section:
        raise ZeroSection(f"||s|| = {np.linalg.norm(pt.s)!r} is on the zero section")


def expand_f_squared(fs: FinslerStructure, pt: BasePoint, order: int) -> jets.TaylorValue:
    """Taylor expansion of F^2 in the 2p variables (t, s) around the point."""
    check_base_point(fs, pt)
    p = fs.dim
    bindings = {}
    for i, name in enumerate(t_names(p)):
        bindings[name] = jets.lift_variable(i, float(pt.t[i]), 2 * p, order)
    for i, name in enumerate(s_names(p)):
        bindings[name] = jets.lift_variable(p + i, float(pt.s[i]), 2 * p, order)
    return ex.eval_taylor(fs.f_squared, bindings)


def f_value(fs: FinslerStructure, pt: BasePoint) -> float:
    """F(t, s) = sqrt of the squared norm at the point."""
    val = f_squared_value(fs, pt)
    if val < 0:
        raise ValueError(f"F^2 negative ({val!r}) at {pt!r}")
    return float(np.sqrt(val))


def f_squared_value(fs: FinslerStructure, pt: BasePoint) -> float:
    bindings = {}
    for i, name in enumerate(t_names(fs.dim)):
        bindings[name] = float(pt.t[i])
    for i, name in enumerate(s_names(fs.dim)):
        bindings[name] = float(pt.s[i])
    return float(ex.eval_plain(fs.f_squared, bindings))


def _unit(p, i, j):
    m = [0] * p
    m[i] += 1
    m[j] += 1
    return tuple(m)


def metric_tensor(fs: FinslerStructure, pt: BasePoint, check_definite: bool = False) -> np.ndarray:
    """Fundamental tensor: half the fiber Hessian of F^2."""
    p = fs.dim
    f2 = expand_f_squared(fs, pt, 2)
    g = np.empty((p, p))
    for a in range(p):
        for b in range(a, p):
            g[a, b] = g[b, a] = 0.5 * f2.partial(_unit(2 * p, p + a, p + b))
    if check_definite:
        w = np.linalg.eigvalsh(g)
        if w.min() < DEFAULT_TOLERANCES.pos_def_min_eig:
            raise NotPositiveDefinite(f"min eigenvalue {w.min()!r} at {pt!r}")
    return g


def metric_inverse(g: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.inv(g)
    except np.linalg.LinAlgError as err:
        raise SingularMetric(str(err)) from err


def cartan_tensor(fs: FinslerStructure, pt: BasePoint) -> np.ndarray:
    """Cartan tensor: quarter of the third fiber derivative of F^2."""
    p = fs.dim
    f2 = expand_f_squared(fs, pt, 3)
    c = np.empty((p, p, p))
    for a in range(p):
        for b in range(a, p):
            for d in range(b, p):
                m = [0] * (2 * p)
                m[p + a] += 1
                m[p + b] += 1
                m[p + d] += 1
                v = 0.25 * f2.partial(tuple(m))
                for idx in {(a, b, d), (a, d, b), (b, a, d), (b, d, a), (d, a, b), (d, b, a)}:
                    c[idx] = v
    return c


def cartan_tensor_mixed(fs: FinslerStructure, pt: BasePoint) -> np.ndarray:
    """Index-raised Cartan tensor C^b_{ad} = g^{bl} C_{lad}."""
    g = metric_tensor(fs, pt)
    c = cartan_tensor(fs, pt)
    return np.einsum("bl,lad->bad", metric_inverse(g), c)


# -- sampling -----------------------------------------------------------------


def sample_points(fs: FinslerStructure, count: int, seed: int) -> list[BasePoint]:
    """Deterministic points inside the structure's domain boxes."""
    rng = np.random.default_rng(seed)
    pts = []
    t_box = np.asarray(fs.t_box)
    s_box = np.asarray(fs.s_box)
    attempts = 0
    while len(pts) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise RuntimeError(f"could not sample {count} domain points for {fs.label}")
        t = rng.uniform(t_box[:, 0], t_box[:, 1])
        s = rng.uniform(s_box[:, 0], s_box[:, 1])
        if fs.contains(t, s):
            pts.append(BasePoint(t, s))
    return pts


# -- validation -----------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_residual: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    label: str
    checks: tuple
    passed: bool

    def residual(self, name: str) -> float:
        for c in self.checks:
            if c.name == name:
                return c.max_residual
        raise KeyError(name)


def validate_structure(
    fs: FinslerStructure,
    count: int = 64,
    seed: int = 2024,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ValidationReport:
    """Run the defining identities of a Finsler structure on sampled points.

    Checks: 2-homogeneity of F^2, the Euler identity F^2 = g.s.s, the Cartan
    contractions C.s = 0, 0-homogeneity of g, and positive definiteness.
    """
    pts = sample_points(fs, count, seed)
    p = fs.dim

    hom_worst = 0.0
    euler_worst = 0.0
    cartan_worst = 0.0
    ghom_worst = 0.0
    min_eig = np.inf
    min_f2 = np.inf
    for pt in pts:
        f2 = f_squared_value(fs, pt)
        min_f2 = min(min_f2, f2)
        g = metric_tensor(fs, pt)
        c = cartan_tensor(fs, pt)
        scale = max(1.0, abs(f2))
        for lam in (0.5, 2.0, 7.0):
            scaled = f_squared_value(fs, BasePoint(pt.t, lam * pt.s))
            hom_worst = max(hom_worst, abs(scaled - lam**2 * f2) / scale)
            g_scaled = metric_tensor(fs, BasePoint(pt.t, lam * pt.s))
            ghom_worst = max(ghom_worst, float(np.abs(g_scaled - g).max()))
        euler_worst = max(euler_worst, abs(f2 - float(pt.s @ g @ pt.s)) / scale)
        cartan_worst = max(cartan_worst, float(np.abs(np.einsum("abm,m->ab", c, pt.s)).max()))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(g).min()))

    checks = (
        CheckResult(
            "f2_positive",
            -min(min_f2, 0.0),
            min_f2 > 0.0,
            detail=f"min F^2 {min_f2:.3e}",
        ),
        CheckResult("f2_homogeneity", hom_worst, hom_worst <= tol.structure_residual),
        CheckResult("euler_identity", euler_worst, euler_worst <= tol.structure_residual),
        CheckResult("cartan_contraction", cartan_worst, cartan_worst <= tol.structure_residual),
        CheckResult("g_homogeneity", ghom_worst, ghom_worst <= tol.structure_residual),
        CheckResult(
            "positive_definite",
            -min(min_eig, 0.0),
            min_eig >= tol.pos_def_min_eig,
            detail=f"min eigenvalue {min_eig:.3e}",
        ),
    )
    return ValidationReport(fs.label, checks, all(c.passed for c in checks))


# -- catalog -----------------------------------------------------------------


def euclidean(dim: int = 2) -> FinslerStructure:
    text = " + ".join(f"s{i + 1}^2" for i in range(dim))
    return FinslerStructure(
        dim, ex.parse(text, s_names(dim)), label=f"euclidean{dim}"
    )


def riemannian(entries: Sequence[Sequence[str]], label: str = "riemannian") -> FinslerStructure:
    """Quadratic structure F^2 = g_ab(t) s^a s^b from expression entries."""
    dim = len(entries)
    terms = []
    for a in range(dim):
        for b in range(dim):
            if entries[a][b].strip() == "0":
                continue
            terms.append(f"({entries[a][b]})*s{a + 1}*s{b + 1}")
    text = " + ".join(terms)
    return FinslerStructure(dim, ex.parse(text, t_names(dim) + s_names(dim)), label=label)


def round_sphere() -> FinslerStructure:
    """Round 2-sphere metric diag(1, sin(t1)^2) away from the poles."""
    fs = riemannian([["1", "0"], ["0", "sin(t1)^2"]], label="round_sphere")
    return FinslerStructure(
        2,
        fs.f_squared,
        label="round_sphere",
        t_box=((0.4, np.pi - 0.4), (-np.pi, np.pi)),
    )


def randers(dim: int = 2, b: float = 0.3) -> FinslerStructure:
    """Randers structure F = |s| + b cos(t1) s1 with flat underlying metric.

    The covector is position dependent so that the structure has a genuinely
    nonvanishing spray; for |b| < 1 its norm stays below 1, which keeps the
    fundamental tensor positive definite.  Larger values are accepted here
    and rejected by ``validate_structure`` at sampled points.
    """
    q = " + ".join(f"s{i + 1}^2" for i in range(dim))
    text = f"(sqrt({q}) + {b!r}*cos(t1)*s1)^2"
    return FinslerStructure(
        dim, ex.parse(text, t_names(dim) + s_names(dim)), label=f"randers_b{b}"
    )


def locally_minkowski(dim: int = 2) -> FinslerStructure:
    """Quartic Minkowski structure F^2 = sqrt(sum s_i^4), position independent.

    Its fundamental tensor degenerates on the coordinate axes, so the sampling
    box is kept inside the positive cone away from the axes.
    """
    q = " + ".join(f"s{i + 1}^4" for i in range(dim))
    return FinslerStructure(
        dim,
        ex.parse(f"({q})^(1/2)", s_names(dim)),
        label="locally_minkowski_quartic",
        s_box=tuple((0.3, 1.5) for _ in range(dim)),
    )


def from_expression(
    text: str,
    dim: int,
    label: str = "custom",
    t_box: tuple = (),
    s_box: tuple = (),
    s_sample_min_norm: float = 0.3,
) -> FinslerStructure:
    e = ex.parse(text, t_names(dim) + s_names(dim))
    return FinslerStructure(
        dim, e, label=label, t_box=t_box, s_box=s_box, s_sample_min_norm=s_sample_min_norm
    )


CATALOG = {
    "euclidean": euclidean,
    "riemannian": riemannian,
    "round_sphere": round_sphere,
    "randers": randers,
    "locally_minkowski": locally_minkowski,
}
