"""Unitary invariants of the two module families, the Kaehler-Einstein test and
the formula audit.

Families
--------
``WeightedPower(lam, nu)``
    The kernel ``(B^(lam))^nu``.
``DetCurvature(lam, nu)``
    The kernel ``(B^(lam))^(2(nu+2)) det K^(lam)``.

Equivalence inside a family is decided by closed-form invariant pairs;
numerically fitted diagonal exponents are attached as corroboration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .automorphisms import G2Point, symmetrize
from .curvature import (
    bergman_curvature,
    bergman_curvature_on_lambda,
    curvature_numeric,
    det_curvature,
    lambda1_curvature,
)
from .errors import DomainError
from .kernels import (
    WeightedBergman,
    antidiagonal_H_coefficient,
    as_kernel_function,
    eval_kernel,
)

__all__ = [
    "ModuleSpec",
    "InvariantSignature",
    "ClassifyResult",
    "QuadraticReport",
    "KEReport",
    "AuditRow",
    "parse_module",
    "format_module",
    "diagonal_value",
    "signature",
    "classify",
    "cross_family_quadratic",
    "ke_test",
    "audit",
]

FAMILIES = ("WeightedPower", "DetCurvature")
_SHORT = {"w": "WeightedPower", "d": "DetCurvature"}
_EXPONENT_X = (0.5, 0.75)  # |z|^2 at which diagonal exponents are fitted
KE_THRESHOLD = 0.01


@dataclass(frozen=True)
class ModuleSpec:
    family: str
    lam: float
    nu: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        if not self.lam > 0:
            raise DomainError("lambda must be positive")
        if self.family == "WeightedPower" and not self.nu > 0:
            raise DomainError("nu must be positive for WeightedPower")
        if self.family == "DetCurvature" and not self.nu >= 0:
            raise DomainError("nu must be non-negative for DetCurvature")


def parse_module(text: str) -> ModuleSpec:
    """Parse ``"w:l=2,nu=1"`` or ``"d:l=1,nu=0"``."""
    head, _, rest = text.strip().partition(":")
    family = _SHORT.get(head.strip(), head.strip())
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise DomainError(f"malformed parameter {item!r}")
        params[key.strip()] = float(val)
    lam = params.pop("l", params.pop("lambda", None))
    nu = params.pop("nu", 0.0 if family == "DetCurvature" else 1.0)
    if lam is None or params:
        raise DomainError(f"cannot parse module spec {text!r}")
    return ModuleSpec(family, lam, nu)


def format_module(m: ModuleSpec) -> str:
    head = "w" if m.family == "WeightedPower" else "d"
    return f"{head}:l={m.lam:g},nu={m.nu:g}"


class InvariantSignature(NamedTuple):
    """Closed invariant pair plus the fitted diagonal exponent.

    ``reference_exponents`` maps ``"closed"`` to the exponent implied by the
    closed forms and, for the det family, ``"published"`` to the exponent of
    the published diagonal formula.
    """

    closed_pair: tuple
    numeric_diagonal_exponent: float
    family: str
    reference_exponents: dict


class ClassifyResult(NamedTuple):
    verdict: str
    witness: str | None


class QuadraticReport(NamedTuple):
    coefficients: tuple
    discriminant: float
    has_positive_root: bool
    roots: tuple


class KEReport(NamedTuple):
    c_estimates: list
    max_ratio_spread: float
    verdict: str


class AuditRow(NamedTuple):
    formula: str
    r: float
    paper_value: float
    oracle_value: float
    relative_gap: float


# ----------------------------------------------------------------------------
# signatures and classification


def closed_pair(m: ModuleSpec) -> tuple:
    lam, nu = m.lam, m.nu
    if m.family == "WeightedPower":
        return (nu * (lam + 1.0), nu * lam)
    return ((nu + 2.0) * (lam + 1.0), (2.0 * nu + 4.0) * lam)


def diagonal_value(m: ModuleSpec, z: complex) -> float:
    """``K(s(z, z), s(z, z))`` from oracle evaluation."""
    u = symmetrize(z, z)
    b = eval_kernel(WeightedBergman(m.lam), u, u).real
    if m.family == "WeightedPower":
        return b ** m.nu
    return b ** (2.0 * (m.nu + 2.0)) * det_curvature(m.lam, u, "oracle")


def signature(m: ModuleSpec) -> InvariantSignature:
    """Closed pair and the slope of ``log K(s(z,z))`` against ``-log(1-|z|^2)``."""
    xs = _EXPONENT_X
    logs = [math.log(diagonal_value(m, math.sqrt(x))) for x in xs]
    slope = (logs[1] - logs[0]) / (math.log1p(-xs[0]) - math.log1p(-xs[1]))
    lam, nu = m.lam, m.nu
    if m.family == "WeightedPower":
        ref = {"closed": 2.0 * nu * (lam + 1.0)}
    else:
        ref = {
            "closed": 4.0 * (nu + 2.0) * (lam + 1.0) + 6.0,
            "published": 4.0 * ((nu + 2.0) * (lam + 1.0) + 2.0),
        }
    return InvariantSignature(closed_pair(m), float(slope), m.family, ref)


_PAIR_NAMES = {
    "WeightedPower": ("nu(lambda+1)", "nu*lambda"),
    "DetCurvature": ("(nu+2)(lambda+1)", "(2nu+4)lambda"),
}


def _fmt(x: float) -> str:
    return f"{x:g}"


def classify(a: ModuleSpec, b: ModuleSpec) -> ClassifyResult:
    """``equivalent`` iff both specs share a family and their closed pairs agree."""
    if a.family != b.family:
        nu = b.nu if b.family == "DetCurvature" else a.nu
        q = cross_family_quadratic(nu)
        return ClassifyResult(
            "inequivalent",
            f"cross-family: quadratic {q.coefficients} in lambda has no positive root",
        )
    pa, pb = closed_pair(a), closed_pair(b)
    for name, x, y in zip(_PAIR_NAMES[a.family], pa, pb):
        if not math.isclose(x, y, rel_tol=1e-12, abs_tol=1e-15):
            return ClassifyResult("inequivalent", f"{name}: {_fmt(x)} vs {_fmt(y)}")
    return ClassifyResult("equivalent", None)


def cross_family_quadratic(nu: float) -> QuadraticReport:
    """The obstruction ``nu lam^2 + (5 - 4 nu) lam + (23 nu + 35) = 0``."""
    nu = float(nu)
    if nu < 0:
        raise DomainError("nu must be non-negative")
    coeffs = (nu, 5.0 - 4.0 * nu, 23.0 * nu + 35.0)
    disc = -76.0 * nu * nu - 180.0 * nu + 25.0
    roots = np.roots(coeffs) if nu > 0 else np.roots(coeffs[1:])
    positive = any(abs(r.imag) <= 1e-12 * max(abs(r), 1.0) and r.real > 0 for r in roots)
    return QuadraticReport(coeffs, disc, bool(positive), tuple(complex(r) for r in roots))


# ----------------------------------------------------------------------------
# Kaehler-Einstein test


def _real_hessian(f, x0: np.ndarray, h: float) -> np.ndarray:
    n = x0.size
    f0 = f(x0)
    H = np.empty((n, n))
    e = np.eye(n) * h
    for p in range(n):
        H[p, p] = (f(x0 + e[p]) - 2.0 * f0 + f(x0 - e[p])) / (h * h)
        for q in range(p + 1, n):
            H[p, q] = H[q, p] = (
                f(x0 + e[p] + e[q]) - f(x0 + e[p] - e[q])
                - f(x0 - e[p] + e[q]) + f(x0 - e[p] - e[q])
            ) / (4.0 * h * h)
    return H


def _ddbar(f, u: G2Point, h: float) -> np.ndarray:
    """``d_i dbar_j f`` of a real function of ``u`` by real finite differences.

    Real variables are ordered ``(x1, y1, x2, y2)``; Richardson extrapolation
    combines steps ``h`` and ``h/2``.
    """
    x0 = np.array([u.u1.real, u.u1.imag, u.u2.real, u.u2.imag])

    def g(x):
        return f(G2Point(complex(x[0], x[1]), complex(x[2], x[3])))

    H = (4.0 * _real_hessian(g, x0, 0.5 * h) - _real_hessian(g, x0, h)) / 3.0
    out = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            xi, yi, xj, yj = 2 * i, 2 * i + 1, 2 * j, 2 * j + 1
            out[i, j] = 0.25 * ((H[xi, xj] + H[yi, yj]) + 1j * (H[xi, yj] - H[yi, xj]))
    return out


def _spread(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=complex).ravel()
    mean = values.mean()
    d = np.abs(values[:, None] - values[None, :]).max()
    return float(d / max(abs(mean), 1e-300))


def ke_test(
    lam: float,
    points: Sequence,
    control_exponent: float | None = None,
    step: float = 1e-3,
) -> KEReport:
    """Compare ``d dbar log det K^(lam)`` with the metric ``K^(lam)`` itself.

    The Ricci form is ``-d dbar log det K``; with the convention
    ``d dbar log B = K`` a Kaehler-Einstein metric would make every entrywise
    ratio ``(d dbar log det K)_{ij} / K_{ij}`` the same constant.  The spread
    is ``max |rho_a - rho_b| / |mean rho|`` over all entries and points.

    With ``control_exponent=c`` the determinant is replaced by ``B^c``,
    whose ratios are exactly ``c``.
    """
    pts = [G2Point(complex(p[0]), complex(p[1])) for p in points]
    if len(pts) < 2:
        raise DomainError("ke_test needs at least two points")
    if control_exponent is None:
        def f(u):
            return math.log(det_curvature(lam, u, "oracle"))
    else:
        K = as_kernel_function(WeightedBergman(lam))

        def f(u):
            return control_exponent * math.log(K(u.u1, u.u2, u.u1, u.u2).real)

    estimates = []
    ratios = []
    for u in pts:
        metric = bergman_curvature(lam, u).entries
        ric = _ddbar(f, u, step)
        keep = np.abs(metric) > 1e-8 * np.abs(metric).max()
        rho = ric[keep] / metric[keep]
        estimates.append((u, rho.tolist()))
        ratios.extend(rho.tolist())
    spread = _spread(np.array(ratios))
    verdict = "not_einstein" if spread > KE_THRESHOLD else "einstein_consistent"
    return KEReport(estimates, spread, verdict)


# ----------------------------------------------------------------------------
# audit


def _gap(published: float, oracle: float) -> float:
    return abs(published - oracle) / max(abs(oracle), 1e-300)


def _matrix_gap(published: np.ndarray, oracle: np.ndarray) -> float:
    scale = np.abs(oracle).max()
    floor = 1e-12 * scale
    return float(np.max(np.abs(published - oracle) / np.maximum(np.abs(oracle), floor)))


def _worst_entry(published: np.ndarray, oracle: np.ndarray):
    scale = np.abs(oracle).max()
    rel = np.abs(published - oracle) / np.maximum(np.abs(oracle), 1e-12 * scale)
    return np.unravel_index(int(np.argmax(rel)), rel.shape)


def _resdetcurv_published(lam, nu, x):
    return (
        (lam / 2.0) ** (2.0 * (nu + 2.0))
        * (lam + 1.0) * (lam + 2.0) * (2.0 * lam + 1.0) / 6.0
        * (1.0 - x) ** (-4.0 * ((nu + 2.0) * (lam + 1.0) + 2.0))
    )


def audit(lam: float, r_grid: Sequence[float], nu: float = 0.0) -> list[AuditRow]:
    """Published closed forms against independent oracles.

    Rows
    ----
    prop_curv
        The closed curvature at ``(r, 0)``, ``r > 0``, against the exact
        product formula (``lam = 1``) or finite differences; the values are
        those of the entry with the worst relative gap.
    detcurv_as_stated, detcurv_statement, detcurv_proof
        The three readings of the determinant formula against the oracle
        (see :func:`~g2kernels.curvature.det_curvature`).
    resBerg, resdetcurv
        Diagonal values at ``s(z, z)`` with ``|z| = r``.
    H_leading
        The leading coefficient of the diagonal expansion against the first
        term of the antidiagonal series.
    """
    lam = float(lam)
    grid = [float(r) for r in r_grid]
    if any(not 0.0 <= r <= 0.9 for r in grid):
        raise DomainError("r_grid must lie in [0, 0.9]")
    rows = []
    for r in grid:
        u = G2Point(complex(r), 0j)
        if r > 0:
            closed = bergman_curvature_on_lambda(lam, r).entries
            if lam == 1.0:
                oracle = lambda1_curvature(u)
            else:
                oracle = curvature_numeric(WeightedBergman(lam), u).entries
            idx = _worst_entry(closed, oracle)
            rows.append(
                AuditRow("prop_curv", r, complex(closed[idx]).real, complex(oracle[idx]).real,
                         _matrix_gap(closed, oracle))
            )
        o = det_curvature(lam, u, "oracle")
        for name, method in (
            ("detcurv_as_stated", "paper"),
            ("detcurv_statement", "paper_statement"),
            ("detcurv_proof", "paper_proof"),
        ):
            p = det_curvature(lam, u, method)
            rows.append(AuditRow(name, r, p, o, _gap(p, o)))
        s = symmetrize(r, r)
        b = eval_kernel(WeightedBergman(lam), s, s).real
        pb = (lam / 2.0) * (1.0 - r * r) ** (-2.0 * lam - 2.0)
        rows.append(AuditRow("resBerg", r, pb, b, _gap(pb, b)))
        od = b ** (2.0 * (nu + 2.0)) * det_curvature(lam, s, "oracle")
        pd = _resdetcurv_published(lam, nu, r * r)
        rows.append(AuditRow("resdetcurv", r, pd, od, _gap(pd, od)))
    lead = lam * (lam + 1.0) * (2.0 * lam + 1.0) / 12.0
    anti = antidiagonal_H_coefficient(lam, 1)
    rows.append(AuditRow("H_leading", 0.0, lead, anti, _gap(lead, anti)))
    return rows
