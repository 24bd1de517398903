"""Quasi-invariance and homogeneity checks.

A kernel is quasi-invariant under ``g`` with multiplier ``J`` when
``K(u, v) = J(u) K(g u, g v) conj(J(v))``.  The multipliers of interest are
``J = phi_hat^kappa (det D phi~)^p`` where ``phi_hat = phi'(z1) phi'(z2)``.

Every routine accepts either a :data:`~g2kernels.kernels.KernelSpec` or a
vectorized callable ``K(u1, u2, v1, v2)``, so sums and synthetic controls can
be tested with the same code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .automorphisms import (
    AutomorphismMap,
    G2Point,
    aut_apply,
    log_cocycle,
    log_det_jacobian,
    random_g2_points,
    random_moebius,
    stabilizer,
    to_fundamental,
)
from .curvature import (
    CurvatureMatrix,
    FDOptions,
    bergman_curvature_on_lambda,
    curvature_numeric,
    curvature_transport,
    fundamental_identity_residual,
)
from .errors import DomainError, NumericalError
from .kernels import (
    DEFAULT_OPTIONS,
    DetCurvature,
    EvalOptions,
    Power,
    Product,
    SymmetricC,
    WeightedBergman,
    as_kernel_function,
)

__all__ = [
    "ResidualReport",
    "MultiplierSpec",
    "default_multiplier",
    "multiplier_log",
    "quasi_invariance_residual",
    "quasi_invariance_trials",
    "factorization_test",
    "factorization_trials",
    "curvature_criterion",
    "reconstruct_from_fundamental",
    "propagate_curvature",
]

_FLOOR = 1e-30


class ResidualReport(NamedTuple):
    """Largest relative residual over a sample and where it occurred.

    ``seed`` is ``None`` for deterministic grids.
    """

    max_relative_residual: float
    argmax_points: tuple
    trials: int
    seed: int | None

    def merge(self, other: "ResidualReport") -> "ResidualReport":
        # max-reduction; order independent
        best = self if self.max_relative_residual >= other.max_relative_residual else other
        return best._replace(trials=self.trials + other.trials)


@dataclass(frozen=True)
class MultiplierSpec:
    """Exponents of ``J = phi_hat^kappa * (det D phi~)^jacobian_power``."""

    kappa: float
    jacobian_power: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and np.isfinite(self.jacobian_power)):
            raise DomainError("multiplier exponents must be finite")

    def __add__(self, other: "MultiplierSpec") -> "MultiplierSpec":
        return MultiplierSpec(self.kappa + other.kappa, self.jacobian_power + other.jacobian_power)

    def scaled(self, nu: float) -> "MultiplierSpec":
        return MultiplierSpec(nu * self.kappa, nu * self.jacobian_power)


def default_multiplier(spec) -> MultiplierSpec:
    """The multiplier under which a named kernel family is quasi-invariant."""
    if isinstance(spec, WeightedBergman):
        return MultiplierSpec((spec.lam + 1.0) / 2.0)
    if isinstance(spec, SymmetricC):
        return MultiplierSpec(spec.lam / 2.0)
    if isinstance(spec, DetCurvature):
        return MultiplierSpec((spec.lam + 1.0) * (spec.nu + 2.0), 1.0)
    if isinstance(spec, Power):
        return default_multiplier(spec.base).scaled(spec.nu)
    if isinstance(spec, Product):
        out = MultiplierSpec(0.0)
        for f in spec.factors:
            out = out + default_multiplier(f)
        return out
    raise DomainError(f"no scalar multiplier known for {spec!r}")


def multiplier_log(mult: MultiplierSpec, g: AutomorphismMap, u1, u2):
    """Continuous ``log J(u)``; vanishes identically at the identity map."""
    out = mult.kappa * log_cocycle(g, (u1, u2), check=False)
    if mult.jacobian_power:
        out = out + mult.jacobian_power * log_det_jacobian(g, (u1, u2), check=False)
    return out


def _pairs_to_arrays(sample):
    if isinstance(sample, tuple) and len(sample) == 4 and np.ndim(sample[0]) == 1:
        return tuple(np.asarray(a, dtype=complex) for a in sample)
    pts = list(sample)
    if not pts:
        raise DomainError("sample must be nonempty")
    u1 = np.array([complex(p[0][0]) for p in pts])
    u2 = np.array([complex(p[0][1]) for p in pts])
    v1 = np.array([complex(p[1][0]) for p in pts])
    v2 = np.array([complex(p[1][1]) for p in pts])
    return u1, u2, v1, v2


def _point(a, b) -> G2Point:
    return G2Point(complex(a), complex(b))


def _report(res, u1, u2, v1, v2, seed=None) -> ResidualReport:
    k = int(np.argmax(res))
    return ResidualReport(
        float(res[k]),
        (_point(u1[k], u2[k]), _point(v1[k], v2[k])),
        int(res.size),
        seed,
    )


def quasi_invariance_residual(
    spec,
    mult: MultiplierSpec,
    g: AutomorphismMap,
    sample,
    opts: EvalOptions = DEFAULT_OPTIONS,
    seed: int | None = None,
) -> ResidualReport:
    """Max over pairs of ``|K(u,v) - J(u) K(gu,gv) conj(J(v))| / |K(u,v)|``.

    `sample` is a list of ``(u, v)`` pairs or a tuple of four arrays.
    """
    u1, u2, v1, v2 = _pairs_to_arrays(sample)
    K = as_kernel_function(spec, opts)
    gu1, gu2 = aut_apply(g, (u1, u2))
    gv1, gv2 = aut_apply(g, (v1, v2))
    lhs = K(u1, u2, v1, v2)
    moved = K(gu1, gu2, gv1, gv2)
    logJ = multiplier_log(mult, g, u1, u2) + np.conj(multiplier_log(mult, g, v1, v2))
    rhs = np.exp(logJ) * moved
    res = np.abs(lhs - rhs) / np.maximum(np.abs(lhs), _FLOOR)
    return _report(res, u1, u2, v1, v2, seed)


def _random_sample(rng, n, radius):
    u1, u2 = random_g2_points(rng, n, radius)
    v1, v2 = random_g2_points(rng, n, radius)
    return u1, u2, v1, v2


def quasi_invariance_trials(
    spec,
    mult: MultiplierSpec,
    n: int = 50,
    seed: int = 0,
    radius: float = 0.9,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> ResidualReport:
    """:func:`quasi_invariance_residual` over ``n`` seeded triples ``(g, u, v)``."""
    rng = np.random.default_rng(seed)
    report = None
    for _ in range(n):
        g = AutomorphismMap(random_moebius(rng, radius))
        r = quasi_invariance_residual(spec, mult, g, _random_sample(rng, 1, radius), opts)
        report = r if report is None else report.merge(r)
    return report._replace(seed=seed)


def factorization_test(
    spec,
    g: AutomorphismMap,
    sample,
    base_pair=(G2Point(0j, 0j), G2Point(0.2 + 0j, 0j)),
    opts: EvalOptions = DEFAULT_OPTIONS,
    seed: int | None = None,
) -> ResidualReport:
    """Multiplier-free test that ``K(u,v) / K(gu,gv)`` factors as ``f(u) conj(f(v))``.

    Checks ``M(u,v) M(u0,v0) = M(u,v0) M(u0,v)`` against a base pair.  If
    ``|K|`` is below ``1e-14`` at the base pair, the next sample pair is
    used instead.

    Raises
    ------
    NumericalError
        If ``|K| < 1e-14`` at a sample point or no usable base pair exists.
    """
    u1, u2, v1, v2 = _pairs_to_arrays(sample)
    K = as_kernel_function(spec, opts)

    def M(a1, a2, b1, b2):
        a1, a2, b1, b2 = np.broadcast_arrays(
            *(np.asarray(x, dtype=complex) for x in (a1, a2, b1, b2))
        )
        top = K(a1, a2, b1, b2)
        ga = aut_apply(g, (a1, a2))
        gb = aut_apply(g, (b1, b2))
        bottom = K(ga[0], ga[1], gb[0], gb[1])
        if np.any(np.abs(top) < 1e-14) or np.any(np.abs(bottom) < 1e-14):
            raise NumericalError("kernel vanishes (|K| < 1e-14) at a sample point")
        return top / bottom

    candidates = [base_pair] + [
        (_point(u1[k], u2[k]), _point(v1[k], v2[k])) for k in range(u1.size)
    ]
    for u0, v0 in candidates:
        try:
            m00 = M(u0[0], u0[1], v0[0], v0[1])
        except NumericalError:
            continue
        break
    else:
        raise NumericalError("no base pair with non-vanishing kernel")
    muv = M(u1, u2, v1, v2)
    mu0 = M(u1, u2, v0[0], v0[1])
    m0v = M(u0[0], u0[1], v1, v2)
    lhs = muv * m00
    res = np.abs(lhs - mu0 * m0v) / np.maximum(np.abs(lhs), _FLOOR)
    return _report(res, u1, u2, v1, v2, seed)


def factorization_trials(
    spec,
    n: int = 50,
    seed: int = 0,
    radius: float = 0.9,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> ResidualReport:
    """:func:`factorization_test` over ``n`` seeded triples ``(g, u, v)``."""
    rng = np.random.default_rng(seed)
    report = None
    for _ in range(n):
        g = AutomorphismMap(random_moebius(rng, radius))
        r = factorization_test(spec, g, _random_sample(rng, 1, radius), opts=opts)
        report = r if report is None else report.merge(r)
    return report._replace(seed=seed)


def curvature_criterion(
    spec,
    r_grid: Sequence[float],
    method: str = "numeric",
    fd_opts: FDOptions = FDOptions(),
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> ResidualReport:
    """Check the fundamental-set conditions on the curvature at ``(r, 0)``.

    The two conditions are ``K12 = K21`` and
    ``r (r^2 - 2) K11 = 2 K12 + r K22``; the report holds the larger
    residual relative to ``max|K|``.  ``method="closed"`` is available for
    :class:`WeightedBergman` only.
    """
    grid = [float(r) for r in r_grid]
    if not grid:
        raise DomainError("r_grid must be nonempty")
    if any(not 0.0 <= r <= 0.95 for r in grid):
        raise DomainError("r_grid must lie in [0, 0.95]")
    if method == "closed" and not isinstance(spec, WeightedBergman):
        raise DomainError("closed forms exist for WeightedBergman only")
    if method not in ("closed", "numeric"):
        raise DomainError(f"unknown method {method!r}")
    res = []
    for r in grid:
        if method == "closed":
            Km = bergman_curvature_on_lambda(spec.lam, r).entries
        else:
            Km = curvature_numeric(spec, (complex(r), 0j), fd_opts, opts).entries
        res.append(max(fundamental_identity_residual(Km, r)))
    res = np.array(res)
    k = int(np.argmax(res))
    p = _point(grid[k], 0.0)
    return ResidualReport(float(res[k]), (p, p), len(grid), None)


def _log_abs_J(mult: MultiplierSpec, g: AutomorphismMap, r: float) -> float:
    return float(np.real(multiplier_log(mult, g, complex(r), 0j)))


def reconstruct_from_fundamental(
    K_on_lambda: Callable[[float], float],
    mult: MultiplierSpec,
    u,
    check: bool = True,
) -> float:
    """Diagonal value ``K(u, u) = |J(g, (r, 0))|^-2 K_Lambda(r)`` with ``u = g(r, 0)``.

    With ``check=True`` the value is recomputed from the other preimage
    ordering, which changes ``g`` by a stabilizer element; the two must
    agree to ``1e-10`` relative.

    Raises
    ------
    NumericalError
        If the two decompositions disagree.
    """
    u = G2Point(complex(u[0]), complex(u[1]))
    dec = to_fundamental(u)
    value = float(K_on_lambda(dec.r)) * np.exp(-2.0 * _log_abs_J(mult, dec.g, dec.r))
    if check:
        alt = to_fundamental(u, swap=True)
        other = float(K_on_lambda(alt.r)) * np.exp(-2.0 * _log_abs_J(mult, alt.g, alt.r))
        if abs(value - other) > 1e-10 * abs(value):
            raise NumericalError(
                f"reconstruction depends on the decomposition: {value!r} vs {other!r}"
            )
    return float(value)


def propagate_curvature(
    K_matrix_on_lambda: Callable[[float], CurvatureMatrix],
    u,
) -> CurvatureMatrix:
    """Transport the fundamental-set curvature at ``(r, 0)`` to ``u``.

    The result is also computed with ``g o h`` for every sampled stabilizer
    element ``h`` of ``(r, 0)``; the largest relative discrepancy is stored
    in ``error_estimate``.
    """
    u = G2Point(complex(u[0]), complex(u[1]))
    dec = to_fundamental(u)
    K0 = K_matrix_on_lambda(dec.r)
    out = curvature_transport(K0, dec.g).entries
    scale = max(float(np.max(np.abs(out))), 1e-300)
    disc = 0.0
    for h in stabilizer(dec.r).sample(4):
        alt = curvature_transport(K0, dec.g.compose(h)).entries
        disc = max(disc, float(np.max(np.abs(alt - out))) / scale)
    return CurvatureMatrix(out, u, "G2", disc)
