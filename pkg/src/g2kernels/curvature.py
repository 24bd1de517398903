"""Curvature matrices ``K_{i jbar} = d_i dbar_j log K(u, u)``.

Three independent routes are provided:

* :func:`curvature_numeric` differentiates the polarized log-kernel with
  nested central differences and Richardson extrapolation;
* :func:`curvature_fundamental_closed` evaluates the closed forms for
  ``B^(lam)`` on the fundamental set ``{(r, 0)}`` in multiprecision;
* :func:`curvature_transport` moves a curvature matrix along an
  automorphism, ``K(g u) = (Dg^T)^-1 K(u) conj(Dg)^-1``.

The determinant of the curvature of ``B^(lam)`` is available both from the
closed forms plus transport (``method="oracle"``) and from three literal
transcriptions of published formulas, kept for auditing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath as mp
import numpy as np

from .automorphisms import (
    AutomorphismMap,
    Disc2Point,
    G2Point,
    aut_apply,
    aut_det_jacobian,
    aut_jacobian,
    preimage_arrays,
    solve_preimage,
    symmetrize,
    to_fundamental,
)
from .errors import DomainError, NumericalError, SingularJacobianError
from .kernels import (
    DEFAULT_OPTIONS,
    EvalOptions,
    KernelSpec,
    as_kernel_function,
    is_matrix_valued,
    polarized_curvature,
)

__all__ = [
    "CurvatureMatrix",
    "FDOptions",
    "curvature_numeric",
    "curvature_polarized",
    "curvature_fundamental_closed",
    "bergman_curvature_on_lambda",
    "bergman_curvature",
    "lambda1_curvature",
    "curvature_transport",
    "bidisc_pullback",
    "g2_from_bidisc",
    "det_curvature",
    "det_curvature_methods",
    "fundamental_identity_residual",
]


@dataclass(frozen=True, eq=False)
class CurvatureMatrix:
    """A 2x2 curvature matrix tagged with its base point and chart.

    ``chart`` is ``"G2"`` for coordinates ``(u1, u2)`` and ``"Bidisc"`` for
    ``(z1, z2)``.  ``error_estimate`` is set by numerical constructors.
    """

    entries: np.ndarray
    base_point: tuple
    chart: str = "G2"
    error_estimate: float | None = None

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex).reshape(2, 2)
        object.__setattr__(self, "entries", entries)
        if self.chart not in ("G2", "Bidisc"):
            raise DomainError(f"unknown chart {self.chart!r}")

    def hermitian_residual(self) -> float:
        e = self.entries
        return float(np.max(np.abs(e - e.conj().T)) / max(np.max(np.abs(e)), 1e-300))

    def eigenvalues(self) -> np.ndarray:
        e = self.entries
        return np.linalg.eigvalsh(0.5 * (e + e.conj().T))

    def is_psd(self, tol: float = 1e-8) -> bool:
        ev = self.eigenvalues()
        return bool(ev[0] >= -tol * max(abs(np.trace(self.entries)), 1e-300))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.entries).real)

    def __getitem__(self, idx):
        return self.entries[idx]


@dataclass(frozen=True)
class FDOptions:
    """Finite-difference settings for :func:`curvature_numeric`."""

    step: float = 1e-4
    richardson: bool = True
    max_relative_error: float = 1e-4

    def __post_init__(self):
        if not 1e-7 <= self.step <= 1e-2:
            raise DomainError("step must lie in [1e-7, 1e-2]")


def _as_g2(u) -> G2Point:
    return G2Point(complex(u[0]), complex(u[1]))


# ----------------------------------------------------------------------------
# numerical oracle


def _fd_mixed(spec, u: G2Point, h: float, opts: EvalOptions) -> np.ndarray:
    # L(a, b) = log K(u + a e_i, u + b e_j) / K(u, u) with real a, b; the
    # mixed real derivative at 0 equals d_{u_i} dbar_{v_j} log K
    signs = np.array([(1, 1), (1, -1), (-1, 1), (-1, -1)], dtype=float)
    weights = np.array([1.0, -1.0, -1.0, 1.0])
    U1, U2, V1, V2 = [], [], [], []
    for i in range(2):
        for j in range(2):
            for sa, sb in signs:
                a = [u.u1, u.u2]
                b = [u.u1, u.u2]
                a[i] += sa * h
                b[j] += sb * h
                U1.append(a[0]); U2.append(a[1]); V1.append(b[0]); V2.append(b[1])
    arr = [np.array(x, dtype=complex) for x in (U1, U2, V1, V2)]
    f = as_kernel_function(spec, opts)
    K = f(*arr)
    K0 = f(u.u1, u.u2, u.u1, u.u2)
    ratio = K / K0
    if np.any(ratio.real <= 0.0):
        raise NumericalError("log-kernel crosses a branch cut inside the stencil")
    L = np.log(ratio).reshape(2, 2, 4)
    return np.einsum("ijk,k->ij", L, weights) / (4.0 * h * h)


def curvature_numeric(
    spec,
    u,
    opts: FDOptions = FDOptions(),
    eval_opts: EvalOptions = DEFAULT_OPTIONS,
) -> CurvatureMatrix:
    """Curvature of a scalar kernel at ``u`` by nested central differences.

    `spec` is a :data:`KernelSpec` or a vectorized callable ``K(u1, u2, v1, v2)``.

    The step is ``opts.step`` scaled by ``min(1 - |z_i|^2)`` over the roots of
    ``u``; Richardson extrapolation combines steps ``h`` and ``h/2`` and
    ``|D(h) - D(h/2)|`` is stored as the error estimate.

    Raises
    ------
    NumericalError
        If the relative error estimate exceeds ``opts.max_relative_error``,
        the estimate is not finite, or the scaled step falls below ``1e-10``.
    """
    if is_matrix_valued(spec):
        raise DomainError("curvature is defined for scalar kernels")
    u = _as_g2(u)
    z1, z2 = preimage_arrays(u.u1, u.u2)
    scale = float(min(1.0 - abs(complex(z1)) ** 2, 1.0 - abs(complex(z2)) ** 2))
    h = opts.step * scale
    if h < 1e-10:
        raise NumericalError(f"point too close to the boundary for differencing (step {h:.1e})")
    preimage_arrays(u.u1, u.u2, margin=0.0)
    d1 = _fd_mixed(spec, u, h, eval_opts)
    if not opts.richardson:
        if not np.all(np.isfinite(d1)):
            raise NumericalError("non-finite curvature estimate")
        return CurvatureMatrix(_herm(d1), u, "G2", None)
    d2 = _fd_mixed(spec, u, 0.5 * h, eval_opts)
    est = (4.0 * d2 - d1) / 3.0
    if not np.all(np.isfinite(est)):
        raise NumericalError("non-finite curvature estimate")
    err = float(np.max(np.abs(d1 - d2)) / max(np.max(np.abs(est)), 1e-300))
    if not err <= opts.max_relative_error:
        raise NumericalError(f"finite-difference error estimate {err:.2e} too large")
    return CurvatureMatrix(_herm(est), u, "G2", err)


def _herm(m):
    return 0.5 * (m + m.conj().T)


def curvature_polarized(spec: KernelSpec, u, v=None, eval_opts: EvalOptions = DEFAULT_OPTIONS):
    """``d_{u_i} dbar_{v_j} log K(u, v)`` by Cauchy sums (``v = u`` by default)."""
    u = _as_g2(u)
    v = u if v is None else _as_g2(v)
    H = polarized_curvature(spec, u, v, eval_opts)
    if v == u:
        return CurvatureMatrix(_herm(H), u, "G2")
    return H


# ----------------------------------------------------------------------------
# closed forms on the fundamental set


def _dps_for(x) -> int:
    return 40 + int(3 * max(0.0, -math.log10(float(x))))


def _closed_b(lam, x):
    """Multiprecision closed forms ``(b11, b12, b22)`` at ``(r, 0)`` with ``x = r^2``."""
    lam = mp.mpf(lam)
    q = 1 - x
    ql = q ** lam
    den = (1 - ql) ** 2
    b11 = lam * (1 - ql * (1 + lam * x)) / (q * q * den)
    b12 = lam * ql * (lam * x - q + q ** (lam + 1)) / (q * den)
    b22 = q * q * b11
    return b11, b12, b22


def _limit_at_origin(lam: float) -> np.ndarray:
    return np.diag([(lam + 1.0) / 2.0, (lam + 1.0) * (2.0 * lam + 1.0) / 3.0]).astype(complex)


def curvature_fundamental_closed(lam: float, r: float):
    """Closed-form curvature of ``B^(lam)`` at ``(r, 0)``, ``0 < r < 1``.

    Returns
    -------
    b : CurvatureMatrix
        Bidisc-chart matrix at ``(r, 0)`` with ``b22 = (1 - r^2)^2 b11``.
    B : CurvatureMatrix
        G2-chart matrix at ``(r, 0)``: ``B11 = b11``,
        ``B12 = (b12 - b11) / r`` and ``B22 = (b11 - 2 b12 + b22) / r^2``.
    """
    r = float(r)
    if not 0.0 < r < 1.0:
        raise DomainError(f"r must lie in (0, 1), got {r!r}")
    if lam <= 0.0:
        raise DomainError("lam must be positive")
    with mp.workdps(_dps_for(r * r)):
        rr = mp.mpf(r)
        x = rr * rr
        b11, b12, b22 = _closed_b(lam, x)
        B11 = b11
        B12 = (b12 - b11) / rr
        B22 = (b11 - 2 * b12 + b22) / x
        b = np.array([[b11, b12], [b12, b22]], dtype=float)
        B = np.array([[B11, B12], [B12, B22]], dtype=float)
    return (
        CurvatureMatrix(b, Disc2Point(complex(r), 0j), "Bidisc"),
        CurvatureMatrix(B, G2Point(complex(r), 0j), "G2"),
    )


def bergman_curvature_on_lambda(lam: float, r: float) -> CurvatureMatrix:
    """G2-chart curvature of ``B^(lam)`` at ``(r, 0)`` for ``0 <= r < 1``.

    For ``r < 1e-7`` the removable singularity is replaced by its limit
    ``diag((lam+1)/2, (lam+1)(2 lam+1)/3)``; the neglected terms are ``O(r^2)``.
    """
    r = float(r)
    if not 0.0 <= r < 1.0:
        raise DomainError(f"r must lie in [0, 1), got {r!r}")
    if r < 1e-7:
        return CurvatureMatrix(_limit_at_origin(float(lam)), G2Point(complex(r), 0j), "G2")
    return curvature_fundamental_closed(lam, r)[1]


def curvature_transport(K: CurvatureMatrix, g: AutomorphismMap) -> CurvatureMatrix:
    """Move a G2-chart curvature matrix from ``u`` to ``g(u)``.

    Uses ``K(g u) = (Dg(u)^T)^-1 K(u) conj(Dg(u))^-1``.
    """
    if K.chart != "G2":
        raise DomainError("transport acts on G2-chart matrices")
    u = _as_g2(K.base_point)
    D = aut_jacobian(g, u)
    Dinv = np.linalg.inv(D)
    out = Dinv.T @ K.entries @ Dinv.conj()
    return CurvatureMatrix(out, G2Point(*(complex(c) for c in aut_apply(g, u))), "G2")


def _ds(z: Disc2Point) -> np.ndarray:
    return np.array([[1.0, 1.0], [z[1], z[0]]], dtype=complex)


def bidisc_pullback(K: CurvatureMatrix, z: Disc2Point) -> CurvatureMatrix:
    """``B_s(z) = Ds(z)^T B(s(z)) conj(Ds(z))`` with ``Ds = [[1, 1], [z2, z1]]``."""
    if K.chart != "G2":
        raise DomainError("pullback expects a G2-chart matrix")
    Ds = _ds(z)
    return CurvatureMatrix(Ds.T @ K.entries @ Ds.conj(), Disc2Point(*z), "Bidisc")


def g2_from_bidisc(b: CurvatureMatrix) -> CurvatureMatrix:
    """Inverse of :func:`bidisc_pullback`; singular on the royal variety."""
    if b.chart != "Bidisc":
        raise DomainError("expected a Bidisc-chart matrix")
    z = b.base_point
    if abs(z[0] - z[1]) < 1e-12:
        raise SingularJacobianError("det Ds = z1 - z2 vanishes on the royal variety")
    Dinv = np.linalg.inv(_ds(z))
    return CurvatureMatrix(Dinv.T @ b.entries @ Dinv.conj(), symmetrize(*z), "G2")


def bergman_curvature(lam: float, u) -> CurvatureMatrix:
    """Curvature of ``B^(lam)`` at any ``u``: closed form on ``(r, 0)`` plus transport."""
    dec = to_fundamental(_as_g2(u))
    K0 = bergman_curvature_on_lambda(lam, dec.r)
    out = curvature_transport(K0, dec.g)
    return CurvatureMatrix(out.entries, _as_g2(u), "G2")


def lambda1_curvature(u, v=None) -> np.ndarray:
    """Exact ``d_{u_i} dbar_{v_j} log B^(1)(u, v)`` from the product formula.

    ``B^(1) = 1 / (2 D)`` with ``D = 1 - u1 xi1 + (u1^2 - 2 u2) xi2 + u2 xi1^2
    - u1 u2 xi1 xi2 + u2^2 xi2^2`` and ``xi = conj(v)``.
    """
    u1, u2 = complex(u[0]), complex(u[1])
    v = u if v is None else v
    x1, x2 = complex(v[0]).conjugate(), complex(v[1]).conjugate()
    D = 1 - u1 * x1 + (u1 * u1 - 2 * u2) * x2 + u2 * x1 * x1 - u1 * u2 * x1 * x2 + u2 * u2 * x2 * x2
    Du = [-x1 + 2 * u1 * x2 - u2 * x1 * x2, -2 * x2 + x1 * x1 - u1 * x1 * x2 + 2 * u2 * x2 * x2]
    Dx = [-u1 + 2 * u2 * x1 - u1 * u2 * x2, u1 * u1 - 2 * u2 - u1 * u2 * x1 + 2 * u2 * u2 * x2]
    Dux = [[-1 - u2 * x2, 2 * u1 - u2 * x1], [2 * x1 - u1 * x2, -2 - u1 * x1 + 4 * u2 * x2]]
    out = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[i, j] = -(Dux[i][j] / D - Du[i] * Dx[j] / (D * D))
    return out


def fundamental_identity_residual(K: np.ndarray, r: float) -> tuple[float, float]:
    """Residuals of ``K12 = K21`` and ``r(r^2-2) K11 = 2 K12 + r K22``, relative to ``max|K|``."""
    K = np.asarray(K)
    scale = max(float(np.max(np.abs(K))), 1e-300)
    sym = abs(K[0, 1] - K[1, 0]) / scale
    ident = abs(r * (r * r - 2.0) * K[0, 0] - 2.0 * K[0, 1] - r * K[1, 1]) / scale
    return float(sym), float(ident)


# ----------------------------------------------------------------------------
# determinant of the curvature


def _b0(mu, x):
    # B^(mu)((z, 0), (z, 0)) with x = |z|^2
    q = 1 - x
    return (1 - q ** mu) / (2 * x * q ** mu)


def _det_eq_fundamental(lam, r) -> float:
    """The published determinant formula on ``(r, 0)`` transcribed literally."""
    x_float = max(r * r, 1e-30)
    with mp.workdps(_dps_for(x_float) + 40):
        lam = mp.mpf(lam)
        x = mp.mpf(x_float)
        q = 1 - x
        b0 = _b0(lam, x)
        bracket = q ** (lam + 1) * b0 * _b0(2 * lam + 2, x) / _b0(lam + 1, x) - lam
        return float(lam ** 2 / (2 * x * x * b0 ** 2 * q ** (lam + 1)) * bracket)


def _diag_bergman_mp(mu, z1, z2):
    a = 1 - abs(z1) ** 2
    b = 1 - abs(z2) ** 2
    c = abs(1 - mp.conj(z1) * z2) ** 2
    d = abs(z1 - z2) ** 2
    return (1 / (a * b) ** mu - 1 / c ** mu) / (2 * d)


def _det_statement_form(lam, z: Disc2Point, shift: int) -> float:
    """``lam^2 B^(lam+shift) H / (2 c^(lam+1) (ab)^(lam+1) B^3)`` on the diagonal of ``s(z)``."""
    z1, z2 = complex(z[0]), complex(z[1])
    if abs(z1 - z2) < 1e-15:
        z2 = z1 + 1e-15  # removable singularity: O(1e-15) displacement
    with mp.workdps(120):
        lam = mp.mpf(lam)
        z1m, z2m = mp.mpc(z1), mp.mpc(z2)
        a = 1 - abs(z1m) ** 2
        b = 1 - abs(z2m) ** 2
        c = abs(1 - mp.conj(z1m) * z2m) ** 2
        d = abs(z1m - z2m) ** 2
        B = _diag_bergman_mp(lam, z1m, z2m)
        Bs = _diag_bergman_mp(lam + shift, z1m, z2m)
        H = (B * (c ** (lam + 1) + (a * b) ** (lam + 1)) - lam) / d ** 2
        return float(lam ** 2 * Bs / (2 * c ** (lam + 1) * (a * b) ** (lam + 1) * B ** 3) * H)


def _det_oracle(lam, u) -> float:
    dec = to_fundamental(_as_g2(u))
    K0 = bergman_curvature_on_lambda(lam, dec.r)
    jac = aut_det_jacobian(dec.g, G2Point(complex(dec.r), 0j))
    return K0.det / abs(complex(jac)) ** 2


det_curvature_methods = ("oracle", "paper", "paper_statement", "paper_proof")


def det_curvature(lam: float, u, method: str = "oracle") -> float:
    """Determinant of the curvature of ``B^(lam)`` at ``u``.

    Methods
    -------
    oracle
        Closed forms at ``(r, 0)`` with ``r = to_fundamental(u).r``, divided by
        ``|det Dg(r, 0)|^2``.
    paper
        The published determinant formula in terms of ``B_0`` on ``(r, 0)``,
        transported the same way.
    paper_statement
        The published formula for general ``z`` with ``B^(lam+2)`` in the
        numerator, as printed in the published statement.
    paper_proof
        The same with ``B^(lam+1)``, as it appears in the proof.
    """
    lam = float(lam)
    if lam <= 0.0:
        raise DomainError("lam must be positive")
    u = _as_g2(u)
    if method == "oracle":
        return _det_oracle(lam, u)
    if method == "paper":
        dec = to_fundamental(u)
        jac = aut_det_jacobian(dec.g, G2Point(complex(dec.r), 0j))
        return _det_eq_fundamental(lam, dec.r) / abs(complex(jac)) ** 2
    if method in ("paper_statement", "paper_proof"):
        z = solve_preimage(u)
        return _det_statement_form(lam, z, 2 if method == "paper_statement" else 1)
    raise DomainError(f"unknown method {method!r}; choose from {det_curvature_methods}")
