"""Kernel families on the symmetrized bidisc.

All kernels are evaluated through the roots ``z = (z1, z2)`` and
``w = (w1, w2)`` of the two G2 points.  Writing

    D = (1 - z1 conj(w1)) (1 - z2 conj(w2)),   P = (1 - z1 conj(w2)) (1 - z2 conj(w1)),
    x = (z1 - z2) conj(w1 - w2) / D,           so that P = D (1 + x),

the weighted Bergman kernel is

    B(z, w) = P^(-lam) / (2 D) * E(x),   E(x) = ((1 + x)^lam - 1) / x
                                              = sum_n binom(lam, n + 1) x^n.

Every function accepting points works on scalars or on broadcastable numpy
arrays of ``(u1, u2)`` coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from ._cauchy import polarized_log_hessian
from .automorphisms import Disc2Point, G2Point, preimage_arrays, symmetrize
from .errors import (
    BranchTrackingError,
    CancellationError,
    DomainError,
    NonConvergenceError,
    UnsupportedPowerError,
)

__all__ = [
    "WeightedBergman",
    "Power",
    "SymmetricC",
    "DetCurvature",
    "MatrixCurvature",
    "Product",
    "KernelSpec",
    "EvalOptions",
    "SeriesAuditRecord",
    "binom",
    "parse_spec",
    "format_spec",
    "is_matrix_valued",
    "eval_bergman_raw",
    "eval_bergman_series",
    "eval_kernel",
    "eval_kernel_arrays",
    "eval_symmetric",
    "eval_power",
    "continued_log",
    "polarized_curvature",
    "eval_H",
    "h_coefficients",
    "h_tilde",
    "antidiagonal_H_coefficient",
    "antidiagonal_H_series",
    "royal_slice",
    "as_kernel_function",
]


def _positive(name, value, allow_zero=False):
    value = float(value)
    if not math.isfinite(value) or value < 0.0 or (value == 0.0 and not allow_zero):
        raise DomainError(f"{name} must be {'>= 0' if allow_zero else '> 0'}, got {value!r}")
    return value


@dataclass(frozen=True)
class WeightedBergman:
    """The weighted Bergman kernel ``B^(lam)``."""

    lam: float

    def __post_init__(self):
        object.__setattr__(self, "lam", _positive("lam", self.lam))


@dataclass(frozen=True)
class SymmetricC:
    """``C^(lam)``: the symmetrization of the product kernel on the bidisc."""

    lam: float

    def __post_init__(self):
        object.__setattr__(self, "lam", _positive("lam", self.lam))


@dataclass(frozen=True)
class Power:
    """The real power ``K^nu`` of a scalar kernel."""

    base: "KernelSpec"
    nu: float

    def __post_init__(self):
        object.__setattr__(self, "nu", _positive("nu", self.nu))
        if is_matrix_valued(self.base):
            raise DomainError("powers of matrix-valued kernels are not defined")


@dataclass(frozen=True)
class DetCurvature:
    """``det(B^(nu+2) curv(B))`` with ``B = B^(lam)``, polarized."""

    lam: float
    nu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lam", _positive("lam", self.lam))
        object.__setattr__(self, "nu", _positive("nu", self.nu, allow_zero=True))


@dataclass(frozen=True)
class MatrixCurvature:
    """The 2x2 matrix kernel ``B^(nu+2) curv(B)`` with ``B = B^(lam)``."""

    lam: float
    nu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lam", _positive("lam", self.lam))
        object.__setattr__(self, "nu", _positive("nu", self.nu, allow_zero=True))


@dataclass(frozen=True)
class Product:
    """Pointwise (Schur) product of scalar kernels."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise DomainError("a product needs at least one factor")
        if any(is_matrix_valued(f) for f in factors):
            raise DomainError("products of matrix-valued kernels are not supported")
        object.__setattr__(self, "factors", factors)


KernelSpec = Union[WeightedBergman, SymmetricC, Power, DetCurvature, MatrixCurvature, Product]


def is_matrix_valued(spec) -> bool:
    return isinstance(spec, MatrixCurvature)


@dataclass(frozen=True)
class EvalOptions:
    """Numerical knobs for kernel evaluation."""

    series_threshold: float = 1e-2
    series_terms: int = 200
    branch_path_steps: int = 32
    fd_step: float = 1e-4
    max_path_steps: int = 4096

    def __post_init__(self):
        if not 0.0 < self.series_threshold < 0.5:
            raise DomainError("series_threshold must lie in (0, 0.5)")
        if self.series_terms < 8:
            raise DomainError("series_terms must be at least 8")
        if self.branch_path_steps < 1:
            raise DomainError("branch_path_steps must be positive")


DEFAULT_OPTIONS = EvalOptions()


class SeriesAuditRecord(NamedTuple):
    """One coefficient of the ``H`` expansion with auxiliary values."""

    lam: float
    p: int
    coefficient: float
    helper_values: dict


# ----------------------------------------------------------------------------
# spec strings


_NAMES = {"bergman": WeightedBergman, "symC": SymmetricC}


def _params(text: str) -> dict:
    out = {}
    for item in filter(None, text.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise DomainError(f"malformed parameter {item!r}")
        key = {"lambda": "l", "lam": "l"}.get(key.strip(), key.strip())
        out[key] = float(val)
    return out


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == ";" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_spec(text: str) -> KernelSpec:
    """Parse a compact kernel string such as ``"power:bergman:l=2,nu=1.5"``.

    Grammar: ``bergman:l=L``, ``symC:l=L``, ``detcurv:l=L,nu=N``,
    ``matcurv:l=L,nu=N``, ``power:<spec>,nu=N`` and ``product:[<spec>;<spec>...]``.
    """
    text = text.strip()
    head, sep, rest = text.partition(":")
    if not sep:
        raise DomainError(f"malformed kernel spec {text!r}")
    try:
        if head == "power":
            base, sep, nu = rest.rpartition(",nu=")
            if not sep:
                raise DomainError(f"power spec needs ',nu=': {text!r}")
            return Power(parse_spec(base), float(nu))
        if head == "product":
            if not (rest.startswith("[") and rest.endswith("]")):
                raise DomainError(f"product spec needs brackets: {text!r}")
            return Product(tuple(parse_spec(p) for p in _split_top(rest[1:-1])))
        params = _params(rest)
        if head in _NAMES:
            return _NAMES[head](params["l"])
        if head == "detcurv":
            return DetCurvature(params["l"], params.get("nu", 0.0))
        if head == "matcurv":
            return MatrixCurvature(params["l"], params.get("nu", 0.0))
    except (KeyError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"malformed kernel spec {text!r}: {exc}") from exc
    raise DomainError(f"unknown kernel family {head!r}")


def format_spec(spec: KernelSpec) -> str:
    """Inverse of :func:`parse_spec`."""
    if isinstance(spec, WeightedBergman):
        return f"bergman:l={spec.lam:g}"
    if isinstance(spec, SymmetricC):
        return f"symC:l={spec.lam:g}"
    if isinstance(spec, DetCurvature):
        return f"detcurv:l={spec.lam:g},nu={spec.nu:g}"
    if isinstance(spec, MatrixCurvature):
        return f"matcurv:l={spec.lam:g},nu={spec.nu:g}"
    if isinstance(spec, Power):
        return f"power:{format_spec(spec.base)},nu={spec.nu:g}"
    if isinstance(spec, Product):
        return "product:[" + ";".join(format_spec(f) for f in spec.factors) + "]"
    raise DomainError(f"not a kernel spec: {spec!r}")


# ----------------------------------------------------------------------------
# weighted Bergman kernel


def binom(lam: float, k: int) -> float:
    """Generalized binomial coefficient by the falling-factorial product.

    Exact zeros are produced for integer ``lam`` and ``k > lam``.
    """
    out = 1.0
    for i in range(k):
        out *= (lam - i) / (i + 1)
    return out


def _binoms(lam: float, kmax: int) -> np.ndarray:
    out = np.empty(kmax + 1)
    out[0] = 1.0
    for i in range(kmax):
        out[i + 1] = out[i] * (lam - i) / (i + 1)
    return out


def _is_int(x: float) -> bool:
    return float(x).is_integer()


class _Parts(NamedTuple):
    D: np.ndarray
    x: np.ndarray
    log_p: np.ndarray
    log_r: np.ndarray


def _parts(z1, z2, w1, w2) -> _Parts:
    cw1, cw2 = np.conj(w1), np.conj(w2)
    l11 = np.log(1.0 - z1 * cw1)
    l22 = np.log(1.0 - z2 * cw2)
    l12 = np.log(1.0 - z1 * cw2)
    l21 = np.log(1.0 - z2 * cw1)
    D = (1.0 - z1 * cw1) * (1.0 - z2 * cw2)
    x = (z1 - z2) * (cw1 - cw2) / D
    log_p = l12 + l21
    # log(P/D) with principal per-factor branches; log1p(x) carries the
    # accuracy, the integer winding comes from the factor logarithms
    crude = log_p - l11 - l22
    fine = np.log1p(x)
    k = np.round((crude.imag - fine.imag) / (2.0 * np.pi))
    return _Parts(D, x, log_p, fine + 2j * np.pi * k)


def _closed_E(lam, parts: _Parts):
    return np.expm1(lam * parts.log_r) / parts.x


def _series_E(lam, x, opts: EvalOptions):
    x = np.asarray(x, dtype=complex)
    if _is_int(lam):
        coeffs = _binoms(lam, int(lam))[1:]
        total = np.zeros_like(x)
        for c in coeffs[::-1]:
            total = total * x + c
        return total
    total = np.zeros_like(x)
    power = np.ones_like(x)
    c = 1.0
    for n in range(opts.series_terms):
        c *= (lam - n) / (n + 1)  # binom(lam, n + 1)
        term = c * power
        total = total + term
        if np.all(np.abs(term) <= 1e-18 * np.abs(total)):
            return total
        power = power * x
    raise NonConvergenceError(
        f"series for B^({lam}) did not converge in {opts.series_terms} terms"
    )


def _bergman_z(lam, z1, z2, w1, w2, opts: EvalOptions = DEFAULT_OPTIONS):
    """Weighted Bergman kernel on the bidisc, routed per point."""
    z1, z2, w1, w2 = np.broadcast_arrays(
        *(np.asarray(a, dtype=complex) for a in (z1, z2, w1, w2))
    )
    parts = _parts(z1, z2, w1, w2)
    near = np.abs(z1 - z2) * np.abs(w1 - w2) < opts.series_threshold
    E = np.empty(z1.shape, dtype=complex)
    far = ~near
    if np.any(far):
        E[far] = _closed_E(lam, _Parts(*(p[far] for p in parts)))
    if np.any(near):
        xs = parts.x[near]
        if _is_int(lam):
            E[near] = _series_E(lam, xs, opts)
        else:
            small = np.abs(xs) <= 0.5
            En = np.empty(xs.shape, dtype=complex)
            if np.any(small):
                En[small] = _series_E(lam, xs[small], opts)
            if np.any(~small):
                sub = _Parts(*(p[near][~small] for p in parts))
                En[~small] = _closed_E(lam, sub)
            E[near] = En
    return np.exp(-lam * parts.log_p) / (2.0 * parts.D) * E


def _as_disc(z):
    if isinstance(z, Disc2Point) or len(z) == 2:
        return np.asarray(z[0], dtype=complex), np.asarray(z[1], dtype=complex)
    raise DomainError(f"expected a pair of disc points, got {z!r}")


def _unwrap(value):
    value = np.asarray(value)
    return complex(value) if value.ndim == 0 else value


def eval_bergman_raw(lam: float, z, w):
    """``B^(lam)`` on the bidisc from the two-term bracket formula.

    The bracket ``D^-lam - P^-lam`` is formed as ``P^-lam expm1(lam log(P/D))``
    so its difference is computed without subtracting two rounded numbers;
    powers use principal branches of each factor ``1 - z_i conj(w_j)``.

    Raises
    ------
    DomainError
        If ``(z1 - z2) conj(w1 - w2) = 0`` (use the series path).
    CancellationError
        If the two bracket terms agree to more than 12 digits.
    """
    lam = _positive("lam", lam)
    z1, z2 = _as_disc(z)
    w1, w2 = _as_disc(w)
    if np.any((z1 - z2) * np.conj(w1 - w2) == 0.0):
        raise DomainError("diagonal point: the bracket formula is 0/0, use the series path")
    parts = _parts(z1, z2, w1, w2)
    if np.any(np.abs(lam * parts.log_r) < 1e-12):
        raise CancellationError("bracket terms agree to more than 12 digits")
    return _unwrap(np.exp(-lam * parts.log_p) / (2.0 * parts.D) * _closed_E(lam, parts))


def eval_bergman_series(lam: float, z, w, opts: EvalOptions = DEFAULT_OPTIONS):
    """``B^(lam)`` on the bidisc from its expansion in ``x``.

    The sum terminates after ``lam`` terms for integer ``lam``.  For other
    ``lam`` it is summed while ``|x| <= 1/2`` and otherwise replaced by the
    equivalent closed form, since the series only converges for ``|x| < 1``.
    """
    lam = _positive("lam", lam)
    z1, z2 = _as_disc(z)
    w1, w2 = _as_disc(w)
    parts = _parts(z1, z2, w1, w2)
    x = np.atleast_1d(parts.x)
    if _is_int(lam) or np.all(np.abs(x) <= 0.5):
        E = _series_E(lam, parts.x, opts)
    else:
        raise NonConvergenceError("|x| > 1/2: the series path is not used here")
    return _unwrap(np.exp(-lam * parts.log_p) / (2.0 * parts.D) * E)


def royal_slice(lam: float, z, w) -> complex:
    """``B^(lam)((z, z), w) = lam / (2 (1 - z conj(w1))^(lam+1) (1 - z conj(w2))^(lam+1))``."""
    w1, w2 = _as_disc(w)
    return lam / (2.0 * (1.0 - z * np.conj(w1)) ** (lam + 1) * (1.0 - z * np.conj(w2)) ** (lam + 1))


def eval_symmetric(lam: float, u, v):
    """``C^(lam)(u, v) = (1/2) [prod (1 - z_i conj(w_i))^-lam + prod (1 - z_i conj(w_s(i)))^-lam]``."""
    lam = _positive("lam", lam)
    z1, z2 = preimage_arrays(*u)
    w1, w2 = preimage_arrays(*v)
    return _unwrap(_symmetric_z(lam, z1, z2, w1, w2))


def _symmetric_z(lam, z1, z2, w1, w2):
    cw1, cw2 = np.conj(w1), np.conj(w2)
    a = np.log(1.0 - z1 * cw1) + np.log(1.0 - z2 * cw2)
    b = np.log(1.0 - z1 * cw2) + np.log(1.0 - z2 * cw1)
    return 0.5 * (np.exp(-lam * a) + np.exp(-lam * b))


# ----------------------------------------------------------------------------
# dispatch


def _nonvanishing(spec) -> bool:
    if isinstance(spec, WeightedBergman):
        return True
    if isinstance(spec, Power):
        return _nonvanishing(spec.base)
    if isinstance(spec, Product):
        return all(_nonvanishing(f) for f in spec.factors)
    return False


def _integer_power(values, nu):
    return values ** int(nu)


def _scalar_g2(spec, u1, u2, v1, v2, opts):
    """Scalar kernel values on broadcastable G2 coordinate arrays."""
    if isinstance(spec, (WeightedBergman, SymmetricC)):
        z1, z2 = preimage_arrays(u1, u2)
        w1, w2 = preimage_arrays(v1, v2)
        if isinstance(spec, WeightedBergman):
            return _bergman_z(spec.lam, z1, z2, w1, w2, opts)
        return _symmetric_z(spec.lam, z1, z2, w1, w2)
    if isinstance(spec, Product):
        out = 1.0
        for f in spec.factors:
            out = out * _scalar_g2(f, u1, u2, v1, v2, opts)
        return out
    if isinstance(spec, Power):
        if _is_int(spec.nu):
            return _integer_power(_scalar_g2(spec.base, u1, u2, v1, v2, opts), spec.nu)
        if not _nonvanishing(spec.base):
            raise UnsupportedPowerError(
                f"non-integer power of {format_spec(spec.base)} refused: "
                "the base kernel is not known to be non-vanishing"
            )
        return np.exp(spec.nu * _continued_log_g2(spec.base, u1, u2, v1, v2, opts))
    if isinstance(spec, DetCurvature):
        return _curvature_kernel(spec, u1, u2, v1, v2, opts)
    raise DomainError(f"not a scalar kernel spec: {spec!r}")


def _chunked(fn, arrays, chunk=256):
    flat = [a.reshape(-1) for a in arrays]
    n = flat[0].size
    outs = [fn(*(a[i:i + chunk] for a in flat)) for i in range(0, n, chunk)]
    return outs


def _curvature_kernel(spec, u1, u2, v1, v2, opts):
    u1, u2, v1, v2 = np.broadcast_arrays(
        *(np.asarray(a, dtype=complex) for a in (u1, u2, v1, v2))
    )
    base = WeightedBergman(spec.lam)
    shape = u1.shape

    def f(a1, a2, b1, b2):
        return _scalar_g2(base, a1, a2, b1, b2, opts)

    def block(a1, a2, b1, b2):
        value, H = polarized_log_hessian(f, a1, a2, b1, b2)
        if isinstance(spec, DetCurvature):
            scale = _bergman_power(spec.lam, 2.0 * (spec.nu + 2.0), a1, a2, b1, b2, opts)
            return scale * (H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] * H[:, 1, 0])
        scale = _bergman_power(spec.lam, spec.nu + 2.0, a1, a2, b1, b2, opts)
        return scale[:, None, None] * H

    outs = _chunked(block, (u1, u2, v1, v2))
    out = np.concatenate(outs) if outs else np.empty(0)
    if isinstance(spec, MatrixCurvature):
        return out.reshape(shape + (2, 2))
    return out.reshape(shape)


def _bergman_power(lam, e, u1, u2, v1, v2, opts):
    base = WeightedBergman(lam)
    if _is_int(e):
        return _scalar_g2(base, u1, u2, v1, v2, opts) ** int(e)
    return np.exp(e * _continued_log_g2(base, u1, u2, v1, v2, opts))


def eval_kernel_arrays(spec: KernelSpec, u1, u2, v1, v2, opts: EvalOptions = DEFAULT_OPTIONS):
    """Vectorized kernel evaluation on G2 coordinate arrays.

    Scalar families return an array of the broadcast shape; matrix-valued
    families append two trailing axes of length 2.
    """
    u1, u2, v1, v2 = np.broadcast_arrays(
        *(np.asarray(a, dtype=complex) for a in (u1, u2, v1, v2))
    )
    preimage_arrays(u1, u2)
    preimage_arrays(v1, v2)
    if isinstance(spec, MatrixCurvature):
        return _curvature_kernel(spec, u1, u2, v1, v2, opts)
    return _scalar_g2(spec, u1, u2, v1, v2, opts)


def eval_kernel(spec: KernelSpec, u, v, opts: EvalOptions = DEFAULT_OPTIONS):
    """Evaluate a kernel at a pair of G2 points.

    ``u`` and ``v`` are ``(u1, u2)`` pairs of scalars or arrays.  Returns a
    complex number, a 2x2 matrix for :class:`MatrixCurvature`, or arrays
    when array coordinates are given.
    """
    out = eval_kernel_arrays(spec, u[0], u[1], v[0], v[1], opts)
    if isinstance(spec, MatrixCurvature):
        return out
    return _unwrap(out)


def as_kernel_function(kernel, opts: EvalOptions = DEFAULT_OPTIONS):
    """Return a vectorized ``f(u1, u2, v1, v2)`` for a spec or a plain callable.

    Plain callables let the numerical tools run on synthetic kernels (sums,
    negative controls) that are not members of a named family.
    """
    if callable(kernel) and not isinstance(
        kernel, (WeightedBergman, SymmetricC, Power, DetCurvature, MatrixCurvature, Product)
    ):
        def f(u1, u2, v1, v2):
            args = np.broadcast_arrays(
                *(np.asarray(a, dtype=complex) for a in (u1, u2, v1, v2))
            )
            return np.asarray(kernel(*args), dtype=complex)

        return f

    def g(u1, u2, v1, v2):
        return eval_kernel_arrays(kernel, u1, u2, v1, v2, opts)

    return g


# ----------------------------------------------------------------------------
# powers by path continuation


def _continued_log_g2(spec, u1, u2, v1, v2, opts: EvalOptions):
    """Continuous ``log K(u, v)`` along ``t -> (t z, t w)`` from ``t = 0``.

    In G2 coordinates the path is ``(t u1, t^2 u2)``, which stays in G2.  The
    logarithm starts from the positive value ``K(0, 0)``; the subdivision is
    doubled for any pair whose consecutive phase jumps reach ``pi / 2``.
    """
    u1, u2, v1, v2 = np.broadcast_arrays(
        *(np.asarray(a, dtype=complex) for a in (u1, u2, v1, v2))
    )
    shape = u1.shape
    flat = [a.reshape(-1) for a in (u1, u2, v1, v2)]
    out = np.empty(flat[0].shape, dtype=complex)
    todo = np.arange(flat[0].size)
    steps = opts.branch_path_steps
    while todo.size:
        if steps > opts.max_path_steps:
            raise BranchTrackingError(
                f"phase tracking needs more than {opts.max_path_steps} steps"
            )
        t = np.linspace(0.0, 1.0, steps + 1)[:, None]
        a1, a2, b1, b2 = (f[todo][None, :] for f in flat)
        K = _scalar_g2(spec, t * a1, t * t * a2, t * b1, t * t * b2, opts)
        K0 = K[0]
        if np.any(np.abs(K0.imag) > 1e-12 * np.abs(K0)) or np.any(K0.real <= 0.0):
            raise BranchTrackingError("kernel is not positive at the origin")
        jumps = np.angle(K[1:] / K[:-1])
        ok = np.max(np.abs(jumps), axis=0) < 0.5 * np.pi
        winding = np.sum(jumps, axis=0)[ok]
        end = np.log(K[-1][ok])
        k = np.round((winding - end.imag) / (2.0 * np.pi))
        out[todo[ok]] = end + 2j * np.pi * k
        todo = todo[~ok]
        steps *= 2
    return out.reshape(shape)


def continued_log(spec: KernelSpec, u, v, opts: EvalOptions = DEFAULT_OPTIONS):
    """Branch-continued logarithm of a scalar kernel (see :func:`eval_power`)."""
    return _unwrap(_continued_log_g2(spec, u[0], u[1], v[0], v[1], opts))


def eval_power(base: KernelSpec, nu: float, u, v, opts: EvalOptions = DEFAULT_OPTIONS):
    """``K(u, v)^nu`` with the logarithm continued along the ray from the origin.

    Raises
    ------
    UnsupportedPowerError
        For non-integer powers of kernels not known to be non-vanishing
        (``C^(lam)``, curvature kernels).
    BranchTrackingError
        If the subdivision cap is hit.
    """
    nu = _positive("nu", nu)
    if not _is_int(nu) and not _nonvanishing(base):
        raise UnsupportedPowerError(
            f"non-integer power of {format_spec(base)} refused: "
            "the base kernel is not known to be non-vanishing"
        )
    logk = _continued_log_g2(base, u[0], u[1], v[0], v[1], opts)
    return _unwrap(np.exp(nu * logk))


def polarized_curvature(spec: KernelSpec, u, v, opts: EvalOptions = DEFAULT_OPTIONS):
    """``d_{u_i} dbar_{v_j} log K(u, v)`` by Cauchy sums; shape ``(..., 2, 2)``."""
    if is_matrix_valued(spec):
        raise DomainError("curvature of a matrix-valued kernel is not defined")

    def f(a1, a2, b1, b2):
        return _scalar_g2(spec, a1, a2, b1, b2, opts)

    u1, u2, v1, v2 = np.broadcast_arrays(
        *(np.asarray(a, dtype=complex) for a in (u[0], u[1], v[0], v[1]))
    )
    _, H = polarized_log_hessian(f, u1, u2, v1, v2)
    return H


# ----------------------------------------------------------------------------
# the H function and its expansion


def h_tilde(lam: float, p: int) -> float:
    """Coefficient of ``|z1 - z2|^(2p-4)`` in ``H``, stripped of the point factor.

    ``-lam C(lam, p) + (lam/2) C(lam+1, p) + C(lam, p+1)
    + (1/2) sum_{m+n=p, m,n>=1} C(lam, m+1) C(lam+1, n)``; valid for ``p >= 2``
    where ``p = 2`` gives the leading coefficient ``lam (lam+1)(2 lam+1)/12``.
    """
    if p < 2:
        raise DomainError("p must be at least 2")
    a = _binoms(lam, p + 1)
    b = _binoms(lam + 1.0, p)
    s = sum(a[m + 1] * b[p - m] for m in range(1, p))
    return -lam * a[p] + 0.5 * lam * b[p] + a[p + 1] + 0.5 * s


def h_coefficients(lam: float, p: int) -> SeriesAuditRecord:
    """The combinatorial coefficient ``h_p`` (``p >= 3``) of the ``H`` expansion."""
    lam = _positive("lam", lam)
    if p < 3:
        raise DomainError("h_p is defined for p >= 3")
    lead = lam * (lam + 1.0) * (2.0 * lam + 1.0) / 12.0
    return SeriesAuditRecord(
        lam,
        int(p),
        h_tilde(lam, p),
        {"leading_coefficient": lead, "leading_from_sum": h_tilde(lam, 2)},
    )


def _H_series(lam, y, ab, opts):
    total = np.zeros_like(y)
    power = np.ones_like(y)
    for p in range(2, opts.series_terms + 2):
        term = h_tilde(lam, p) * power
        total = total + term
        if np.all(np.abs(term) <= 1e-18 * np.abs(total)) and p > 2:
            break
        power = power * y
    else:
        raise NonConvergenceError("H series did not converge")
    return total / (ab * ab * (1.0 + y) ** lam)


def eval_H(lam: float, z, opts: EvalOptions = DEFAULT_OPTIONS, y_switch: float = 0.1):
    """The function ``H^(lam)`` on the bidisc diagonal ``(z, z)``.

    With ``a = 1 - |z1|^2``, ``b = 1 - |z2|^2``, ``c = |1 - conj(z1) z2|^2`` and
    ``y = |z1 - z2|^2 / (a b)``, the quotient
    ``[B(s(z), s(z)) (c^(lam+1) + (ab)^(lam+1)) - lam] / |z1 - z2|^4`` is used
    for ``y >= y_switch`` and the expansion
    ``sum_{p>=2} h_p y^(p-2) / ((ab)^2 (1 + y)^lam)`` below it.
    """
    lam = _positive("lam", lam)
    z1, z2 = _as_disc(z)
    z1, z2 = np.broadcast_arrays(z1, z2)
    a = 1.0 - np.abs(z1) ** 2
    b = 1.0 - np.abs(z2) ** 2
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise DomainError("point outside the bidisc")
    d = np.abs(z1 - z2) ** 2
    ab = a * b
    y = d / ab
    out = np.empty(z1.shape)
    near = y < y_switch
    if np.any(near):
        out[near] = _H_series(lam, y[near], ab[near], opts)
    if np.any(~near):
        f = ~near
        c = np.abs(1.0 - np.conj(z1[f]) * z2[f]) ** 2
        B = _bergman_z(lam, z1[f], z2[f], z1[f], z2[f], opts).real
        out[f] = (B * (c ** (lam + 1.0) + ab[f] ** (lam + 1.0)) - lam) / d[f] ** 2
    return float(out) if out.ndim == 0 else out


def _rising(x: float, n: int) -> float:
    out = 1.0
    for i in range(n):
        out *= x + i
    return out


def antidiagonal_H_coefficient(lam: float, p: int) -> float:
    """Coefficient of ``|z|^(4(p-1))`` in ``H`` along ``(z, -z)``, ``p >= 1``.

    ``(1/32) sum_{n+m=p} (2 lam)_(2n+1) / (2n+1)! * C(2 lam + 2, 2m)``
    with the rising factorial ``(x)_k``.
    """
    if p < 1:
        raise DomainError("p must be at least 1")
    total = 0.0
    for n in range(p + 1):
        m = p - n
        total += _rising(2.0 * lam, 2 * n + 1) / math.factorial(2 * n + 1) * binom(
            2.0 * lam + 2.0, 2 * m
        )
    return total / 32.0


def antidiagonal_H_series(lam: float, z, terms: int = 60) -> float:
    """``H`` at ``(z, -z)`` summed from :func:`antidiagonal_H_coefficient`."""
    s = abs(z) ** 4
    return sum(antidiagonal_H_coefficient(lam, p) * s ** (p - 1) for p in range(1, terms + 1))


def disc_pair(u: G2Point) -> Disc2Point:
    z1, z2 = preimage_arrays(*u)
    return Disc2Point(_unwrap(z1), _unwrap(z2))


def g2_pair(z: Disc2Point) -> G2Point:
    return symmetrize(*z)
