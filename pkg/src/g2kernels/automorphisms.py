"""Moebius maps, the symmetrization map and the automorphism group of G2.

Every automorphism of the symmetrized bidisc is induced by a Moebius map
``phi(z) = t (alpha - z) / (1 - conj(alpha) z)`` acting on both roots of
``x^2 - u1 x + u2``.  Writing ``d = (1 - conj(alpha) z1)(1 - conj(alpha) z2)``
the induced map is rational in ``u`` and needs no root finding::

    d  = 1 - conj(a) u1 + conj(a)^2 u2
    N1 = 2 a - (1 + |a|^2) u1 + 2 conj(a) u2
    N2 = a^2 - a u1 + u2
    phi~(u) = (t N1 / d, t^2 N2 / d)

The functions here accept scalars or numpy arrays for the point arguments.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NotInG2Error

__all__ = [
    "G2Point",
    "Disc2Point",
    "MoebiusMap",
    "AutomorphismMap",
    "CocycleValue",
    "FundamentalDecomposition",
    "Stabilizer",
    "check_disc",
    "mobius_apply",
    "mobius_derivative",
    "symmetrize",
    "solve_preimage",
    "preimage_arrays",
    "in_g2",
    "aut_apply",
    "aut_jacobian",
    "aut_det_jacobian",
    "cocycle_J",
    "log_cocycle",
    "log_det_jacobian",
    "stabilizer",
    "to_fundamental",
    "random_moebius",
    "random_g2_points",
]


class Disc2Point(NamedTuple):
    """A point ``(z1, z2)`` of the bidisc."""

    z1: complex
    z2: complex


class G2Point(NamedTuple):
    """A point ``(u1, u2) = (z1 + z2, z1 z2)`` of the symmetrized bidisc."""

    u1: complex
    u2: complex


def check_disc(z, margin: float = 0.0):
    """Raise :class:`DomainError` unless every entry of `z` has ``|z| < 1 - margin``."""
    if np.any(~(np.abs(z) < 1.0 - margin)):
        raise DomainError(f"point outside the open unit disc: {z!r}")
    return z


@dataclass(frozen=True)
class MoebiusMap:
    """The disc automorphism ``z -> t (alpha - z) / (1 - conj(alpha) z)``.

    The identity is ``MoebiusMap(-1, 0)``; rotations ``z -> T z`` are
    ``MoebiusMap(-T, 0)``; the involution swapping 0 and ``alpha`` has ``t = 1``.
    """

    t: complex = -1.0
    alpha: complex = 0.0

    def __post_init__(self):
        t = complex(self.t)
        alpha = complex(self.alpha)
        if abs(abs(t) - 1.0) > 1e-14:
            raise DomainError(f"|t| must be 1, got {abs(t)!r}")
        if not abs(alpha) < 1.0:
            raise DomainError(f"alpha must lie in the open disc, got {alpha!r}")
        object.__setattr__(self, "t", t / abs(t))
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(-1.0, 0.0)

    @classmethod
    def rotation(cls, T: complex) -> "MoebiusMap":
        """The map ``z -> T z`` with ``|T| = 1``."""
        return cls(-complex(T), 0.0)

    @classmethod
    def involution(cls, alpha: complex) -> "MoebiusMap":
        """The involution ``z -> (alpha - z) / (1 - conj(alpha) z)``."""
        return cls(1.0, alpha)

    def __call__(self, z):
        return mobius_apply(self, z)

    def derivative(self, z):
        return mobius_derivative(self, z)

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.t.conjugate(), self.t * self.alpha)

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        """Return ``self o other``."""
        a = other.inverse()(self.alpha)
        # the composite sends a to 0 and has derivative -t/(1-|a|^2) there
        deriv = self.derivative(other(a)) * other.derivative(a)
        t = -deriv * (1.0 - abs(a) ** 2)
        return MoebiusMap(t / abs(t), a)

    def is_identity(self, tol: float = 1e-14) -> bool:
        return abs(self.alpha) <= tol and abs(self.t + 1.0) <= tol


def mobius_apply(phi: MoebiusMap, z):
    """Evaluate ``t (alpha - z) / (1 - conj(alpha) z)``."""
    check_disc(z)
    return phi.t * (phi.alpha - z) / (1.0 - np.conj(phi.alpha) * z)


def mobius_derivative(phi: MoebiusMap, z):
    """Evaluate ``t (|alpha|^2 - 1) / (1 - conj(alpha) z)^2``."""
    check_disc(z)
    a = phi.alpha
    return phi.t * (abs(a) ** 2 - 1.0) / (1.0 - np.conj(a) * z) ** 2


def symmetrize(z1, z2=None) -> G2Point:
    """Map ``(z1, z2)`` to ``(z1 + z2, z1 z2)``."""
    if z2 is None:
        z1, z2 = z1
    return G2Point(z1 + z2, z1 * z2)


def _roots(u1, u2):
    # numerically stable quadratic roots of x^2 - u1 x + u2
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    sq = np.sqrt(u1 * u1 - 4.0 * u2)
    sgn = np.where((np.conj(u1) * sq).real >= 0.0, 1.0, -1.0)
    q = 0.5 * (u1 + sgn * sq)
    # for tiny |q| both roots are tiny and the sum rule is accurate
    safe = np.abs(q) > 1e-150
    other = np.where(safe, u2 / np.where(safe, q, 1.0), u1 - q)
    return q, other


def _canonical_order(ra, rb):
    # descending lexicographic order on (re, im)
    swap = (ra.real < rb.real) | ((ra.real == rb.real) & (ra.imag < rb.imag))
    return np.where(swap, rb, ra), np.where(swap, ra, rb)


def preimage_arrays(u1, u2, margin: float = 0.0):
    """Vectorized :func:`solve_preimage` returning ``(z1, z2)`` arrays."""
    ra, rb = _roots(u1, u2)
    bad = ~((np.abs(ra) < 1.0 - margin) & (np.abs(rb) < 1.0 - margin))
    if np.any(bad):
        idx = np.flatnonzero(np.atleast_1d(bad))[0]
        raise NotInG2Error(
            f"point not in G2: roots {complex(np.atleast_1d(ra)[idx])}, "
            f"{complex(np.atleast_1d(rb)[idx])}"
        )
    return _canonical_order(ra, rb)


def in_g2(u1, u2, margin: float = 0.0):
    """Boolean mask of membership in G2 (strict, optionally with a margin)."""
    ra, rb = _roots(u1, u2)
    return (np.abs(ra) < 1.0 - margin) & (np.abs(rb) < 1.0 - margin)


def solve_preimage(u: G2Point, margin: float = 0.0) -> Disc2Point:
    """Return the roots of ``x^2 - u1 x + u2`` in canonical order.

    Roots are ordered descending lexicographically on ``(re, im)``.

    Raises
    ------
    NotInG2Error
        If a root has modulus ``>= 1 - margin``.
    """
    z1, z2 = preimage_arrays(complex(u[0]), complex(u[1]), margin)
    return Disc2Point(complex(z1), complex(z2))


@dataclass(frozen=True)
class AutomorphismMap:
    """The automorphism of G2 induced by a Moebius map."""

    base: MoebiusMap = field(default_factory=MoebiusMap.identity)

    @classmethod
    def identity(cls) -> "AutomorphismMap":
        return cls(MoebiusMap.identity())

    @classmethod
    def rotation(cls, T: complex) -> "AutomorphismMap":
        return cls(MoebiusMap.rotation(T))

    @classmethod
    def involution(cls, alpha: complex) -> "AutomorphismMap":
        return cls(MoebiusMap.involution(alpha))

    def compose(self, other: "AutomorphismMap") -> "AutomorphismMap":
        """Return ``self o other``."""
        return AutomorphismMap(self.base.compose(other.base))

    def inverse(self) -> "AutomorphismMap":
        return AutomorphismMap(self.base.inverse())

    def __call__(self, u):
        return aut_apply(self, u)


def _parts(g: AutomorphismMap, u1, u2):
    t, a = g.base.t, g.base.alpha
    ac = a.conjugate()
    d = 1.0 - ac * u1 + ac * ac * u2
    n1 = 2.0 * a - (1.0 + abs(a) ** 2) * u1 + 2.0 * ac * u2
    n2 = a * a - a * u1 + u2
    return t, a, ac, d, n1, n2


def _check_g2(u1, u2):
    if np.any(~in_g2(u1, u2)):
        raise NotInG2Error(f"point not in G2: ({u1!r}, {u2!r})")


def aut_apply(g: AutomorphismMap, u, check: bool = True) -> G2Point:
    """Apply the induced automorphism: ``s(z1, z2) -> s(phi(z1), phi(z2))``."""
    u1, u2 = u
    if check:
        _check_g2(u1, u2)
    t, _, _, d, n1, n2 = _parts(g, u1, u2)
    return G2Point(t * n1 / d, t * t * n2 / d)


def aut_jacobian(g: AutomorphismMap, u, check: bool = True):
    """Jacobian ``D[i, j] = d f_i / d u_j`` of the induced automorphism.

    Returns an array of shape ``(..., 2, 2)``.
    """
    u1, u2 = u
    if check:
        _check_g2(u1, u2)
    t, a, ac, d, n1, n2 = _parts(g, u1, u2)
    d2 = d * d
    out = np.empty(np.broadcast(u1, u2).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = t * (-(1.0 + abs(a) ** 2) * d + ac * n1) / d2
    out[..., 0, 1] = t * (2.0 * ac * d - ac * ac * n1) / d2
    out[..., 1, 0] = t * t * (-a * d + ac * n2) / d2
    out[..., 1, 1] = t * t * (d - ac * ac * n2) / d2
    return out


def aut_det_jacobian(g: AutomorphismMap, u, check: bool = True):
    """``det D phi~(u)``, computed from the divided-difference product form.

    The divided difference ``(phi(z2) - phi(z1)) / (z2 - z1)`` equals
    ``t (|a|^2 - 1) / ((1 - conj(a) z1)(1 - conj(a) z2))``, so the determinant
    is ``t^3 (|a|^2 - 1)^3 / d^3`` with no special case on the royal variety.
    """
    u1, u2 = u
    if check:
        _check_g2(u1, u2)
    t, a, _, d, _, _ = _parts(g, u1, u2)
    return (t * (abs(a) ** 2 - 1.0) / d) ** 3


def _log_const(g: AutomorphismMap) -> complex:
    # log of t (|a|^2 - 1) = (-t)(1 - |a|^2); zero at the identity
    return cmath.log(-g.base.t) + math.log1p(-abs(g.base.alpha) ** 2)


def log_cocycle(g: AutomorphismMap, u, check: bool = True):
    """Continuous logarithm of ``phi'(z1) phi'(z2)``.

    Uses ``2 c - 2 log(1 - conj(a) z1) - 2 log(1 - conj(a) z2)`` where each
    factor has positive real part, so the principal logarithm is continuous
    in the group parameter and vanishes at the identity.
    """
    u1, u2 = u
    if check:
        _check_g2(u1, u2)
    z1, z2 = preimage_arrays(u1, u2)
    ac = g.base.alpha.conjugate()
    return 2.0 * _log_const(g) - 2.0 * (np.log(1.0 - ac * z1) + np.log(1.0 - ac * z2))


def log_det_jacobian(g: AutomorphismMap, u, check: bool = True):
    """Continuous logarithm of ``det D phi~(u)``, normalized like :func:`log_cocycle`."""
    u1, u2 = u
    if check:
        _check_g2(u1, u2)
    z1, z2 = preimage_arrays(u1, u2)
    ac = g.base.alpha.conjugate()
    return 3.0 * _log_const(g) - 3.0 * (np.log(1.0 - ac * z1) + np.log(1.0 - ac * z2))


class CocycleValue(NamedTuple):
    """``value = phi'(z1) phi'(z2)`` together with ``det D phi~``."""

    value: complex
    det_jacobian: complex


def cocycle_J(g: AutomorphismMap, u, check: bool = True) -> CocycleValue:
    """The Jacobian cocycle ``phi'(z1) phi'(z2)`` and the Jacobian determinant.

    Both are rational in ``u``: ``value = t^2 (|a|^2-1)^2 / d^2`` and
    ``det = t^3 (|a|^2-1)^3 / d^3``, so ``det^2 = value^3`` exactly.
    """
    u1, u2 = u
    if check:
        _check_g2(u1, u2)
    t, a, _, d, _, _ = _parts(g, u1, u2)
    base = t * (abs(a) ** 2 - 1.0) / d
    return CocycleValue(base * base, base ** 3)


@dataclass(frozen=True)
class Stabilizer:
    """Stabilizer of the fundamental-set point ``(r, 0)``.

    For ``r > 0`` it is the two-element group ``{id, phi~_r}``; for ``r = 0``
    it is the circle of rotations, exposed through :meth:`sample`.
    """

    r: float
    elements: tuple = ()

    @property
    def is_rotation_family(self) -> bool:
        return self.r == 0.0

    def member(self, T: complex) -> AutomorphismMap:
        """The rotation by ``T`` (only for ``r = 0``)."""
        if not self.is_rotation_family:
            raise DomainError("the stabilizer of (r, 0) with r > 0 is finite")
        return AutomorphismMap.rotation(T)

    def sample(self, n: int = 8) -> list[AutomorphismMap]:
        if not self.is_rotation_family:
            return list(self.elements)
        return [self.member(cmath.exp(2j * math.pi * k / n)) for k in range(n)]


def stabilizer(r: float) -> Stabilizer:
    """Return the stabilizer of ``(r, 0)`` for ``0 <= r < 1``."""
    r = float(r)
    if not 0.0 <= r < 1.0:
        raise DomainError(f"r must lie in [0, 1), got {r!r}")
    if r == 0.0:
        return Stabilizer(0.0)
    return Stabilizer(r, (AutomorphismMap.identity(), AutomorphismMap.involution(r)))


class FundamentalDecomposition(NamedTuple):
    """``u = g(r, 0)`` with ``g = phi~_{z1} o rotation(e^{i theta})``."""

    r: float
    theta: float
    g: AutomorphismMap
    preimage: Disc2Point


def to_fundamental(u, swap: bool = False) -> FundamentalDecomposition:
    """Decompose a point of G2 as the image of a fundamental-set point.

    With ``w = (z1 - z2) / (1 - conj(z1) z2) = r e^{i theta}`` the map
    ``g = phi~_{z1} o rotation(e^{i theta})`` sends ``(r, 0)`` to `u`.  Points
    already on the fundamental set return the identity.  ``swap=True`` uses
    the other root ordering, which yields a different but equally valid `g`.
    """
    u1, u2 = complex(u[0]), complex(u[1])
    z1, z2 = solve_preimage(G2Point(u1, u2))
    if u2 == 0.0 and u1.imag == 0.0 and u1.real >= 0.0 and not swap:
        return FundamentalDecomposition(
            u1.real, 0.0, AutomorphismMap.identity(), Disc2Point(z1, z2)
        )
    if swap:
        z1, z2 = z2, z1
    w = (z1 - z2) / (1.0 - z1.conjugate() * z2)
    r = abs(w)
    theta = cmath.phase(w) % (2.0 * math.pi) if r > 0.0 else 0.0
    g = AutomorphismMap.involution(z1).compose(
        AutomorphismMap.rotation(cmath.exp(1j * theta))
    )
    return FundamentalDecomposition(r, theta, g, Disc2Point(z1, z2))


def random_moebius(rng: np.random.Generator, radius: float = 0.9) -> MoebiusMap:
    """A random Moebius map with ``|alpha| < radius`` and uniform ``t``."""
    alpha = radius * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
    t = cmath.exp(2j * math.pi * rng.uniform())
    return MoebiusMap(t, alpha)


def random_g2_points(rng: np.random.Generator, n: int, radius: float = 0.9):
    """``n`` random points of G2 as ``(u1, u2)`` arrays, from roots in ``|z| < radius``."""
    z = radius * np.sqrt(rng.uniform(size=(2, n))) * np.exp(
        2j * np.pi * rng.uniform(size=(2, n))
    )
    return z[0] + z[1], z[0] * z[1]
