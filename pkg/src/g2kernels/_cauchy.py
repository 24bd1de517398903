"""Mixed second log-derivatives of sesquiholomorphic functions by Cauchy sums.

For ``F(u, v)`` holomorphic in ``u`` and antiholomorphic in ``v`` the function
``g(a, b) = F(u + a e_i, v + conj(b) e_j)`` is holomorphic in ``(a, b)``.  Its
Taylor coefficients are read off a 2-D FFT of samples on two small circles,
which gives ``d_{u_i} dbar_{v_j} log F = c11/c00 - c10 c01 / c00^2`` without
any logarithm, so no branch choice enters.
"""

from __future__ import annotations

import numpy as np

from .automorphisms import in_g2

N_POINTS = 32
_RHO0 = 0.05
_CHECK = 24


def contour_radius(u1, u2, rho0: float = _RHO0, margin_factor: float = 4.0):
    """Per-point radius ``rho`` such that the circle of radius ``4 rho`` stays in G2.

    The check is made in both coordinate directions.
    """
    u1 = np.atleast_1d(np.asarray(u1, dtype=complex))
    u2 = np.atleast_1d(np.asarray(u2, dtype=complex))
    rho = np.full(u1.shape, rho0)
    ring = np.exp(2j * np.pi * np.arange(_CHECK) / _CHECK)
    for _ in range(60):
        a = margin_factor * rho[..., None] * ring
        ok = np.all(in_g2(u1[..., None] + a, u2[..., None]), axis=-1)
        ok &= np.all(in_g2(u1[..., None], u2[..., None] + a), axis=-1)
        if ok.all():
            return rho
        rho = np.where(ok, rho, 0.5 * rho)
    raise ValueError("point too close to the boundary of G2 for contour differentiation")


def polarized_log_hessian(f, u1, u2, v1, v2, rho_u=None, rho_v=None, n=N_POINTS):
    """Return ``(value, H)`` with ``H[..., i, j] = d_{u_i} dbar_{v_j} log f(u, v)``.

    Parameters
    ----------
    f : callable
        Vectorized ``f(u1, u2, v1, v2)``, holomorphic in ``u`` and
        antiholomorphic in ``v``.
    u1, u2, v1, v2 : array_like
        Broadcastable complex arrays of base points.
    rho_u, rho_v : array_like, optional
        Circle radii per point; chosen by :func:`contour_radius` if omitted.

    Returns
    -------
    value : ndarray
        ``f(u, v)`` as the mean of the samples (the ``c00`` coefficient).
    H : ndarray
        Array of shape ``(..., 2, 2)``.
    """
    u1, u2, v1, v2 = np.broadcast_arrays(
        *(np.asarray(x, dtype=complex) for x in (u1, u2, v1, v2))
    )
    shape = u1.shape
    u1, u2, v1, v2 = (x.reshape(-1) for x in (u1, u2, v1, v2))
    if rho_u is None:
        rho_u = contour_radius(u1, u2)
    if rho_v is None:
        rho_v = contour_radius(v1, v2)
    rho_u = np.broadcast_to(np.asarray(rho_u, dtype=float).reshape(-1), u1.shape)
    rho_v = np.broadcast_to(np.asarray(rho_v, dtype=float).reshape(-1), u1.shape)

    w = np.exp(2j * np.pi * np.arange(n) / n)
    a = (rho_u[:, None] * w)[:, :, None]
    b = np.conj(rho_v[:, None] * w)[:, None, :]
    H = np.empty(u1.shape + (2, 2), dtype=complex)
    value = None
    for i in range(2):
        U = [u1[:, None, None], u2[:, None, None]]
        U[i] = U[i] + a
        for j in range(2):
            V = [v1[:, None, None], v2[:, None, None]]
            V[j] = V[j] + b
            G = f(U[0], U[1], V[0], V[1])
            F = np.fft.fft2(G, axes=(1, 2)) / (n * n)
            c00 = F[:, 0, 0]
            c10 = F[:, 1, 0] / rho_u
            c01 = F[:, 0, 1] / rho_v
            c11 = F[:, 1, 1] / (rho_u * rho_v)
            H[:, i, j] = c11 / c00 - c10 * c01 / (c00 * c00)
            if value is None:
                value = c00
    return value.reshape(shape), H.reshape(shape + (2, 2))
