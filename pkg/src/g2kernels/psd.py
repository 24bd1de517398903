"""Gram-matrix positivity probes and Wallach-set scans.

A finite psd verdict is evidence only: it is consistent with the kernel
being non-negative definite, never a proof of it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .automorphisms import G2Point, in_g2, random_g2_points
from .errors import DomainError, NumericalError
from .kernels import (
    DEFAULT_OPTIONS,
    EvalOptions,
    Power,
    WeightedBergman,
    as_kernel_function,
    eval_kernel_arrays,
    is_matrix_valued,
)

__all__ = [
    "SampleSet",
    "PSDReport",
    "gram",
    "psd_check",
    "wallach_probe",
    "MAX_POINTS",
]

MAX_POINTS = 64
_MIN_SEPARATION = 1e-8


@dataclass(frozen=True)
class SampleSet:
    """Distinct points of G2 together with their provenance."""

    points: tuple
    seed: int | None = None
    scheme: str = "random"

    def __post_init__(self):
        pts = tuple(G2Point(complex(p[0]), complex(p[1])) for p in self.points)
        object.__setattr__(self, "points", pts)
        if self.scheme not in ("grid", "random", "file"):
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if not pts:
            raise DomainError("sample must be nonempty")
        u1, u2 = self.arrays()
        if not np.all(in_g2(u1, u2)):
            raise DomainError("all sample points must lie in G2")
        if len(pts) > 1:
            d = np.hypot(np.abs(u1[:, None] - u1[None, :]), np.abs(u2[:, None] - u2[None, :]))
            d[np.diag_indices_from(d)] = np.inf
            if d.min() <= _MIN_SEPARATION:
                raise DomainError("sample points must be pairwise distinct")

    def __len__(self):
        return len(self.points)

    def arrays(self):
        return (
            np.array([p.u1 for p in self.points], dtype=complex),
            np.array([p.u2 for p in self.points], dtype=complex),
        )

    @classmethod
    def random(cls, n: int, seed: int = 7, radius: float = 0.9) -> "SampleSet":
        """``n`` points from roots uniform in the disc of the given radius."""
        u1, u2 = random_g2_points(np.random.default_rng(seed), n, radius)
        return cls(tuple(zip(u1, u2)), seed, "random")

    @classmethod
    def grid(cls, n: int, radius: float = 0.8) -> "SampleSet":
        """``n`` points from a polar grid of root pairs, symmetrized and deduped.

        The disc grid has ``m`` radii and ``m`` angles, with ``m`` grown until
        there are at least ``n`` distinct images; ``n`` of them are then taken
        at evenly spaced indices.
        """
        if n < 1:
            raise DomainError("n must be positive")
        m = 1
        while True:
            radii = radius * np.arange(m) / max(m - 1, 1) if m > 1 else np.zeros(1)
            angles = 2 * np.pi * np.arange(m) / m
            disc = np.unique(np.round((radii[:, None] * np.exp(1j * angles)[None, :]).ravel(), 12))
            i, j = np.triu_indices(disc.size)
            u1 = disc[i] + disc[j]
            u2 = disc[i] * disc[j]
            seen = {}
            for k, pt in enumerate(zip(np.round(u1, 10), np.round(u2, 10))):
                seen.setdefault(pt, k)
            first = np.array(sorted(seen.values()))
            if first.size >= n:
                pick = first[np.linspace(0, first.size - 1, n).round().astype(int)]
                return cls(tuple(zip(u1[pick], u2[pick])), None, "grid")
            m += 1

    @classmethod
    def from_file(cls, path) -> "SampleSet":
        """Read ``re(u1),im(u1),re(u2),im(u2)`` rows from a CSV file."""
        pts = []
        with open(Path(path), newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                if len(row) != 4:
                    raise DomainError(f"expected 4 columns, got {len(row)}")
                a, b, c, d = (float(x) for x in row)
                pts.append((complex(a, b), complex(c, d)))
        return cls(tuple(pts), None, "file")

    def to_file(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            for p in self.points:
                w.writerow([repr(p.u1.real), repr(p.u1.imag), repr(p.u2.real), repr(p.u2.imag)])


class PSDReport(NamedTuple):
    n: int
    min_eig: float
    max_eig: float
    verdict: str
    tol: float


def _points_of(sample):
    if isinstance(sample, SampleSet):
        return sample
    return SampleSet(tuple(sample), None, "file")


def gram(spec, sample, opts: EvalOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Gram matrix ``G[i, j] = K(w_i, w_j)``.

    For matrix-valued kernels the result is the ``2n x 2n`` block matrix
    with block ``(i, j)`` equal to ``K(w_i, w_j)``.  Only the upper triangle
    is evaluated; the lower one is its mirror, so ``G`` is exactly Hermitian.
    """
    sample = _points_of(sample)
    n = len(sample)
    if n > MAX_POINTS:
        raise DomainError(f"Gram size capped at {MAX_POINTS} points")
    u1, u2 = sample.arrays()
    i, j = np.triu_indices(n)
    if is_matrix_valued(spec):
        vals = eval_kernel_arrays(spec, u1[i], u2[i], u1[j], u2[j], opts)
        blocks = np.zeros((n, n, 2, 2), dtype=complex)
        blocks[i, j] = vals
        blocks[j, i] = np.conj(np.swapaxes(vals, -1, -2))
        d = np.arange(n)
        blocks[d, d] = 0.5 * (blocks[d, d] + np.conj(np.swapaxes(blocks[d, d], -1, -2)))
        return blocks.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)
    K = as_kernel_function(spec, opts)
    vals = K(u1[i], u2[i], u1[j], u2[j])
    G = np.zeros((n, n), dtype=complex)
    G[i, j] = vals
    G[j, i] = np.conj(vals)
    d = np.arange(n)
    G[d, d] = G[d, d].real
    return G


def psd_check(G, tol: float = 1e-9) -> PSDReport:
    """Eigenvalue test: psd iff ``min_eig >= -tol * max(|max_eig|, 1e-30)``."""
    G = np.asarray(G, dtype=complex)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DomainError("expected a square matrix")
    scale = max(float(np.max(np.abs(G))), 1e-300)
    if np.max(np.abs(G - G.conj().T)) > 1e-10 * scale:
        raise DomainError("matrix is not Hermitian")
    try:
        ev = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    lo, hi = float(ev[0]), float(ev[-1])
    ok = lo >= -tol * max(abs(hi), 1e-30)
    return PSDReport(G.shape[0], lo, hi, "psd" if ok else "not_psd", float(tol))


def wallach_probe(
    lam: float,
    nu_grid: Sequence[float],
    sample,
    tol: float = 1e-9,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> list[tuple[float, PSDReport]]:
    """PSD verdict of the Gram of ``(B^(lam))^nu`` on `sample` for each ``nu``.

    A not_psd row shows that ``nu`` is outside the Wallach set; a psd row is
    only consistent with membership.
    """
    out = []
    for nu in nu_grid:
        nu = float(nu)
        if nu <= 0:
            raise DomainError("nu must be positive")
        G = gram(Power(WeightedBergman(lam), nu), sample, opts)
        out.append((nu, psd_check(G, tol)))
    return out
