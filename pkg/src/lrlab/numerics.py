"""Shared numerical kernels: norms, eigensystems, unitary exponentials,
the product logarithm, and time-grid quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

HERMITICITY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing time points starting at 0 (hbar = 1 units)."""

    points: np.ndarray

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValidationError("a time grid needs at least 2 points")
        if pts[0] != 0.0:
            raise ValidationError(f"time grid must start at 0, got {pts[0]}")
        if not np.all(np.diff(pts) > 0):
            raise ValidationError("time grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, t_final: float, n_points: int) -> "TimeGrid":
        if t_final <= 0:
            raise ValidationError(f"t_final must be positive, got {t_final}")
        return cls(np.linspace(0.0, float(t_final), int(n_points)))

    @property
    def t_final(self) -> float:
        return float(self.points[-1])

    def __len__(self) -> int:
        return int(self.points.size)


def operator_norm(M: np.ndarray) -> float:
    """Largest singular value of M."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValidationError(f"expected a matrix, got ndim={M.ndim}")
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix contains NaN or Inf entries")
    return float(np.linalg.norm(M, 2))


def _hermitian_defect(M: np.ndarray) -> tuple[float, float]:
    scale = float(np.linalg.norm(M, 2))
    defect = float(np.linalg.norm(M - M.conj().T, 2))
    return defect, scale


def hermitian_eigensystem(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvector columns of a
    Hermitian matrix."""
    M = np.asarray(M, dtype=complex)
    defect, scale = _hermitian_defect(M)
    if defect > HERMITICITY_RTOL * scale:
        raise ValidationError(
            f"matrix is not Hermitian: ||M - M^dag|| = {defect:.3e}"
        )
    vals, vecs = np.linalg.eigh(M)
    return vals, vecs


def unitary_exponential(A: np.ndarray) -> np.ndarray:
    """exp(A) for anti-Hermitian A, via the eigendecomposition of iA.

    The result is unitary by construction (up to roundoff) because the
    eigenvector matrix is unitary and the eigenvalue phases have modulus 1.
    """
    A = np.asarray(A, dtype=complex)
    defect, scale = _hermitian_defect(1j * A)
    if defect > HERMITICITY_RTOL * scale:
        raise ValidationError(
            f"matrix is not anti-Hermitian: ||A + A^dag|| = {defect:.3e}"
        )
    vals, vecs = np.linalg.eigh(1j * A)  # A = -i (iA), iA Hermitian
    phases = np.exp(-1j * vals)
    return (vecs * phases) @ vecs.conj().T


def lambert_w(x: float) -> float:
    """Principal branch of the product logarithm on x >= 0.

    Returns w >= 0 with w * e^w = x, by Newton iteration started at
    ln(1 + x); converges to |w e^w - x| <= 1e-12 * max(1, x).
    """
    x = float(x)
    if x < 0:
        raise ValidationError(f"lambert_w requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    tol = 1e-12 * max(1.0, x)
    w = np.log1p(x)
    for _ in range(100):
        ew = np.exp(w)
        f = w * ew - x
        if abs(f) <= tol:
            return float(w)
        w -= f / (ew * (1.0 + w))
    raise ValidationError(f"lambert_w failed to converge for x = {x}")


def time_average(samples, grid: TimeGrid, t: float | None = None) -> float:
    """Trapezoidal approximation of (1/t) * integral of f over [0, t].

    `samples` are the values of f on the grid points; `t` defaults to the
    last grid point and must equal it when given.  Exact for affine f.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape != grid.points.shape:
        raise ValidationError(
            f"got {samples.size} samples for a {len(grid)}-point grid"
        )
    if t is None:
        t = grid.t_final
    if t <= 0:
        raise ValidationError(f"averaging window must be positive, got t={t}")
    if abs(t - grid.t_final) > 1e-12 * max(1.0, abs(t)):
        raise ValidationError(
            f"t={t} does not match the final grid point {grid.t_final}"
        )
    return float(np.trapezoid(samples, grid.points) / t)
