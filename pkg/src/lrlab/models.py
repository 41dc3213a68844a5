"""Time-dependent Hamiltonian families.

Two schedule variants cover everything in scope: a constant matrix and a
linear interpolation (1 - t/T) H_i + (t/T) H_f.  Both evaluate with an
analytic time derivative.  A seeded generator produces random Hermitian
matrices with entries confined to an exponential decay envelope
|H_ij| <= h exp(-mu' |i - j|).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import _check_hermitian
from .errors import ValidationError


class TimeDependentHamiltonian:
    """Common interface: evaluate(t), derivative(t), dimension."""

    dimension: int

    def evaluate(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def evaluate_batch(self, ts: np.ndarray) -> np.ndarray:
        """Stacked evaluation, shape (len(ts), dim, dim)."""
        return np.stack([self.evaluate(t) for t in np.asarray(ts)])


@dataclass(eq=False)
class ConstantHamiltonian(TimeDependentHamiltonian):
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = _check_hermitian(self.matrix)
        self.dimension = self.matrix.shape[0]

    def evaluate(self, t: float) -> np.ndarray:
        return self.matrix.copy()

    def derivative(self, t: float) -> np.ndarray:
        return np.zeros_like(self.matrix)

    def evaluate_batch(self, ts: np.ndarray) -> np.ndarray:
        n = np.asarray(ts).size
        return np.broadcast_to(self.matrix, (n, *self.matrix.shape)).copy()


@dataclass(eq=False)
class LinearInterpolationHamiltonian(TimeDependentHamiltonian):
    """H(t) = (1 - t/T) H_i + (t/T) H_f on t in [0, T]."""

    h_initial: np.ndarray
    h_final: np.ndarray
    total_time: float

    def __post_init__(self):
        self.h_initial = _check_hermitian(self.h_initial)
        self.h_final = _check_hermitian(self.h_final)
        if self.h_initial.shape != self.h_final.shape:
            raise ValidationError("endpoint matrices must share a dimension")
        if self.total_time <= 0:
            raise ValidationError(
                f"total_time must be positive, got {self.total_time}"
            )
        self.dimension = self.h_initial.shape[0]

    def _check_t(self, t) -> None:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.total_time * (1 + 1e-12)):
            raise ValidationError(
                f"t must lie in [0, {self.total_time}], got {t}"
            )

    def evaluate(self, t: float) -> np.ndarray:
        self._check_t(t)
        s = t / self.total_time
        return (1.0 - s) * self.h_initial + s * self.h_final

    def derivative(self, t: float) -> np.ndarray:
        self._check_t(t)
        return (self.h_final - self.h_initial) / self.total_time

    def evaluate_batch(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        self._check_t(ts)
        s = (ts / self.total_time)[:, None, None]
        return (1.0 - s) * self.h_initial[None] + s * self.h_final[None]


def build_example_ramp(total_time: float) -> LinearInterpolationHamiltonian:
    """Bundled 11-level demo model.

    Starts from an equally spaced ladder (diagonal 0.0, 0.1, ..., 1.0) and
    linearly switches on a nearest-neighbor hopping of strength 1/2, so the
    final matrix is tridiagonal.  Ground gap at t=0 is exactly 0.1.
    """
    d = 11
    h_i = 0.1 * np.diag(np.arange(d)).astype(complex)
    h_f = h_i.copy()
    for k in range(d - 1):
        h_f[k, k + 1] += 0.5
        h_f[k + 1, k] += 0.5
    return LinearInterpolationHamiltonian(h_i, h_f, float(total_time))


@dataclass(frozen=True)
class ExpLocalSpec:
    """Parameters for the exponential-envelope random ensemble."""

    dimension: int
    amplitude: float
    decay_rate: float
    seed: int

    def __post_init__(self):
        if self.dimension < 2:
            raise ValidationError("dimension must be at least 2")
        if self.amplitude <= 0 or self.decay_rate <= 0:
            raise ValidationError("amplitude and decay_rate must be positive")


def random_exp_local(spec: ExpLocalSpec) -> np.ndarray:
    """Random Hermitian matrix with |H_ij| <= h exp(-mu' |i-j|), surely.

    Off-diagonal magnitudes are uniform within the envelope with a uniform
    phase; diagonal entries are real and uniform in [-h, h].  The envelope
    bound holds by construction rather than in probability, so downstream
    locality checks are deterministic.  Reproducible from the seed.
    """
    rng = np.random.default_rng(spec.seed)
    n, h, mu_p = spec.dimension, spec.amplitude, spec.decay_rate
    H = np.zeros((n, n), dtype=complex)
    H[np.diag_indices(n)] = rng.uniform(-h, h, size=n)
    for i in range(n):
        for j in range(i + 1, n):
            mag = rng.uniform(0.0, h * np.exp(-mu_p * (j - i)))
            phase = rng.uniform(0.0, 2.0 * np.pi)
            H[i, j] = mag * np.exp(1j * phase)
            H[j, i] = np.conj(H[i, j])
    return H
