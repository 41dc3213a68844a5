"""Spectral flow, the adiabatic intertwiner, and the adiabatic-condition chain.

For a Hamiltonian whose lowest eigenvalue cluster stays separated by a gap,
the spectral projector G(t) is transported exactly by the unitary generated
by  H_ad(t) = H(t) + i [Gdot(t), G(t)]  (the intertwining property
U_ad G(0) U_ad^dag = G(t)).  The mismatch between the true evolution U and
U_ad is captured by the wave operator Omega = U_ad^dag U, its deviation
delta(t) = ||1 - Omega||, and the final ground-space leakage delta_ad.
Gdot is computed from first-order perturbation theory,

    Gdot = sum_{k outside, g inside} |k><k| Hdot |g><g| / (E_g - E_k) + h.c.,

which is exact for an isolated cluster and avoids finite-difference noise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .blocks import pairwise_decompose
from .errors import (
    GapClosureError,
    IllConditionedError,
    LevelCrossingError,
    ValidationError,
)
from .locality import LocalityCertificate
from .models import TimeDependentHamiltonian
from .numerics import TimeGrid, hermitian_eigensystem, operator_norm
from .propagation import Propagator, evolve_on_grid

DEFAULT_CLUSTER_TOL = 1e-8
MIN_DERIVATIVE_GAP = 1e-8


@dataclass(eq=False)
class SpectralFlow:
    """Eigen-data of H(t) along a grid with a tracked ground cluster."""

    grid: TimeGrid
    eigenvalues: np.ndarray  # (times, dim), ascending
    basis: np.ndarray  # (times, dim, dim), eigenvector columns, phase-fixed
    ground_projector: np.ndarray  # (times, dim, dim)
    gap: np.ndarray  # (times,)
    gap_min: float
    ground_dim: int
    cluster_tol: float

    @property
    def dimension(self) -> int:
        return int(self.eigenvalues.shape[1])

    def index_of(self, t: float) -> int:
        k = int(np.searchsorted(self.grid.points, t))
        for cand in (k - 1, k, k + 1):
            if 0 <= cand < len(self.grid) and abs(
                self.grid.points[cand] - t
            ) <= 1e-9 * max(1.0, abs(t)):
                return cand
        raise ValidationError(f"t={t} is not a grid point of this flow")


def _cluster_dim(vals_row: np.ndarray, cluster_tol: float) -> int:
    return int(np.sum(vals_row - vals_row[0] <= cluster_tol))


def _fix_phases(basis: np.ndarray) -> np.ndarray:
    """Make eigenvector frames continuous along the time axis.

    First frame: largest-magnitude component of each column made real
    positive.  Later frames: each column rotated so its overlap with the
    same column at the previous time is real positive.
    """
    out = basis.copy()
    first = out[0]
    for k in range(first.shape[1]):
        j = int(np.argmax(np.abs(first[:, k])))
        z = first[j, k]
        if abs(z) > 0:
            first[:, k] *= np.conj(z) / abs(z)
    for n in range(1, out.shape[0]):
        overlaps = np.sum(out[n - 1].conj() * out[n], axis=0)
        mags = np.abs(overlaps)
        safe = mags > 1e-12
        phase = np.ones_like(overlaps)
        phase[safe] = np.conj(overlaps[safe]) / mags[safe]
        out[n] *= phase[None, :]
    return out


def spectral_flow(
    H: TimeDependentHamiltonian,
    grid: TimeGrid,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
) -> SpectralFlow:
    """Diagonalize H along the grid and track the ground cluster.

    The cluster is the set of eigenvalues within cluster_tol of the lowest;
    its dimension must stay constant across the grid and the gap to the rest
    of the spectrum must stay positive.
    """
    mats = H.evaluate_batch(grid.points)
    vals, vecs = np.linalg.eigh(mats)
    gdim = _cluster_dim(vals[0], cluster_tol)
    if gdim >= H.dimension:
        raise GapClosureError("the ground cluster spans the whole spectrum")
    dims = np.array([_cluster_dim(v, cluster_tol) for v in vals])
    if np.any(dims != gdim):
        k = int(np.nonzero(dims != gdim)[0][0])
        raise LevelCrossingError(
            f"ground cluster dimension changed from {gdim} to {dims[k]} "
            f"at t={grid.points[k]}"
        )
    gap = vals[:, gdim] - vals[:, gdim - 1]
    if np.any(gap <= 0):
        k = int(np.nonzero(gap <= 0)[0][0])
        raise GapClosureError(f"gap closed at t={grid.points[k]}")

    basis = _fix_phases(vecs)
    ground = basis[:, :, :gdim]
    projector = ground @ ground.conj().transpose(0, 2, 1)
    return SpectralFlow(
        grid=grid,
        eigenvalues=vals,
        basis=basis,
        ground_projector=projector,
        gap=gap,
        gap_min=float(gap.min()),
        ground_dim=gdim,
        cluster_tol=cluster_tol,
    )


def _eig_checked(
    H: TimeDependentHamiltonian, ts: np.ndarray, gdim: int, cluster_tol: float
) -> tuple[np.ndarray, np.ndarray]:
    """Batched eigensystems with cluster-consistency and gap checks."""
    mats = H.evaluate_batch(ts)
    vals, vecs = np.linalg.eigh(mats)
    dims = (vals - vals[:, :1] <= cluster_tol).sum(axis=1)
    if np.any(dims != gdim):
        k = int(np.nonzero(dims != gdim)[0][0])
        raise LevelCrossingError(
            f"ground cluster dimension {dims[k]} != {gdim} at t={ts[k]}"
        )
    gap = vals[:, gdim] - vals[:, gdim - 1]
    if np.any(gap <= MIN_DERIVATIVE_GAP):
        k = int(np.nonzero(gap <= MIN_DERIVATIVE_GAP)[0][0])
        raise IllConditionedError(
            f"gap {gap[k]:.3e} below {MIN_DERIVATIVE_GAP} at t={ts[k]}: "
            "projector derivative is ill-conditioned"
        )
    return vals, vecs


def _gdot_eigframe(
    H: TimeDependentHamiltonian,
    ts: np.ndarray,
    vals: np.ndarray,
    vecs: np.ndarray,
    gdim: int,
) -> np.ndarray:
    """Excited-to-ground block R of Gdot in the instantaneous eigenframe:
    R[t, k, g] = <k|Hdot|g> / (E_g - E_k)."""
    hdots = np.stack([H.derivative(t) for t in np.asarray(ts)])
    W = np.einsum("tji,tjl,tlm->tim", vecs.conj(), hdots, vecs, optimize=True)
    denom = vals[:, None, :gdim] - vals[:, gdim:, None]  # E_g - E_k
    return W[:, gdim:, :gdim] / denom


def ground_projector_derivative(
    H: TimeDependentHamiltonian, flow: SpectralFlow, t: float
) -> np.ndarray:
    """Gdot(t) from first-order perturbation theory (Hermitian)."""
    ts = np.asarray([t], dtype=float)
    gdim = flow.ground_dim
    vals, vecs = _eig_checked(H, ts, gdim, flow.cluster_tol)
    R = _gdot_eigframe(H, ts, vals, vecs, gdim)[0]
    d = H.dimension
    gdot_eig = np.zeros((d, d), dtype=complex)
    gdot_eig[gdim:, :gdim] = R
    gdot_eig[:gdim, gdim:] = R.conj().T
    V = vecs[0]
    return V @ gdot_eig @ V.conj().T


def h_ad(
    H: TimeDependentHamiltonian, flow: SpectralFlow, t: float
) -> np.ndarray:
    """Adiabatic generator H(t) + i [Gdot(t), G(t)]."""
    return _h_ad_batch(H, flow, np.asarray([t], dtype=float))[0]


def _h_ad_batch(
    H: TimeDependentHamiltonian, flow: SpectralFlow, ts: np.ndarray
) -> np.ndarray:
    gdim = flow.ground_dim
    vals, vecs = _eig_checked(H, ts, gdim, flow.cluster_tol)
    R = _gdot_eigframe(H, ts, vals, vecs, gdim)
    n_t, d = vals.shape
    core = np.zeros((n_t, d, d), dtype=complex)
    # i [Gdot, G] has only excited-ground blocks in the eigenframe
    core[:, gdim:, :gdim] = 1j * R
    core[:, :gdim, gdim:] = (1j * R).conj().transpose(0, 2, 1)
    idx = np.arange(d)
    core[:, idx, idx] += vals
    return np.einsum(
        "tij,tjl,tml->tim", vecs, core, vecs.conj(), optimize=True
    )


class _AdiabaticGenerator:
    """Evaluate H_ad(t) batches; plugs into the shared integrator."""

    def __init__(self, H: TimeDependentHamiltonian, flow: SpectralFlow):
        self._H = H
        self._flow = flow
        self.dimension = H.dimension

    def evaluate_batch(self, ts: np.ndarray) -> np.ndarray:
        return _h_ad_batch(self._H, self._flow, np.asarray(ts, dtype=float))


def intertwining_defect(U_ad: Propagator, flow: SpectralFlow) -> float:
    """max over checkpoints of || U_ad G(0) U_ad^dag - G(t) ||."""
    if not np.array_equal(U_ad.grid.points, flow.grid.points):
        raise ValidationError("propagator and flow grids do not align")
    U = U_ad.unitaries
    G0 = flow.ground_projector[0]
    transported = U @ G0 @ U.conj().transpose(0, 2, 1)
    dev = transported - flow.ground_projector
    return float(np.linalg.svd(dev, compute_uv=False)[:, 0].max())


def evolve_adiabatic(
    H: TimeDependentHamiltonian, flow: SpectralFlow, tol: float = 1e-9
) -> Propagator:
    """Propagator generated by H_ad on the flow's grid.

    Warns when the measured intertwining defect exceeds 10x the integration
    tolerance, which signals insufficient grid resolution.
    """
    prop = evolve_on_grid(_AdiabaticGenerator(H, flow), flow.grid, tol)
    defect = intertwining_defect(prop, flow)
    if defect > 10.0 * tol:
        warnings.warn(
            f"intertwining defect {defect:.3e} exceeds 10 x tol={tol:.1e}; "
            "consider a finer grid or tighter tolerance",
            RuntimeWarning,
            stacklevel=2,
        )
    return prop


def kernel_K(
    H: TimeDependentHamiltonian,
    flow: SpectralFlow,
    U_ad: Propagator,
    t: float,
) -> np.ndarray:
    """Effective wave-operator generator U_ad^dag [H - H_ad] U_ad at a
    checkpoint time."""
    Uk = U_ad.at(t)
    D = H.evaluate(t) - h_ad(H, flow, t)
    return Uk.conj().T @ D @ Uk


def adiabatic_error(U: Propagator, flow: SpectralFlow) -> float:
    """Final ground-space leakage delta_ad of the exact evolution.

    Nondegenerate ground state: 1 - |<psi(T)| G(T) |psi(T)>| with
    |psi(T)> = U(T,0) |ground(0)>.  For a degenerate cluster the evolved
    maximally mixed ground state is used: 1 - tr[G(T) rho(T)].
    """
    if not np.array_equal(U.grid.points, flow.grid.points):
        raise ValidationError("propagator and flow grids do not align")
    UT = U.unitaries[-1]
    GT = flow.ground_projector[-1]
    gdim = flow.ground_dim
    if gdim == 1:
        psi = UT @ flow.basis[0][:, 0]
        overlap = np.real(np.vdot(psi, GT @ psi))
        return float(1.0 - abs(overlap))
    rho0 = flow.ground_projector[0] / gdim
    rhoT = UT @ rho0 @ UT.conj().T
    return float(1.0 - np.real(np.trace(GT @ rhoT)))


def wave_operator_errors(
    U: Propagator, U_ad: Propagator, flow: SpectralFlow
) -> tuple[np.ndarray, float]:
    """delta(t) = ||1 - U_ad^dag U|| per checkpoint, plus delta_ad(T)."""
    if not np.array_equal(U.grid.points, U_ad.grid.points):
        raise ValidationError("the two propagators use different grids")
    omega = U_ad.unitaries.conj().transpose(0, 2, 1) @ U.unitaries
    dev = np.eye(U.dimension) - omega
    delta_t = np.linalg.svd(dev, compute_uv=False)[:, 0]
    return delta_t, adiabatic_error(U, flow)


@dataclass(eq=False)
class AdiabaticRun:
    """One complete schedule: flow, both propagators, and error measures."""

    flow: SpectralFlow
    U: Propagator
    U_ad: Propagator
    delta_t: np.ndarray
    delta_ad_final: float
    intertwining_defect: float


def run_adiabatic(
    H: TimeDependentHamiltonian,
    grid: TimeGrid,
    tol: float = 1e-9,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
) -> AdiabaticRun:
    flow = spectral_flow(H, grid, cluster_tol)
    U = evolve_on_grid(H, grid, tol)
    U_ad = evolve_adiabatic(H, flow, tol)
    delta_t, delta_ad = wave_operator_errors(U, U_ad, flow)
    return AdiabaticRun(
        flow=flow,
        U=U,
        U_ad=U_ad,
        delta_t=delta_t,
        delta_ad_final=delta_ad,
        intertwining_defect=intertwining_defect(U_ad, flow),
    )


def instantaneous_locality(
    H: TimeDependentHamiltonian, flow: SpectralFlow, mu: float, t: float
) -> float:
    """Locality load of H - H_ad in the instantaneous eigenbasis at time t.

    H - H_ad is expressed in the eigenbasis of H(t) (ascending order),
    pairwise-decomposed, and summed with weights e^(mu diam Z) over the
    blocks that intersect the instantaneous ground labels; the sum is
    divided by the cluster size.  Only blocks meeting the ground labels
    can contribute because G (H - H_ad) G and Gperp (H - H_ad) Gperp vanish.
    """
    if mu <= 0:
        raise ValidationError(f"mu must be positive, got {mu}")
    k = flow.index_of(t)
    V = flow.basis[k]
    D = H.evaluate(t) - h_ad(H, flow, t)
    D_eig = V.conj().T @ D @ V
    decomp = pairwise_decompose(D_eig)
    gdim = flow.ground_dim
    ground = set(range(gdim))
    total = 0.0
    for block, norm in decomp.term_norms():
        if ground & set(block.labels):
            total += norm * np.exp(mu * block.diameter)
    return total / gdim


@dataclass(eq=False)
class ConditionReport:
    """The slow-driving ratios and the locality-to-adiabaticity chain."""

    hdiff_gap_ratio: float  # max ||H - H_ad|| / gap_min
    hdot_gap_ratio: float  # max ||Hdot|| / gap_min^2
    vlr_gap_ratio: float  # (a_mu_max / mu) / gap_min
    chain_block_term: float  # max_t blockSum / (mu |G| gap_min)
    chain_norm_term: float  # max_t ||H - H_ad|| / (mu |G| gap_min)
    epsilon_scale: float  # |G| mu; converts the chain scale to the plain one
    hdiff_norms: np.ndarray  # per-time ||H - H_ad||
    hdot_norms: np.ndarray  # per-time ||Hdot||
    block_sums: np.ndarray  # per-time sum of ground-touching block norms
    gap_min: float
    ground_dim: int
    mu: float

    def to_json_dict(self) -> dict:
        return {
            "hdiff_gap_ratio": self.hdiff_gap_ratio,
            "hdot_gap_ratio": self.hdot_gap_ratio,
            "vlr_gap_ratio": self.vlr_gap_ratio,
            "chain_block_term": self.chain_block_term,
            "chain_norm_term": self.chain_norm_term,
            "epsilon_scale": self.epsilon_scale,
            "gap_min": self.gap_min,
            "ground_dim": self.ground_dim,
            "mu": self.mu,
        }


def condition_report(
    H: TimeDependentHamiltonian,
    flow: SpectralFlow,
    certificate: LocalityCertificate,
) -> ConditionReport:
    """Evaluate the adiabatic-condition ratios on the flow's grid.

    The chain terms compare, at the shared scale 1/(mu |G| gap_min), the sum
    of ground-touching block norms of H - H_ad in the instantaneous basis
    against ||H - H_ad|| itself; the former dominates by the triangle
    inequality.
    """
    pts = flow.grid.points
    gdim = flow.ground_dim
    mu = certificate.mu
    vals, vecs = _eig_checked(H, pts, gdim, flow.cluster_tol)
    R = _gdot_eigframe(H, pts, vals, vecs, gdim)
    # H_ad - H = i[Gdot, G] is the off-diagonal block pair built from R, so
    # its norm is the top singular value of R and the ground-touching block
    # sum is the sum of |R| entries (diagonal blocks vanish identically)
    if R.shape[1] and R.shape[2]:
        hdiff = np.linalg.svd(R, compute_uv=False)[:, 0]
    else:
        hdiff = np.zeros(len(pts))
    block_sums = np.abs(R).sum(axis=(1, 2))
    hdot = np.array([operator_norm(H.derivative(t)) for t in pts])

    gap_min = flow.gap_min
    scale = 1.0 / (mu * gdim * gap_min)
    return ConditionReport(
        hdiff_gap_ratio=float(hdiff.max() / gap_min),
        hdot_gap_ratio=float(hdot.max() / gap_min**2),
        vlr_gap_ratio=float(certificate.v_lr_max / gap_min),
        chain_block_term=float(block_sums.max() * scale),
        chain_norm_term=float(hdiff.max() * scale),
        epsilon_scale=float(gdim * mu),
        hdiff_norms=hdiff,
        hdot_norms=hdot,
        block_sums=block_sums,
        gap_min=gap_min,
        ground_dim=gdim,
        mu=mu,
    )
