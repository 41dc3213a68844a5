import numpy as np
import pytest

from lrlab.adiabatic import (
    adiabatic_error,
    condition_report,
    evolve_adiabatic,
    ground_projector_derivative,
    h_ad,
    instantaneous_locality,
    intertwining_defect,
    kernel_K,
    run_adiabatic,
    spectral_flow,
    wave_operator_errors,
)
from lrlab.errors import LevelCrossingError, ValidationError
from lrlab.locality import certify
from lrlab.models import (
    ConstantHamiltonian,
    LinearInterpolationHamiltonian,
    build_example_ramp,
)
from lrlab.numerics import TimeGrid, operator_norm
from lrlab.propagation import evolve_on_grid

from _oracles import random_hermitian


@pytest.fixture(scope="module")
def ramp_run():
    """Example ramp at T=25: flow, U and U_ad at tol 1e-9 on 501 points."""
    T = 25.0
    H = build_example_ramp(T)
    grid = TimeGrid.uniform(T, 501)
    return H, run_adiabatic(H, grid, tol=1e-9)


# -- spectral flow ------------------------------------------------------------


def test_flow_example_constants(ramp_run):
    _, run = ramp_run
    flow = run.flow
    assert flow.ground_dim == 1
    assert flow.gap[0] == pytest.approx(0.1, abs=1e-12)
    assert 0.095 <= flow.gap_min <= 0.105


def test_flow_projector_invariants(ramp_run):
    _, run = ramp_run
    G = run.flow.ground_projector
    idem = G @ G - G
    herm = G - G.conj().transpose(0, 2, 1)
    assert np.linalg.svd(idem, compute_uv=False)[:, 0].max() <= 1e-10
    assert np.linalg.svd(herm, compute_uv=False)[:, 0].max() <= 1e-10
    traces = np.einsum("tii->t", G).real
    np.testing.assert_allclose(traces, np.ones(len(traces)), atol=1e-10)


def test_flow_eigenvector_continuity(ramp_run):
    _, run = ramp_run
    basis = run.flow.basis
    overlaps = np.abs(np.sum(basis[:-1].conj() * basis[1:], axis=1))
    assert overlaps.min() >= 0.99


def test_flow_constant_hamiltonian():
    rng = np.random.default_rng(0)
    M = random_hermitian(rng, 6)
    flow = spectral_flow(ConstantHamiltonian(M), TimeGrid.uniform(2.0, 21))
    assert np.ptp(flow.gap) <= 1e-12
    dev = flow.ground_projector - flow.ground_projector[0]
    assert np.abs(dev).max() <= 1e-10


def test_flow_level_crossing_detected():
    H = LinearInterpolationHamiltonian(
        np.diag([0.0, 1.0]), np.diag([1.0, 0.0]), 1.0
    )
    with pytest.raises(LevelCrossingError):
        spectral_flow(H, TimeGrid.uniform(1.0, 21))


# -- projector derivative ------------------------------------------------------


def test_gdot_constant_is_zero():
    rng = np.random.default_rng(1)
    M = random_hermitian(rng, 5)
    flow = spectral_flow(ConstantHamiltonian(M), TimeGrid.uniform(1.0, 11))
    gdot = ground_projector_derivative(ConstantHamiltonian(M), flow, 0.5)
    assert operator_norm(gdot) <= 1e-12


def test_gdot_matches_finite_difference(ramp_run):
    H, run = ramp_run
    flow = run.flow
    T = 25.0
    h = T * 1e-6

    def projector(t):
        vals, vecs = np.linalg.eigh(H.evaluate(t))
        v = vecs[:, :1]
        return v @ v.conj().T

    # interior point: central difference
    t = 0.4 * T
    fd = (projector(t + h) - projector(t - h)) / (2 * h)
    gdot = ground_projector_derivative(H, flow, t)
    assert operator_norm(gdot - fd) <= 1e-6 * operator_norm(gdot)
    # start point: forward difference (first-order accurate)
    fd0 = (projector(h) - projector(0.0)) / h
    gdot0 = ground_projector_derivative(H, flow, 0.0)
    assert operator_norm(gdot0 - fd0) <= 1e-4 * operator_norm(gdot0)


def test_gdot_idempotency_derivative(ramp_run):
    H, run = ramp_run
    flow = run.flow
    for t in (0.0, 7.3, 21.1):
        gdot = ground_projector_derivative(H, flow, t)
        assert operator_norm(gdot - gdot.conj().T) <= 1e-10
        k = flow.index_of(flow.grid.points[np.argmin(np.abs(flow.grid.points - t))])
        vals, vecs = np.linalg.eigh(H.evaluate(t))
        G = vecs[:, :1] @ vecs[:, :1].conj().T
        assert operator_norm(gdot @ G + G @ gdot - gdot) <= 1e-8
        assert operator_norm(G @ gdot @ G) <= 1e-9


# -- adiabatic generator ---------------------------------------------------------


def test_h_ad_constant_equals_h():
    rng = np.random.default_rng(2)
    M = random_hermitian(rng, 5)
    H = ConstantHamiltonian(M)
    flow = spectral_flow(H, TimeGrid.uniform(1.0, 11))
    assert operator_norm(h_ad(H, flow, 0.3) - M) <= 1e-12


def test_h_ad_hermitian_and_block_structure(ramp_run):
    H, run = ramp_run
    flow = run.flow
    for t in (0.0, 5.0, 24.9):
        HA = h_ad(H, flow, t)
        assert operator_norm(HA - HA.conj().T) <= 1e-10
        D = HA - H.evaluate(t)
        vals, vecs = np.linalg.eigh(H.evaluate(t))
        G = vecs[:, :1] @ vecs[:, :1].conj().T
        Gp = np.eye(11) - G
        assert operator_norm(G @ D @ G) <= 1e-9
        assert operator_norm(Gp @ D @ Gp) <= 1e-9


def test_h_ad_correction_scales_as_one_over_T():
    s_values = (0.25, 0.5, 0.75)
    norms = {}
    for T in (30.0, 60.0):
        H = build_example_ramp(T)
        flow = spectral_flow(H, TimeGrid.uniform(T, 201))
        norms[T] = [
            operator_norm(h_ad(H, flow, s * T) - H.evaluate(s * T))
            for s in s_values
        ]
    for a, b in zip(norms[30.0], norms[60.0]):
        assert a / b == pytest.approx(2.0, rel=0.05)


# -- intertwiner ------------------------------------------------------------------


def test_intertwining_defect_small(ramp_run):
    _, run = ramp_run
    assert run.intertwining_defect <= 1e-7


def test_constant_adiabatic_propagator_trivial():
    rng = np.random.default_rng(3)
    M = random_hermitian(rng, 4)
    H = ConstantHamiltonian(M)
    grid = TimeGrid.uniform(1.5, 31)
    flow = spectral_flow(H, grid)
    U_ad = evolve_adiabatic(H, flow, tol=1e-10)
    U = evolve_on_grid(H, grid, tol=1e-10)
    dev = U_ad.unitaries - U.unitaries
    assert np.linalg.svd(dev, compute_uv=False)[:, 0].max() <= 1e-9
    assert intertwining_defect(U_ad, flow) <= 1e-10


def test_transported_projector_trace(ramp_run):
    _, run = ramp_run
    UT = run.U_ad.unitaries[-1]
    G0 = run.flow.ground_projector[0]
    GT = run.flow.ground_projector[-1]
    transported = UT @ G0 @ UT.conj().T
    assert abs(np.trace(transported - GT)) <= 1e-8


# -- kernel ----------------------------------------------------------------------


def test_kernel_constant_zero():
    rng = np.random.default_rng(4)
    M = random_hermitian(rng, 4)
    H = ConstantHamiltonian(M)
    grid = TimeGrid.uniform(1.0, 11)
    flow = spectral_flow(H, grid)
    U_ad = evolve_adiabatic(H, flow, tol=1e-10)
    assert operator_norm(kernel_K(H, flow, U_ad, 0.5)) <= 1e-10


def test_kernel_norm_identity(ramp_run):
    H, run = ramp_run
    for t in run.flow.grid.points[:: len(run.flow.grid) // 7]:
        K = kernel_K(H, run.flow, run.U_ad, t)
        D = H.evaluate(t) - h_ad(H, run.flow, t)
        assert operator_norm(K) == pytest.approx(operator_norm(D), abs=1e-10)
        assert operator_norm(K - K.conj().T) <= 1e-10
        # conjugating back recovers H - H_ad exactly
        Uk = run.U_ad.at(t)
        assert operator_norm(Uk @ K @ Uk.conj().T - D) <= 1e-12


# -- wave-operator errors -----------------------------------------------------------


def test_wave_errors_trivial_for_constant():
    rng = np.random.default_rng(5)
    M = random_hermitian(rng, 4)
    H = ConstantHamiltonian(M)
    grid = TimeGrid.uniform(2.0, 21)
    flow = spectral_flow(H, grid)
    U = evolve_on_grid(H, grid, tol=1e-10)
    U_ad = evolve_adiabatic(H, flow, tol=1e-10)
    delta_t, delta_ad = wave_operator_errors(U, U_ad, flow)
    assert delta_t.max() <= 1e-8
    assert delta_ad <= 1e-10


def simpson_cumulative(f_nodes, f_mids, pts):
    """Composite Simpson cumulative integral: the bound is nearly saturated
    at early times, so the integral oracle must beat trapezoid accuracy."""
    widths = np.diff(pts)
    segments = widths / 6.0 * (f_nodes[:-1] + 4.0 * f_mids + f_nodes[1:])
    return np.concatenate([[0.0], np.cumsum(segments)])


def test_delta_bounded_by_kernel_integral(ramp_run):
    """delta(t) never exceeds the accumulated ||H - H_ad||."""
    H, run = ramp_run
    pts = run.flow.grid.points
    mids = 0.5 * (pts[:-1] + pts[1:])
    hdiff = np.array(
        [operator_norm(H.evaluate(t) - h_ad(H, run.flow, t)) for t in pts]
    )
    hdiff_mid = np.array(
        [operator_norm(H.evaluate(t) - h_ad(H, run.flow, t)) for t in mids]
    )
    cumint = simpson_cumulative(hdiff, hdiff_mid, pts)
    assert np.all(run.delta_t <= cumint + 1e-9)
    assert run.delta_t[0] == 0.0
    # and the coarser chain link: the integral never exceeds t * max ||..||
    assert np.all(cumint <= pts * hdiff.max() + 1e-9)


def test_run_invariants(ramp_run):
    _, run = ramp_run
    assert 0.0 <= run.delta_ad_final <= 1.0
    assert run.intertwining_defect <= 10 * run.U_ad.tolerance


def test_slower_driving_reduces_error():
    errors = {}
    for T in (12.5, 25.0):
        H = build_example_ramp(T)
        grid = TimeGrid.uniform(T, 401)
        flow = spectral_flow(H, grid)
        U = evolve_on_grid(H, grid, tol=1e-8)
        errors[T] = adiabatic_error(U, flow)
    assert errors[25.0] < errors[12.5]


def test_grid_alignment_enforced(ramp_run):
    H, run = ramp_run
    other = evolve_on_grid(H, TimeGrid.uniform(25.0, 11), tol=1e-8)
    with pytest.raises(ValidationError):
        wave_operator_errors(other, run.U_ad, run.flow)


# -- condition report -----------------------------------------------------------------


def test_condition_report_constant_all_zero():
    rng = np.random.default_rng(6)
    M = random_hermitian(rng, 5)
    H = ConstantHamiltonian(M)
    grid = TimeGrid.uniform(1.0, 11)
    flow = spectral_flow(H, grid)
    cert = certify(H, 0.5, grid)
    report = condition_report(H, flow, cert)
    assert report.hdiff_gap_ratio == pytest.approx(0.0, abs=1e-12)
    assert report.hdot_gap_ratio == 0.0
    assert report.vlr_gap_ratio > 0


def test_condition_report_ramp_ratios(ramp_run):
    H, run = ramp_run
    T = 25.0
    cert = certify(H, 0.5, run.flow.grid)
    report = condition_report(H, run.flow, cert)
    hdot_direct = operator_norm(H.h_final - H.h_initial) / T
    assert report.hdot_gap_ratio == pytest.approx(
        hdot_direct / run.flow.gap_min**2, rel=1e-10
    )
    assert report.vlr_gap_ratio == pytest.approx(
        cert.v_lr_max / run.flow.gap_min, rel=1e-12
    )
    assert report.epsilon_scale == pytest.approx(0.5 * 1, rel=1e-12)
    assert np.isfinite(report.hdiff_gap_ratio) and report.hdiff_gap_ratio >= 0


def test_condition_chain_ordering(ramp_run):
    """Sum of ground-touching block norms dominates ||H - H_ad|| pointwise."""
    H, run = ramp_run
    cert = certify(H, 0.5, run.flow.grid)
    report = condition_report(H, run.flow, cert)
    assert np.all(report.block_sums >= report.hdiff_norms - 1e-12)
    assert report.chain_block_term >= report.chain_norm_term


def test_hdiff_bounded_by_hdot_over_gap(ramp_run):
    H, run = ramp_run
    cert = certify(H, 0.5, run.flow.grid)
    report = condition_report(H, run.flow, cert)
    assert np.all(
        report.hdiff_norms <= report.hdot_norms / run.flow.gap_min + 1e-9
    )


# -- instantaneous locality --------------------------------------------------------------


def test_instantaneous_locality_constant_zero():
    rng = np.random.default_rng(7)
    M = random_hermitian(rng, 5)
    H = ConstantHamiltonian(M)
    grid = TimeGrid.uniform(1.0, 11)
    flow = spectral_flow(H, grid)
    assert instantaneous_locality(H, flow, 0.5, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_instantaneous_locality_matches_block_path(ramp_run):
    """Cross-check the generic pairwise path against the eigenframe blocks."""
    H, run = ramp_run
    flow = run.flow
    mu = 0.5
    for t in flow.grid.points[:: len(flow.grid) // 5]:
        got = instantaneous_locality(H, flow, mu, t)
        k = flow.index_of(t)
        V = flow.basis[k]
        D = H.evaluate(t) - h_ad(H, flow, t)
        D_eig = V.conj().T @ D @ V
        total = sum(
            abs(D_eig[0, j]) * np.exp(mu * j)
            for j in range(1, 11)
            if abs(D_eig[0, j]) > 1e-14
        )
        assert got == pytest.approx(total, rel=1e-10, abs=1e-14)


def test_instantaneous_locality_scales_as_one_over_T():
    mu = 0.5
    vals = {}
    for T in (30.0, 60.0):
        H = build_example_ramp(T)
        grid = TimeGrid.uniform(T, 201)
        flow = spectral_flow(H, grid)
        vals[T] = instantaneous_locality(H, flow, mu, 0.5 * T)
    assert vals[30.0] / vals[60.0] == pytest.approx(2.0, rel=0.05)
