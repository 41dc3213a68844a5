import numpy as np
import pytest

from lrlab.blocks import Block, pairwise_decompose
from lrlab.errors import NumericalError, ValidationError
from lrlab.locality import (
    a_mu_pointwise,
    certify,
    check_locality_condition,
    default_probe_blocks,
    exp_local_bound,
    optimal_mu_exp_local,
    optimize_mu_generic,
)
from lrlab.models import (
    ConstantHamiltonian,
    ExpLocalSpec,
    build_example_ramp,
    random_exp_local,
)
from lrlab.numerics import TimeGrid

from _oracles import bisect_lambert, brute_a_mu, brute_probe_sum

E_HALF = np.exp(0.5)


# -- a_mu_pointwise -------------------------------------------------------


def test_a_mu_diagonal():
    decomp = pairwise_decompose(np.diag([0.2, -0.9, 0.5]))
    assert a_mu_pointwise(decomp, 1.3) == pytest.approx(0.9, abs=1e-14)


def test_a_mu_zero_matrix():
    assert a_mu_pointwise(pairwise_decompose(np.zeros((4, 4))), 0.7) == 0.0


def test_a_mu_example_ramp_endpoint():
    # brute-force oracle: the max load sits at level 9 (two neighbors), not
    # at level 10, giving 0.9 + 2 e^{1/2}
    H_f = build_example_ramp(1.0).h_final
    decomp = pairwise_decompose(H_f)
    got = a_mu_pointwise(decomp, 0.5)
    assert got == pytest.approx(brute_a_mu(H_f, 0.5), abs=1e-12)
    assert got == pytest.approx(0.9 + 2 * E_HALF, abs=1e-12)


def test_a_mu_matches_brute_force_on_random():
    rng = np.random.default_rng(9)
    for seed in range(10):
        spec = ExpLocalSpec(dimension=9, amplitude=1.0, decay_rate=1.5, seed=seed)
        M = random_exp_local(spec)
        mu = float(rng.uniform(0.1, 1.0))
        assert a_mu_pointwise(pairwise_decompose(M), mu) == pytest.approx(
            brute_a_mu(M, mu), rel=1e-12
        )


def test_a_mu_monotone_in_mu():
    M = random_exp_local(ExpLocalSpec(8, 1.0, 2.0, seed=1))
    decomp = pairwise_decompose(M)
    vals = [a_mu_pointwise(decomp, mu) for mu in np.linspace(0.1, 1.5, 20)]
    assert np.all(np.diff(vals) >= 0)


def test_a_mu_requires_positive_mu():
    with pytest.raises(ValidationError):
        a_mu_pointwise(pairwise_decompose(np.eye(2)), 0.0)


# -- probe condition ------------------------------------------------------


def test_singleton_probes_always_pass():
    M = random_exp_local(ExpLocalSpec(10, 1.0, 1.0, seed=4))
    decomp = pairwise_decompose(M)
    a = a_mu_pointwise(decomp, 0.5)
    probes = [Block([i]) for i in range(10)]
    assert all(check_locality_condition(decomp, 0.5, a, probes))


def test_contiguous_probes_pass_and_match_enumeration():
    M = random_exp_local(ExpLocalSpec(8, 1.0, 1.7, seed=5))
    decomp = pairwise_decompose(M)
    mu = 0.6
    a = a_mu_pointwise(decomp, mu)
    probes = [
        Block(range(start, start + size))
        for size in range(1, 5)
        for start in range(8 - size + 1)
    ]
    assert all(check_locality_condition(decomp, mu, a, probes))
    for probe in probes:
        assert brute_probe_sum(M, mu, probe.labels) <= probe.size * a * (1 + 1e-12)


def test_zero_bound_fails_on_nonzero_matrix():
    decomp = pairwise_decompose(np.diag([1.0, 2.0]))
    results = check_locality_condition(decomp, 0.5, 0.0, [Block([0]), Block([1])])
    assert not all(results)


def test_probe_equivalence_exhaustive():
    """With a = the tightest per-level constant, every probe block satisfies
    the summed condition (subadditivity of the block sums)."""
    for seed, n in ((0, 8), (1, 12), (2, 16)):
        M = random_exp_local(ExpLocalSpec(n, 1.0, 1.3, seed=seed))
        decomp = pairwise_decompose(M)
        mu = 0.65
        a = a_mu_pointwise(decomp, mu)
        probes = default_probe_blocks(n, max_size=5, n_random=100, seed=seed)
        assert all(check_locality_condition(decomp, mu, a, probes))


# -- certify --------------------------------------------------------------


def test_certify_constant_diagonal():
    H = ConstantHamiltonian(np.diag([0.3, 1.1, 0.7]))
    grid = TimeGrid.uniform(2.0, 21)
    cert = certify(H, 0.8, grid)
    np.testing.assert_allclose(cert.a_mu_samples, np.full(21, 1.1), atol=1e-14)
    assert cert.v_lr == pytest.approx(1.1 / 0.8, abs=1e-12)
    assert cert.a_mu_timeavg <= cert.a_mu_max + 1e-15


def test_certify_example_ramp_closed_form():
    """The ramp's a_mu(t) is the max of two affine functions of t; its exact
    time average follows by integrating the two pieces around the kink."""
    H = build_example_ramp(100.0)
    grid = TimeGrid.uniform(100.0, 1001)
    cert = certify(H, 0.5, grid)

    s = grid.points / 100.0
    level9 = 0.9 + 2 * s * E_HALF
    level10 = 1.0 + s * E_HALF
    analytic_samples = np.maximum(level9, level10)
    np.testing.assert_allclose(cert.a_mu_samples, analytic_samples, atol=1e-12)
    assert cert.a_mu_timeavg == pytest.approx(
        np.trapezoid(analytic_samples, grid.points) / 100.0, abs=1e-9
    )

    s_star = 0.1 / E_HALF  # kink: level 10 hands over to level 9
    exact_avg = 0.9 + E_HALF + 0.1 * s_star - E_HALF * s_star**2 / 2
    # the trapezoid rule crosses the kink inside one grid cell, which caps
    # the achievable agreement near (slope jump) * h^2 / 8 ~ 2e-7
    assert cert.a_mu_timeavg == pytest.approx(exact_avg, abs=5e-7)
    assert cert.a_mu_max == pytest.approx(0.9 + 2 * E_HALF, abs=1e-12)
    assert cert.v_lr == pytest.approx(cert.a_mu_timeavg / 0.5, abs=1e-12)


def test_certify_scaling_homogeneity():
    M = random_exp_local(ExpLocalSpec(9, 1.0, 2.0, seed=8))
    grid = TimeGrid.uniform(1.0, 11)
    base = certify(ConstantHamiltonian(M), 0.7, grid)
    scaled = certify(ConstantHamiltonian(3.0 * M), 0.7, grid)
    assert scaled.a_mu_max == pytest.approx(3.0 * base.a_mu_max, rel=1e-12)
    assert scaled.a_mu_timeavg == pytest.approx(3.0 * base.a_mu_timeavg, rel=1e-12)
    assert scaled.v_lr == pytest.approx(3.0 * base.v_lr, rel=1e-12)


def test_certify_time_independent_flat_samples():
    M = random_exp_local(ExpLocalSpec(7, 1.0, 1.1, seed=12))
    cert = certify(ConstantHamiltonian(M), 0.4, TimeGrid.uniform(3.0, 31))
    assert np.ptp(cert.a_mu_samples) <= 1e-12


def test_certify_samples_match_pointwise_op():
    H = build_example_ramp(10.0)
    grid = TimeGrid.uniform(10.0, 6)
    cert = certify(H, 0.5, grid)
    for k, t in enumerate(grid.points):
        direct = a_mu_pointwise(pairwise_decompose(H.evaluate(t)), 0.5)
        assert cert.a_mu_samples[k] == pytest.approx(direct, rel=1e-12)


def test_certify_with_permutation_matches_manual_reorder():
    M = random_exp_local(ExpLocalSpec(6, 1.0, 1.0, seed=3))
    perm = np.array([2, 0, 1, 5, 4, 3])
    grid = TimeGrid.uniform(1.0, 5)
    from lrlab.blocks import apply_permutation

    direct = certify(ConstantHamiltonian(apply_permutation(M, perm)), 0.5, grid)
    via_arg = certify(ConstantHamiltonian(M), 0.5, grid, permutation=perm)
    np.testing.assert_allclose(via_arg.a_mu_samples, direct.a_mu_samples, atol=1e-13)


def test_certificate_json_round_trip_keys():
    cert = certify(build_example_ramp(5.0), 0.5, TimeGrid.uniform(5.0, 11))
    payload = cert.to_json_dict()
    for key in ("mu", "a_mu_max", "a_mu_timeavg", "v_lr", "grid", "a_mu"):
        assert key in payload
    assert len(payload["grid"]) == len(payload["a_mu"]) == 11


# -- closed forms ----------------------------------------------------------


def test_exp_local_bound_values():
    want = 4.0 / (1.0 - np.exp(-1.0))  # ~6.3279 by direct arithmetic
    assert exp_local_bound(1.0, 2.0, 1.0) == pytest.approx(want, rel=1e-14)
    assert exp_local_bound(1.0, 2.0, 1.0) == pytest.approx(6.32791, abs=1e-4)
    assert exp_local_bound(1.0, 1.0, 1e-12) == pytest.approx(want, rel=1e-9)


def test_exp_local_bound_divergent_regime():
    with pytest.raises(ValidationError):
        exp_local_bound(1.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        exp_local_bound(1.0, 1.0, 1.5)


def test_exp_local_bound_dominates_actual_loads():
    for seed in range(12):
        mu_p = 1.0 + 0.2 * seed
        M = random_exp_local(ExpLocalSpec(10, 1.0, mu_p, seed=seed))
        decomp = pairwise_decompose(M)
        for mu in np.linspace(0.05, mu_p * 0.95, 8):
            assert a_mu_pointwise(decomp, mu) <= exp_local_bound(1.0, mu_p, mu) + 1e-12


def test_optimal_mu_closed_form():
    mu_min, v_min = optimal_mu_exp_local(1.0, 1.0)
    assert mu_min == pytest.approx(bisect_lambert(np.exp(2.0)) - 1.0, abs=1e-10)
    mus = np.linspace(1e-4, 1.0 - 1e-4, 10_000)
    vals = np.array([exp_local_bound(1.0, 1.0, m) / m for m in mus])
    k = int(vals.argmin())
    assert abs(mu_min - mus[k]) <= 1e-4
    assert v_min <= vals[k] + 1e-8


def test_optimal_mu_linear_in_amplitude():
    mu1, v1 = optimal_mu_exp_local(1.0, 1.5)
    mu2, v2 = optimal_mu_exp_local(2.0, 1.5)
    assert mu1 == pytest.approx(mu2, abs=1e-14)
    assert v2 == pytest.approx(2.0 * v1, rel=1e-12)


# -- generic mu optimization ------------------------------------------------


def test_optimizer_below_envelope_optimum():
    """Actual entries sit inside the envelope, so the generic optimum can
    only undercut the closed-form envelope speed."""
    for seed in (0, 1, 2):
        mu_p = 1.5
        M = random_exp_local(ExpLocalSpec(10, 1.0, mu_p, seed=seed))
        H = ConstantHamiltonian(M)
        grid = TimeGrid.uniform(1.0, 11)
        _, v_env = optimal_mu_exp_local(1.0, mu_p)
        _, cert = optimize_mu_generic(H, grid, (0.05, mu_p * 0.999))
        assert cert.v_lr <= v_env * (1 + 1e-9)


def test_optimizer_unimodal_on_example_ramp():
    H = build_example_ramp(10.0)
    grid = TimeGrid.uniform(10.0, 101)
    mus = np.linspace(0.05, 5.0, 100)
    vals = []
    for mu in mus:
        vals.append(certify(H, mu, grid).v_lr)
    slopes = np.sign(np.diff(vals))
    nz = slopes[slopes != 0]
    n_minima = int(np.sum((nz[:-1] < 0) & (nz[1:] > 0)))
    assert n_minima <= 1
    mu_opt, cert = optimize_mu_generic(H, grid, (0.05, 5.0))
    assert cert.v_lr <= min(vals) + 1e-6


def test_optimizer_monotone_case_returns_hi():
    H = ConstantHamiltonian(np.diag([0.3, 0.7, 1.1]))
    mu_opt, cert = optimize_mu_generic(H, TimeGrid.uniform(1.0, 11), (0.5, 2.0))
    assert mu_opt == pytest.approx(2.0, rel=1e-4)
    assert cert.v_lr == pytest.approx(1.1 / mu_opt, rel=1e-9)


def test_optimizer_nonfinite_range_raises():
    M = random_exp_local(ExpLocalSpec(32, 1.0, 1.0, seed=0))
    with pytest.raises(NumericalError):
        optimize_mu_generic(
            ConstantHamiltonian(M), TimeGrid.uniform(1.0, 3), (1.0, 500.0)
        )


def test_optimizer_range_validation():
    H = ConstantHamiltonian(np.eye(3))
    with pytest.raises(ValidationError):
        optimize_mu_generic(H, TimeGrid.uniform(1.0, 3), (0.0, 1.0))
    with pytest.raises(ValidationError):
        optimize_mu_generic(H, TimeGrid.uniform(1.0, 3), (2.0, 1.0))
