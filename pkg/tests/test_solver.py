import numpy as np
import pytest

from conftest import random_input

from capax.channels import (
    GaussianAdditiveSpec,
    RayleighSpec,
    additive_channel,
    degenerate_channel,
    gaussian_channel,
    rayleigh_channel,
    uniform_noise,
)
from capax.errors import CertificateNeverPassed, InvalidParameter
from capax.infodens import DiscreteInput, information, mutual_information, weak_derivative
from capax.solver import (
    SolveOptions,
    cross_optimum_check,
    kt_check,
    optimize_fixed_n,
    solve_capacity,
)

LOG2E_HALF = 0.5 / np.log(2)


def test_gaussian_binary_optimum(gauss_solution):
    r = gauss_solution
    assert r.passed and len(r.input) == 2
    np.testing.assert_allclose(r.input.locations, [-1, 1], atol=1e-3)
    np.testing.assert_allclose(r.input.probabilities, [0.5, 0.5], atol=1e-3)
    assert r.certificate.max_violation <= 1e-5
    assert abs(r.capacity - mutual_information(r.input, gaussian_channel(GaussianAdditiveSpec(1), 1)).I) < 1e-12
    assert [t.N for t in r.trace] == [1, 2]
    assert not r.trace[0].passed


def test_support_residuals_vanish(gauss_solution):
    cert = gauss_solution.certificate
    assert np.abs(cert.support_residuals).max() <= cert.kt_tol
    assert cert.residuals.max() <= cert.kt_tol


def test_fixed_n_symmetric_init(gauss):
    init = DiscreteInput(np.array([-0.5, 0.5]), np.array([0.5, 0.5]), 1.0)
    F = optimize_fixed_n(gauss, 2, init)
    np.testing.assert_allclose(F.locations, [-1, 1], atol=1e-3)
    np.testing.assert_allclose(F.probabilities, [0.5, 0.5], atol=1e-3)


def test_fixed_n_single_point(gauss):
    F = optimize_fixed_n(gauss, 1, DiscreteInput.point_mass(0.0, 1.0))
    assert F.points == [(0.0, 1.0)]


def test_fixed_n_monotone(rayleigh):
    rng = np.random.default_rng(21)
    for _ in range(3):
        init = random_input(rng, 1.0, max_atoms=3)
        F = optimize_fixed_n(rayleigh, 3, init)
        assert information(F, rayleigh) >= information(init, rayleigh) - SolveOptions().inner_tol


def test_fixed_n_too_many_points(gauss):
    with pytest.raises(InvalidParameter):
        optimize_fixed_n(gauss, 1, DiscreteInput(np.array([-1.0, 1.0]), np.array([0.5, 0.5]), 1.0))


def test_point_mass_rejected(gauss):
    cert = kt_check(gauss, DiscreteInput.point_mass(0.0, 1.0))
    assert not cert.passed
    assert abs(cert.max_violation - LOG2E_HALF) < 1e-5


def test_degenerate_channel_certified():
    ch = degenerate_channel(1.0)
    cert = kt_check(ch, DiscreteInput.point_mass(0.0, 1.0))
    assert cert.passed and np.abs(cert.residuals).max() == 0.0
    r = solve_capacity(ch)
    assert r.capacity == 0.0 and len(r.input) == 1


def test_vanishing_peak():
    r = solve_capacity(gaussian_channel(GaussianAdditiveSpec(1.0), 1e-6))
    assert r.passed and r.capacity < 1e-6


def test_rayleigh_small_peak_below_gaussian():
    ray = solve_capacity(rayleigh_channel(RayleighSpec(0.1)))
    gau = solve_capacity(gaussian_channel(GaussianAdditiveSpec(1.0), 0.1))
    assert ray.passed and gau.passed
    assert len(ray.input) <= 3
    assert 0 < ray.capacity < gau.capacity


def test_capacity_monotone_in_N(rayleigh_solution):
    Is = [t.information for t in rayleigh_solution.trace]
    assert all(b >= a - SolveOptions().inner_tol for a, b in zip(Is, Is[1:]))


def test_capacity_monotone_in_A(gauss_solution):
    half = solve_capacity(gaussian_channel(GaussianAdditiveSpec(1.0), 0.5))
    assert half.capacity <= gauss_solution.capacity


@pytest.mark.parametrize("which", ["gauss", "uniform"])
def test_symmetric_channel_mirror(which, gauss_solution):
    if which == "gauss":
        ch, F = gaussian_channel(GaussianAdditiveSpec(1.0), 1.0), gauss_solution.input
    else:
        ch = additive_channel(uniform_noise(1.0, 1.0), 1.0)
        F = solve_capacity(ch).input
    G = F.mirror()
    assert abs(information(G, ch) - information(F, ch)) < 1e-9
    np.testing.assert_allclose(G.locations, F.locations, atol=1e-6)
    np.testing.assert_allclose(G.probabilities, F.probabilities, atol=1e-6)


def test_uniform_noise_three_levels():
    r = solve_capacity(additive_channel(uniform_noise(1.0, 1.0), 1.0))
    assert r.passed and abs(r.capacity - np.log2(3)) < 1e-9


def test_weak_derivative_nonpositive_at_optimum(gauss_solution):
    ch = gaussian_channel(GaussianAdditiveSpec(1.0), 1.0)
    rng = np.random.default_rng(31)
    F0 = gauss_solution.input
    for _ in range(50):
        assert weak_derivative(F0, random_input(rng, 1.0), ch) <= 1e-5


def test_weak_derivative_nonpositive_rayleigh(rayleigh_solution, rayleigh):
    rng = np.random.default_rng(32)
    for _ in range(50):
        assert weak_derivative(rayleigh_solution.input, random_input(rng, 1.0), rayleigh) <= 1e-5


def test_cross_optimum(gauss, gauss_solution):
    F = gauss_solution.input
    assert cross_optimum_check(gauss, F, F)
    assert cross_optimum_check(gauss, F, F.mirror())
    assert not cross_optimum_check(gauss, F, DiscreteInput.point_mass(0.0, 1.0))


def test_rayleigh_mirror_is_also_optimal(rayleigh, rayleigh_solution):
    # p(y|x) depends on x^2 only
    F = rayleigh_solution.input
    assert cross_optimum_check(rayleigh, F, F.mirror())
    assert kt_check(rayleigh, F.mirror()).passed


def test_never_certified_carries_result(gauss):
    opts = SolveOptions(n_max=1)
    with pytest.raises(CertificateNeverPassed) as exc:
        solve_capacity(gauss, opts)
    assert exc.value.result is not None
    assert not exc.value.result.passed


def test_determinism(gauss):
    a = solve_capacity(gaussian_channel(GaussianAdditiveSpec(1.0), 1.5), SolveOptions(seed=3))
    b = solve_capacity(gaussian_channel(GaussianAdditiveSpec(1.0), 1.5), SolveOptions(seed=3))
    assert a.input.points == b.input.points and a.capacity == b.capacity


@pytest.mark.parametrize("kwargs", [dict(kt_tol=0), dict(grid_size=2), dict(n_max=0),
                                    dict(merge_eps=-1.0), dict(inner_iters=0)])
def test_options_validation(kwargs):
    with pytest.raises(InvalidParameter):
        SolveOptions(**kwargs)


def test_certificate_to_dict(gauss_solution):
    d = gauss_solution.certificate.to_dict(full=True)
    assert d["passed"] and len(d["grid"]) == 2001 == len(d["residuals"])
    assert len(d["support_residuals"]) == 2
