import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import brentq

from capax.channels import (
    GaussianAdditiveSpec,
    RayleighSpec,
    additive_channel,
    degenerate_channel,
    gaussian_channel,
    laplace_noise,
    rayleigh_channel,
    uniform_noise,
)
from capax.conditions import (
    check_conditions,
    gamma_bound,
    rayleigh_envelopes,
    verify_additive_d_constant,
    verify_envelope,
    verify_nonconstant_kl,
    verify_q_log_q_integrable,
    verify_tail_decay,
)
from capax.errors import InvalidParameter
from capax.infodens import DiscreteInput
from capax.quad import Interval


def test_gamma_bound_values():
    assert gamma_bound(1.0, 3.0) == 1.0
    assert abs(gamma_bound(10.0, 3.0) - (3 - math.log(3)) / math.log(303)) < 1e-15
    assert abs(gamma_bound(10.0, 3.0) - 0.33277) < 1e-5
    assert gamma_bound(1e-9, 3.0) == 1.0


def test_gamma_bound_decreasing_in_A():
    vals = [gamma_bound(A, 3.0) for A in (0.5, 1, 2, 5, 10)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < vals[0]


@pytest.mark.parametrize("A, c", [(0.0, 3.0), (1.0, 2.0), (-1.0, 3.0)])
def test_gamma_bound_invalid(A, c):
    with pytest.raises(InvalidParameter):
        gamma_bound(A, c)


def test_rayleigh_envelope_constants():
    q, Q, y1, y2 = rayleigh_envelopes(1.0, 3.0, 0.9)
    assert y1 == 6.0
    assert abs(y2 - 2 * math.log(2)) < 1e-15
    root = brentq(lambda y: 0.5 * math.exp(-y / 2) - math.exp(-y), 0.1, 10, xtol=1e-15)
    assert abs(y2 - root) < 1e-9


def test_q_continuous_at_crossing():
    for A in (0.5, 1.0, 2.0):
        q, _, _, y2 = rayleigh_envelopes(A, 3.0, 0.9 * gamma_bound(A, 3.0))
        left = q(np.nextafter(y2, 0))
        right = q(np.nextafter(y2, np.inf))
        assert abs(left - right) < 1e-12


def test_Q_shape_beyond_switch(rayleigh):
    A = 1.0
    _, Q, y1, _ = rayleigh_envelopes(A, 3.0, 0.9)
    y = np.linspace(y1 * (1 + 1e-9), 500, 20000)
    assert np.all(np.diff(Q(y)) <= 0)
    xs = np.linspace(-A, A, 101)
    assert np.all(Q(y)[:, None] > rayleigh.eval(y[:, None], xs[None, :]))


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.2])
def test_rayleigh_envelopes_invalid_gamma(gamma):
    with pytest.raises(InvalidParameter):
        rayleigh_envelopes(1.0, 3.0, gamma)


@pytest.mark.parametrize("A", [0.5, 1.0, 2.0])
def test_rayleigh_sandwich(A):
    ch = rayleigh_channel(RayleighSpec(A))
    report = verify_envelope(ch, 100, 10_000)
    assert report.overall
    assert all(c.margin >= 0 for c in report.checks)


def test_corrupted_Q_fails(gauss):
    bad = replace(gauss, envelope_Q=lambda y: gauss.envelope_Q(y) / 10, _cache={})
    report = verify_envelope(bad)
    assert not report.overall
    chk = report["density_below_Q"]
    assert not chk.passed and chk.margin < 0
    y, x = chk.witness["y"], chk.witness["x"]
    assert bad.eval(y, x) > bad.envelope_Q(y)


def test_q_log_q_gaussian_finite(gauss):
    value, ok = verify_q_log_q_integrable(gauss)
    assert ok and math.isfinite(value) and value > 0


def test_q_log_q_harmonic_diverges(gauss):
    ch = replace(gauss, output_domain=Interval(0.0, math.inf),
                 envelope_Q=lambda y: 1 / (1 + np.asarray(y)),
                 envelope_q=lambda y: np.exp(-np.asarray(y)),
                 log_envelope_q=lambda y: -np.asarray(y, dtype=float), _cache={})
    value, ok = verify_q_log_q_integrable(ch)
    assert not ok and value == math.inf


def test_q_log_q_rayleigh_tail_not_integrable():
    # Q log q ~ -log2(e) y^(-gamma) with gamma < 1, so the integral diverges
    ch = rayleigh_channel(RayleighSpec(1.0))
    value, ok = verify_q_log_q_integrable(ch)
    assert not ok


def test_q_log_q_fast_tail_converges(gauss):
    ch = replace(gauss, output_domain=Interval(0.0, math.inf),
                 envelope_Q=lambda y: np.minimum(1.0, np.asarray(y, dtype=float) ** -3.0),
                 envelope_q=lambda y: np.exp(-np.asarray(y)),
                 log_envelope_q=lambda y: -np.asarray(y, dtype=float), _cache={})
    value, ok = verify_q_log_q_integrable(ch)
    # int_0^1 y dy + int_1^inf y^-2 dy, in bits
    assert ok and abs(value - 1.5 / math.log(2)) < 1e-6


@pytest.mark.parametrize("ch", [
    gaussian_channel(GaussianAdditiveSpec(1.0), 1.0),
    additive_channel(uniform_noise(1.0, 1.0), 1.0),
    additive_channel(laplace_noise(1.0, 1.0), 1.0),
])
def test_additive_d_constant(ch):
    spread, ok = verify_additive_d_constant(ch, 1000)
    assert ok and spread < 1e-6


def test_gaussian_d_spread_tiny(gauss):
    spread, _ = verify_additive_d_constant(gauss, 1000)
    assert spread < 1e-9


def test_rayleigh_d_difference(rayleigh):
    assert rayleigh.closed_form_d(1.0) - rayleigh.closed_form_d(0.0) == 1.0
    spread, ok = verify_additive_d_constant(rayleigh, 101)
    assert not ok and abs(spread - 1.0) < 1e-6


def test_nonconstant_kl(gauss, rayleigh):
    F0 = DiscreteInput.point_mass(0.0, 1.0)
    ok, (x1, x2) = verify_nonconstant_kl(gauss, F0)
    assert ok and (x1, x2) == (0.0, 1.0)
    ok, _ = verify_nonconstant_kl(rayleigh, F0)
    assert ok
    ok, _ = verify_nonconstant_kl(degenerate_channel(1.0), F0)
    assert not ok


def test_tail_decay_surrogate(gauss, rayleigh):
    F0 = DiscreteInput.point_mass(0.0, 1.0)
    for ch in (gauss, rayleigh):
        worst, ok = verify_tail_decay(ch, F0)
        assert ok and worst < 1e-9


def test_check_conditions_gaussian(gauss):
    report = check_conditions(gauss)
    assert report.overall
    names = [c["check_name"] for c in report.to_dict()["checks"]]
    assert "d_constant" in names and "Q_log_q_integrable" in names


def test_check_conditions_rayleigh_report(rayleigh):
    report = check_conditions(rayleigh)
    failed = [c.name for c in report.checks if not c.passed]
    assert failed == ["Q_log_q_integrable"]
    assert not report.overall
