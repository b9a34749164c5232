import math

import numpy as np
import pytest
from scipy import integrate

from effuniv.mollifier import (MollifierSpec, C_phi_integration_by_parts, alpha_table, bump, bump_normalizer,
                               bump_transform, fit_C_phi, fourier_alpha, full_sum_bound, phi_delta, phi_Q_value,
                               truncated_phi_Q, truncation_error_bound)


def test_normalizer():
    assert bump_normalizer() == pytest.approx(2.2522836210, rel=1e-9)
    mass, _ = integrate.quad(bump, -1, 1)
    assert mass == pytest.approx(1.0, abs=1e-12)


def test_phi_delta_shape():
    spec = MollifierSpec(Q=10)
    assert phi_delta(spec, 0.0) == pytest.approx(bump(0.0) / spec.delta)
    assert phi_delta(spec, 0.5) == 0
    for th in (0.03, -0.07, 0.3):
        assert phi_delta(spec, th) == pytest.approx(phi_delta(spec, th + 1), abs=1e-12)
    mass, _ = integrate.quad(lambda t: phi_delta(spec, t), -0.5, 0.5, points=[-0.1, 0.1])
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_alpha_zero_is_one():
    spec = MollifierSpec(Q=10)
    for th in np.random.default_rng(0).uniform(size=20):
        assert abs(fourier_alpha(spec, 0, th) - 1) <= 1e-10


def test_alpha_against_direct_quadrature():
    spec = MollifierSpec(Q=5)
    th0 = 0.37
    for n in (1, 3, -4, 17):
        re, _ = integrate.quad(lambda t: phi_delta(spec, t - th0) * math.cos(2 * math.pi * n * t), -0.5, 0.5, limit=200,
                               points=[th0 - 0.2, th0, th0 + 0.2 - 1])
        im, _ = integrate.quad(lambda t: -phi_delta(spec, t - th0) * math.sin(2 * math.pi * n * t), -0.5, 0.5, limit=200,
                               points=[th0 - 0.2, th0, th0 + 0.2 - 1])
        assert abs(fourier_alpha(spec, n, th0) - complex(re, im)) < 1e-9


def test_alpha_bounded_by_one():
    spec = MollifierSpec(Q=7)
    assert np.all(np.abs(alpha_table(spec, 300)) <= 1 + 1e-12)


def test_C_phi_sweep_within_integration_by_parts():
    fitted = fit_C_phi()
    assert 0 < fitted <= C_phi_integration_by_parts()
    assert C_phi_integration_by_parts() == pytest.approx(0.1822, abs=1e-4)


def test_phi_Q_values():
    spec = MollifierSpec(Q=11)
    k = spec.n_primes
    ts = np.random.default_rng(1).uniform(size=k)
    assert phi_Q_value(spec, ts, ts) == pytest.approx((bump(0.0) / spec.delta) ** k)
    off = ts.copy()
    off[2] += 0.5
    assert phi_Q_value(spec, off, ts) == 0
    rng = np.random.default_rng(2)
    assert all(phi_Q_value(spec, rng.uniform(size=k), ts) >= 0 for _ in range(50))


def test_truncation_bound_monotone_and_vanishing():
    spec = MollifierSpec(Q=3)
    bs = [truncation_error_bound(spec, M) for M in (10, 100, 1000, 10**5, 10**8)]
    assert all(a > b for a, b in zip(bs, bs[1:]))
    assert bs[-1] < 1e-6


def _majorant(spec, n):
    n = np.abs(n).astype(float)
    with np.errstate(divide="ignore"):
        return np.minimum(1.0, spec.C_phi / (spec.delta * n) ** 2)


def test_truncation_bound_matches_brute_tail():
    spec = MollifierSpec(Q=3, M=100)
    n = np.arange(-10**5, 10**5 + 1)
    m = _majorant(spec, n)
    full = math.fsum(m.tolist())
    inner = math.fsum(m[np.abs(n) <= 100].tolist())
    brute = full**2 - inner**2  # two primes: tail of the product sum over max |n_p| > M
    # the brute sum is cut at |n| = 10^5; add the remaining majorant tail analytically
    rest = 2 * spec.C_phi / spec.delta**2 / 10**5
    brute += 2 * rest * full
    bound = truncation_error_bound(spec)
    assert brute <= bound <= 1.05 * brute
    assert full_sum_bound(spec) == pytest.approx(full**2, rel=1e-4)


def test_true_fourier_tail_below_bound():
    spec = MollifierSpec(Q=3, M=100)
    a = np.abs(alpha_table(spec, 600))
    n = np.arange(-600, 601)
    inner = a[np.abs(n) <= 100].sum()
    true_tail = a.sum() ** 2 - inner**2
    assert true_tail <= truncation_error_bound(spec)


def test_reconstruction_within_bound():
    spec = MollifierSpec(Q=3, M=100)
    rng = np.random.default_rng(3)
    bound = truncation_error_bound(spec)
    for _ in range(100):
        th, ts = rng.uniform(size=2), rng.uniform(size=2)
        assert abs(truncated_phi_Q(spec, th, ts, 100) - phi_Q_value(spec, th, ts)) <= bound


def test_spec_guards():
    with pytest.raises(ValueError):
        MollifierSpec(Q=2)
    with pytest.raises(ValueError):
        MollifierSpec(Q=3, M=1)
