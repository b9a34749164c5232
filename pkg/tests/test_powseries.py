import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from effuniv.powseries import (F_partial, F_polys, G_polys, TruncatedSeries, alpha_norm_bound, exp_log_chain, f_map,
                               h_series, majorizes, multi_indices, perturbation_constant, reconstruct_derivatives,
                               weighted_degree)

cplx = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


def test_f_map():
    assert np.allclose(f_map([1, 2]).coeffs, [0, 1, 2])
    assert np.allclose(f_map([]).coeffs, [0])
    assert np.allclose(f_map([1j]).coeffs, [0, 1j])


def test_F_and_G_symbolic():
    z1, z2 = 0.7 - 0.2j, 1.3 + 0.4j
    assert np.allclose(F_polys([z1]), [z1])
    assert np.allclose(F_polys([z1, z2]), [z1, z2 + z1**2 / 2])
    assert np.allclose(G_polys([z1, z2]), [z1, z2 - z1**2 / 2])
    assert np.allclose(F_polys([0, 0, 0]), 0) and np.allclose(G_polys([0, 0, 0]), 0)


def test_exp_log_against_math():
    s = TruncatedSeries([0.3, 1.0, 0, 0, 0])  # 0.3 + X
    e = s.exp().coeffs
    assert np.allclose(e, [math.exp(0.3) / math.factorial(k) for k in range(5)])
    l = TruncatedSeries([1.0, 1.0, 0, 0, 0]).log().coeffs  # log(1 + X)
    assert np.allclose(l, [0, 1, -1 / 2, 1 / 3, -1 / 4])


def test_series_arithmetic():
    a = TruncatedSeries([1, 2, 3])
    b = TruncatedSeries([2, -1, 0.5])
    assert np.allclose((a * b).coeffs, [2, 3, 4.5])
    assert np.allclose((a / b * b).coeffs, a.coeffs)
    assert np.allclose((a - a).coeffs, 0)
    assert np.allclose(a.shift(1).coeffs, [0, 1, 2])
    assert a.evaluate(0.5) == pytest.approx(1 + 1 + 0.75)
    assert "X^2" in str(a)
    with pytest.raises(ValueError):
        a + TruncatedSeries([1, 2])


@settings(max_examples=200, deadline=None)
@given(st.lists(cplx, min_size=1, max_size=8))
def test_round_trip_property(z):
    z = np.array(z)
    back = G_polys(F_polys(z))
    assert np.sum(np.abs(back - z)) <= 1e-12 * max(1.0, np.sum(np.abs(z)))


def test_majorizes_examples():
    assert majorizes(TruncatedSeries([0, 1j]), TruncatedSeries([0, 1]))
    assert not majorizes(TruncatedSeries([0, 2]), TruncatedSeries([0, 1]))
    with pytest.raises(ValueError):
        majorizes(TruncatedSeries([0, 1]), TruncatedSeries([0, -1]))
    with pytest.raises(ValueError):
        majorizes(TruncatedSeries([0, 1]), TruncatedSeries([0, 1j]))


def test_h_series_is_nonnegative():
    h = h_series([1 + 1j, -0.5, 0.25j], 6)
    assert np.all(h.coeffs.imag == 0) and np.all(h.coeffs.real >= 0)


def test_weighted_degree():
    assert weighted_degree((1, 0, 2)) == 7
    assert list(multi_indices(2, 1)) == [(0, 1), (1, 0)]


def test_F_partial_is_shifted_F():
    # d F_n / d z_1 = F_{n-1}
    z = np.array([0.3 + 0.1j, -0.7, 1.1j, 0.2])
    d = F_partial(z, (1,))
    assert np.allclose(d, np.concatenate([[1], F_polys(z)[:-1]]))
    assert np.allclose(F_partial([1, 2, 3], (1, 0, 0)), [1, 1, 2.5])


def test_alpha_norm_bound_examples():
    assert alpha_norm_bound([0]) == pytest.approx(3 * abs(math.log(2 / 3)))
    assert alpha_norm_bound([0]) == pytest.approx(1.2164, abs=1e-4)


def test_alpha_norm_bound_random():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        N = int(rng.integers(2, 7))
        a = (rng.normal(size=N - 1) + 1j * rng.normal(size=N - 1)) * rng.uniform(0, 3)
        assert np.sum(np.abs(a)) <= alpha_norm_bound(F_polys(a))


def test_exp_log_chain_examples():
    a0, a = exp_log_chain([1, 0])
    assert a0 == 0 and np.allclose(a, [0])
    a0, a = exp_log_chain([2, 0, 0])
    assert a0 == pytest.approx(math.log(2)) and np.allclose(a, [0, 0])
    a0, a = exp_log_chain([1, 1])
    assert a0 == 0 and np.allclose(a, [1])
    assert np.allclose(reconstruct_derivatives(a0, a), [1, 1])
    with pytest.raises(ValueError):
        exp_log_chain([0, 1])


def test_exp_log_chain_branch():
    a0, _ = exp_log_chain([-1, 0], branch=1)
    assert a0 == pytest.approx(3j * math.pi)


def test_exp_log_chain_reconstruction():
    rng = np.random.default_rng(1)
    for _ in range(300):
        N = int(rng.integers(1, 8))
        c = rng.normal(size=N) + 1j * rng.normal(size=N)
        c[0] = c[0] / abs(c[0]) * 10 ** rng.uniform(-6, 1)
        back = reconstruct_derivatives(*exp_log_chain(c))
        # the log-derivative chain loses (|c|/|c_0|)^(N-1) relative digits
        cond = max(1.0, np.max(np.abs(c)) / abs(c[0])) ** max(1, N - 1)
        assert np.max(np.abs(back - c)) <= 1e-13 * cond * max(1.0, np.max(np.abs(c)))


def test_perturbation_constant_stable():
    k_small = perturbation_constant(3, samples=300, rng=np.random.default_rng(0))
    k_large = perturbation_constant(3, samples=1200, rng=np.random.default_rng(0))
    assert math.isfinite(k_small) and math.isfinite(k_large)
    assert 0 < k_small <= k_large
    assert perturbation_constant(1) == 0


def _fabs(vals, N):
    return TruncatedSeries(np.concatenate([[0.0], np.abs(vals)]), N)


def test_log_side_majorized_by_h():
    rng = np.random.default_rng(11)
    N = 7
    for _ in range(200):
        z = (rng.normal(size=N) + 1j * rng.normal(size=N)) * rng.uniform(0.1, 2)
        assert majorizes(_fabs(z, N), h_series(F_polys(z), N), slack=1e-12)


def test_partial_derivatives_majorized():
    rng = np.random.default_rng(12)
    N = 5
    for _ in range(10):
        z = (rng.normal(size=N) + 1j * rng.normal(size=N)) * rng.uniform(0.1, 2)
        expo = _fabs(z, N).exp()
        for i in multi_indices(N - 1, 3):
            lhs = _fabs(F_partial(z, i), N)
            rhs = expo.shift(weighted_degree(i))
            assert majorizes(lhs, rhs, slack=1e-12)
