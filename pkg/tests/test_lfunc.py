import cmath
import math

import numpy as np
import pytest

from effuniv.lfunc import (LFunctionDescriptor, builtin_dirichlet, builtin_zeta, density_mean,
                           fit_log_coeff_constant, fit_prime_coeff_constant, lambda_weight, principal_phase)
from effuniv.primes import primes_upto

CHI4 = [0, 1, 0, -1]
CHI5 = [0, 1, 1j, -1j, -1]  # generator 2 mapped to i


def test_zeta_defaults():
    z = builtin_zeta()
    assert z.euler_log_coeff(2, 1) == 1 and z.euler_log_coeff(2, 3) == pytest.approx(1 / 3)
    assert z.E_L == 5 / 12 and z.sigma_L == 0.5 and z.kappa == 1 and z.D == 22 and z.degree == 1


def test_zeta_density_is_one():
    assert density_mean(builtin_zeta(), 10**5) == 1.0
    for X in (2, 3, 100, 7919):
        assert density_mean(builtin_zeta(), X) == 1.0


def test_dirichlet_modulus_one_is_zeta():
    d = builtin_dirichlet(1, [1])
    z = builtin_zeta()
    for p in (2, 3, 5, 101):
        for l in (1, 2, 3):
            assert d.euler_log_coeff(p, l) == z.euler_log_coeff(p, l)


def test_chi4_values():
    d = builtin_dirichlet(4, CHI4)
    assert d.dirichlet_coeff(3) == -1
    assert d.euler_log_coeff(3, 2) == pytest.approx(0.5)
    assert d.m_L == 0 and d.name == "dirichlet:4"


@pytest.mark.parametrize("table", [[0, 1, 0, 1j], [0, 1, 1, -1, -1], [1, 1, 0, -1], [0, 2, 0, -1]])
def test_bad_tables_rejected(table):
    with pytest.raises(ValueError):
        builtin_dirichlet(len(table), table)


@pytest.mark.parametrize("desc", [builtin_zeta(), builtin_dirichlet(4, CHI4), builtin_dirichlet(5, CHI5)])
def test_a_equals_b_on_primes(desc):
    for p in primes_upto(10**4).tolist():
        assert desc.dirichlet_coeff(p) == desc.euler_log_coeff(p, 1)


@pytest.mark.parametrize("desc", [builtin_zeta(), builtin_dirichlet(5, CHI5)])
def test_log_coeff_bound_on_grid(desc):
    for eps in (0.01, 0.1):
        C = fit_log_coeff_constant(desc, eps, p_limit=200, l_max=8)
        assert 0 < C <= 1.0


def test_prime_coeff_constant():
    assert fit_prime_coeff_constant(builtin_zeta(), 0.0, 1000) == 1.0


def test_lambda_weight_cases():
    z = builtin_zeta()
    assert lambda_weight(z, 4, 3) == pytest.approx(math.log(3))
    assert lambda_weight(z, 4, 8) == pytest.approx(math.log(2) / 2)
    assert lambda_weight(z, 4, 17) == 0
    assert lambda_weight(z, 4, 6) == 0
    assert lambda_weight(z, 4, 1) == 0


def test_lambda_weight_continuity():
    z = builtin_zeta()
    n = 9
    assert abs(lambda_weight(z, n + 1e-9, n) - lambda_weight(z, n - 1e-9, n)) < 1e-7
    x = 3.0  # n = x^2 endpoint
    assert abs(lambda_weight(z, x + 1e-9, n)) < 1e-7
    assert lambda_weight(z, x - 1e-9, n) == 0


def test_json_round_trip():
    d = builtin_dirichlet(5, CHI5)
    back = LFunctionDescriptor.from_json(d.to_json())
    assert back.name == d.name and back.modulus == 5
    ps = primes_upto(1000)
    assert np.array_equal(back.prime_coeffs(ps), d.prime_coeffs(ps))
    assert builtin_zeta().to_json() == LFunctionDescriptor.from_json(builtin_zeta().to_json()).to_json()


def test_json_schema_checked():
    with pytest.raises(ValueError):
        LFunctionDescriptor.from_json('{"schema": 2}')


def test_invariants_enforced():
    z = builtin_zeta()
    with pytest.raises(ValueError):
        LFunctionDescriptor(**{**z.__dict__, "E_L": 1.5})
    with pytest.raises(ValueError):
        LFunctionDescriptor(**{**z.__dict__, "kappa": 0})


def test_principal_phase_range():
    for v in (1, -1, 1j, -1j, cmath.exp(-1e-18j)):
        th = principal_phase(v)
        assert 0 <= th < 1
        assert cmath.exp(2j * math.pi * th) == pytest.approx(v)
