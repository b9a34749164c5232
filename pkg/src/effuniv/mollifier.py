"""Periodized bump phi_delta, its Fourier coefficients, and the product Phi_Q.

phi(x) = c exp(-1/(1 - x^2)) on (-1, 1), normalized to unit mass.  With
delta = 1/Q, phi_delta(theta) = sum_m phi((theta + m)/delta)/delta and
Phi_Q(theta) = prod_{p <= Q} phi_delta(theta_p - theta*_p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import polygamma

from .primes import primes_upto

_QUAD = dict(epsabs=1e-13, epsrel=1e-13, limit=400)


def _bump_raw(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def bump_normalizer() -> float:
    mass, _ = integrate.quad(lambda x: math.exp(-1.0 / (1.0 - x * x)), -1, 1, **_QUAD)
    return 1.0 / mass


def bump(x):
    """The normalized bump phi; scalar in, scalar out."""
    v = bump_normalizer() * _bump_raw(x)
    return float(v) if np.ndim(x) == 0 else v


def _bump_second_derivative(x: float) -> float:
    if abs(x) >= 1:
        return 0.0
    u = 1.0 - x * x
    e = math.exp(-1.0 / u)
    # d/dx e^{-1/u} = -2x/u^2 e^{-1/u}
    d1 = -2.0 * x / u**2
    dd1 = (-2.0 * u**2 - 2.0 * x * 2.0 * u * 2.0 * x) / u**4
    return bump_normalizer() * e * (d1 * d1 + dd1)


@lru_cache(maxsize=1)
def C_phi_integration_by_parts() -> float:
    """C with |hat phi(xi)| <= C / xi^2 (xi in cycles), from two integrations by parts."""
    val, _ = integrate.quad(lambda x: abs(_bump_second_derivative(x)), -1, 1, **_QUAD)
    return val / (4.0 * math.pi**2)


@lru_cache(maxsize=200000)
def bump_transform(xi: float) -> float:
    """hat phi(xi) = int phi(x) cos(2 pi xi x) dx (phi is even, so this is real)."""
    if xi == 0:
        val, _ = integrate.quad(lambda x: bump(x), -1, 1, **_QUAD)
        return val
    val, _ = integrate.quad(lambda x: bump(x), -1, 1, weight="cos", wvar=2 * math.pi * xi, **_QUAD)
    return val


@dataclass(frozen=True)
class MollifierSpec:
    Q: float
    M: float = 100.0
    C_phi: float = field(default_factory=C_phi_integration_by_parts)

    def __post_init__(self):
        if not self.Q > 2:
            raise ValueError("Q must exceed 2")
        if not self.M > 2:
            raise ValueError("M must exceed 2")

    @property
    def delta(self) -> float:
        return 1.0 / self.Q

    @property
    def n_primes(self) -> int:
        return int(primes_upto(self.Q).size)


def phi_delta(spec: MollifierSpec, theta) -> np.ndarray | float:
    d = spec.delta
    th = np.asarray(theta, dtype=float)
    reduced = (th + 0.5) % 1.0 - 0.5
    reach = int(math.ceil(d))  # periodic copies overlapping [-1/2, 1/2)
    total = np.zeros_like(reduced)
    for m in range(-reach, reach + 1):
        total = total + _bump_raw((reduced + m) / d)
    out = bump_normalizer() * total / d
    return float(out) if np.ndim(theta) == 0 else out


def fourier_alpha(spec: MollifierSpec, n: int, theta0: float) -> complex:
    """alpha_n(theta0) = int_{-1/2}^{1/2} phi_delta(theta - theta0) e^{-2 pi i n theta} d theta."""
    n = int(n)
    return complex(np.exp(-2j * np.pi * n * theta0) * bump_transform(abs(n) * spec.delta))


def alpha_table(spec: MollifierSpec, M: int) -> np.ndarray:
    """hat phi(n delta) for n = -M..M."""
    vals = np.array([bump_transform(k * spec.delta) for k in range(M + 1)])
    return np.concatenate([vals[:0:-1], vals])


def fit_C_phi(deltas=(0.1, 0.01), n_max: int = 1000) -> float:
    """max |alpha_n| delta^2 n^2 over the sweep."""
    best = 0.0
    for d in deltas:
        for n in range(1, n_max + 1):
            best = max(best, abs(bump_transform(n * d)) * (d * n) ** 2)
    return best


def phi_Q_value(spec: MollifierSpec, theta, theta_star) -> float:
    diff = np.asarray(theta, dtype=float) - np.asarray(theta_star, dtype=float)
    return float(np.prod(phi_delta(spec, diff)))


def truncated_phi_Q(spec: MollifierSpec, theta, theta_star, M: int) -> float:
    """Fourier series of Phi_Q restricted to max_p |n_p| <= M (separable, so a product of 1-d sums)."""
    a = alpha_table(spec, M)
    n = np.arange(-M, M + 1)
    diff = np.asarray(theta, dtype=float) - np.asarray(theta_star, dtype=float)
    factors = [np.sum(a * np.exp(2j * np.pi * n * d)).real for d in diff]
    return float(np.prod(factors))


def _majorant_sums(spec: MollifierSpec, M: float) -> tuple[float, float]:
    """(sum over all n, sum over |n| > M) of min{1, C_phi / (delta n)^2}."""
    d, C = spec.delta, spec.C_phi
    nstar = int(math.floor(math.sqrt(C) / d))  # min is 1 up to here
    full = 1.0 + 2.0 * nstar + 2.0 * (C / d**2) * float(polygamma(1, nstar + 1))
    Mi = int(math.floor(M))
    flat = max(0, nstar - Mi)
    tail = 2.0 * flat + 2.0 * (C / d**2) * float(polygamma(1, max(Mi, nstar) + 1))
    return full, tail


def full_sum_bound(spec: MollifierSpec) -> float:
    """Bound on sum_n |beta_n| by (sum_n min{1, C_phi/(delta n)^2})^{pi(Q)}."""
    full, _ = _majorant_sums(spec, spec.M)
    return full ** spec.n_primes


def truncation_error_bound(spec: MollifierSpec, M: float | None = None) -> float:
    """Bound on sum_{max |n_p| > M} |beta_n|: pi(Q) * tail * full^(pi(Q) - 1)."""
    M = spec.M if M is None else M
    full, tail = _majorant_sums(spec, M)
    k = spec.n_primes
    return k * tail * full ** (k - 1)


def fitted_exponent_constants(spec: MollifierSpec) -> dict:
    """C0 with full sum = exp(C0 Q) and C1 with truncation bound = exp(C1 Q)/M, at this (Q, M)."""
    fs = full_sum_bound(spec)
    tb = truncation_error_bound(spec)
    return {"C0": math.log(fs) / spec.Q, "C1": math.log(tb * spec.M) / spec.Q if tb > 0 else -math.inf}
