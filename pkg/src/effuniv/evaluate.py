"""Numerical zeta / Dirichlet L evaluation and the horizontal-path log branch.

L(s, chi) = q^{-s} sum_a chi(a) zeta(s, a/q), each Hurwitz zeta by
Euler-Maclaurin.  Derivatives come from running the same formula on a
Taylor jet ``s + h`` (see :class:`~effuniv.powseries.TruncatedSeries`), so
every term is differentiated exactly.  The log branch is seeded at
``anchor_sigma`` by the absolutely convergent log-Dirichlet series and
continued horizontally to the target, refusing to cross near-zeros.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli

from .lfunc import LFunctionDescriptor
from .assignment import PhaseAssignment
from .powseries import TruncatedSeries
from .primes import primes_upto


class PrecisionError(ArithmeticError):
    """Internal error estimate exceeds the requested tolerance."""


class BranchError(ArithmeticError):
    """The horizontal continuation path passes too close to a zero."""


@dataclass(frozen=True)
class EvalConfig:
    abs_tol: float = 1e-10
    euler_maclaurin_terms: int = 12
    cutoff: int | None = None  # main-sum length; adaptive when None
    anchor_sigma: float = 10.0
    zero_tol: float = 1e-8
    max_step: float = 1.0

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")

    def main_length(self, s: complex) -> int:
        if self.cutoff is not None:
            return max(int(self.cutoff), int(abs(s.imag) / (2 * math.pi)) + 1)
        return max(20, int(math.ceil(2 * abs(s.imag))))


DEFAULT_CONFIG = EvalConfig()


@lru_cache(maxsize=4)
def _bernoulli_factors(K: int) -> np.ndarray:
    B = bernoulli(2 * K + 2)
    return np.array([B[2 * j] / math.factorial(2 * j) for j in range(1, K + 2)])


@lru_cache(maxsize=256)
def _main_logs(n_terms: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    x = np.arange(n_terms, dtype=float) + alpha
    return x, np.log(x)


def _power_jet(log_x: float, s: complex, m: int) -> TruncatedSeries:
    """x^{-(s+h)} as a jet in h."""
    k = np.arange(m + 1)
    fact = np.array([math.factorial(int(j)) for j in k], dtype=float)
    return TruncatedSeries(cmath.exp(-s * log_x) * (-log_x) ** k / fact)


def _pole_free(log_x: float, u: TruncatedSeries) -> TruncatedSeries:
    """(x^{-u} - 1)/u as a jet, stable near u = 0."""
    u0 = u.coeffs[0]
    if abs(u0 * log_x) > 0.5:
        return ((u * (-log_x)).exp() - 1.0) / u
    # sum_{m>=1} (-log x)^m u^(m-1) / m!, Horner form
    M = 1
    while abs(log_x) ** M * (abs(u0) + 1) ** M / math.factorial(M) > 1e-18 or M < u.N_max + 2:
        M += 1
    acc = TruncatedSeries.constant((-log_x) ** M / math.factorial(M), u.N_max)
    for m in range(M - 1, 0, -1):
        acc = acc * u + (-log_x) ** m / math.factorial(m)
    return acc


def hurwitz_jet(s: complex, alpha: float, order: int, config: EvalConfig = DEFAULT_CONFIG,
                drop_pole: bool = False):
    """Taylor coefficients (d^k/ds^k zeta(s, alpha) / k!) for k <= order, and an error estimate.

    With ``drop_pole`` the returned jet is that of zeta(s, alpha) - 1/(s - 1),
    which is entire; summing it against a character that sums to zero
    gives L(s, chi) without cancellation at s = 1.
    """
    s = complex(s)
    m = order
    n = config.main_length(s)
    K = config.euler_maclaurin_terms
    x, lx = _main_logs(n, float(alpha))
    base = np.exp(-s * lx)
    k = np.arange(m + 1)
    fact = np.array([math.factorial(int(j)) for j in k], dtype=float)
    coeffs = (base[None, :] * (-lx[None, :]) ** k[:, None]).sum(axis=1) / fact
    total = TruncatedSeries(coeffs)

    xN = n + float(alpha)
    lN = math.log(xN)
    S = TruncatedSeries.variable(s, m)
    pw = _power_jet(lN, s, m)  # xN^{-S}
    if drop_pole:
        total = total + _pole_free(lN, S - 1.0) + pw * 0.5
    else:
        if abs(s - 1) == 0:
            raise ZeroDivisionError("pole of zeta(s, alpha) at s = 1")
        total = total + pw * xN / (S - 1.0) + pw * 0.5
    bf = _bernoulli_factors(K)
    # correction terms on raw coefficient arrays; series objects are too slow here
    pwc = pw.coeffs
    rising = np.zeros(m + 1, dtype=complex)  # (S)_{2j-1}
    rising[0] = s
    if m >= 1:
        rising[1] = 1.0
    corr = np.zeros(m + 1, dtype=complex)
    err = 0.0
    for j in range(1, K + 2):
        if j > 1:
            for shift in (2 * j - 3, 2 * j - 2):
                nxt = rising * (s + shift)
                nxt[1:] += rising[:-1]
                rising = nxt
        term = np.convolve(rising, pwc)[: m + 1] * (bf[j - 1] * xN ** (-(2 * j - 1)))
        if j <= K:
            corr += term
        else:
            err = float(np.max(np.abs(term) * fact))
    total = total + TruncatedSeries(corr)
    return total.coeffs, err


def L_jet(desc: LFunctionDescriptor, s: complex, order: int, config: EvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Taylor coefficients L^{(k)}(s)/k!, k = 0..order."""
    if desc.character is None:
        raise NotImplementedError("evaluation requires a character-backed descriptor")
    s = complex(s)
    if s.real <= 0:
        raise ValueError("evaluation implemented for Re(s) > 0 only")
    q = desc.modulus
    chi = desc.character
    drop = abs(sum(chi)) < 1e-12  # non-principal: pole parts cancel exactly
    total = np.zeros(order + 1, dtype=complex)
    err = 0.0
    for a in range(1, q + 1):
        c = chi[a % q]
        if c == 0:
            continue
        coeffs, e = hurwitz_jet(s, a / q, order, config, drop_pole=drop)
        total += c * coeffs
        err += e
    if q > 1:
        total = (TruncatedSeries(total) * _power_jet(math.log(q), s, order)).coeffs
        err *= q ** (-s.real)
    fact = np.array([math.factorial(k) for k in range(order + 1)], dtype=float)
    if err * fact.max() > config.abs_tol:
        raise PrecisionError(f"Euler-Maclaurin error estimate {err:.3e} exceeds tolerance {config.abs_tol:.1e}")
    return total


def eval_L_derivs(desc: LFunctionDescriptor, s: complex, order: int, config: EvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """(L(s), L'(s), ..., L^{(order)}(s))."""
    fact = np.array([math.factorial(k) for k in range(order + 1)], dtype=float)
    return L_jet(desc, s, order, config) * fact


def eval_L(desc: LFunctionDescriptor, s: complex, order: int = 0, config: EvalConfig = DEFAULT_CONFIG) -> complex:
    return complex(eval_L_derivs(desc, s, order, config)[order])


def _log_dirichlet_series(desc: LFunctionDescriptor, s: complex, tol: float = 1e-17) -> complex:
    """sum_p sum_l b(p^l) p^{-ls}; valid for Re(s) well above 1."""
    sigma = s.real - desc.theta_exponent
    if sigma <= 1.5:
        raise ValueError("log-Dirichlet seed needs Re(s) > 1.5")
    # tail over n > P is below C P^{1 - sigma} / (sigma - 1)
    P = 2.0
    while desc.coeff_bound * P ** (1 - sigma) / (sigma - 1) > tol:
        P *= 2
    ps = primes_upto(P)
    total = 0j
    lp = np.log(ps.astype(float))
    l = 1
    while True:
        bl = desc.log_coeffs(ps, l)
        terms = bl * np.exp(-l * s * lp)
        total += complex(terms.sum())
        if desc.coeff_bound * 2.0 ** (-l * sigma) < tol:
            break
        l += 1
    return total


def eval_logL(desc: LFunctionDescriptor, s: complex, order: int = 0, config: EvalConfig = DEFAULT_CONFIG) -> complex:
    return complex(eval_logL_derivs(desc, s, order, config)[order])


def eval_logL_derivs(desc: LFunctionDescriptor, s: complex, order: int, config: EvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """((log L)(s), (log L)'(s), ..., (log L)^{(order)}(s)) on the horizontal-path branch."""
    s = complex(s)
    if s.imag == 0 and s.real <= 1:
        raise BranchError("log L is not defined on the real segment (-inf, 1]")
    jet = L_jet(desc, s, order, config)
    if abs(jet[0]) < config.zero_tol:
        raise BranchError(f"|L(s)| = {abs(jet[0]):.2e} below zero tolerance at s = {s}")
    log0 = _branch_log(desc, s, config, jet[0])
    series = TruncatedSeries(jet / jet[0]).log()
    coeffs = series.coeffs.copy()
    coeffs[0] = log0
    fact = np.array([math.factorial(k) for k in range(order + 1)], dtype=float)
    return coeffs * fact


def _branch_log(desc, s: complex, config: EvalConfig, L_at_s: complex) -> complex:
    sigma_a = max(config.anchor_sigma, s.real)
    t = s.imag
    cur_sigma = sigma_a
    cur_log = _log_dirichlet_series(desc, complex(sigma_a, t)) if sigma_a > 1.5 else None
    if cur_log is None:
        raise ValueError("anchor_sigma must exceed 1.5")
    cur_L = cmath.exp(cur_log)
    target = s.real
    while cur_sigma > target:
        jet = L_jet(desc, complex(cur_sigma, t), 1, config)
        dlog = abs(jet[1] / jet[0])
        h = min(config.max_step, 0.3 / max(dlog, 1e-300), cur_sigma - target)
        while True:
            nxt = max(cur_sigma - h, target)
            L_next = L_at_s if nxt == target else L_jet(desc, complex(nxt, t), 0, config)[0]
            if abs(L_next) < config.zero_tol:
                raise BranchError(f"|L| = {abs(L_next):.2e} near {complex(nxt, t)} on the continuation path")
            step_log = cmath.log(L_next / cur_L)
            predicted = -(cur_sigma - nxt) * jet[1] / jet[0]
            if abs(step_log - predicted) < 0.5 or h < 1e-9:
                break
            h *= 0.5
        if h < 1e-9:
            raise BranchError(f"step control failed near {complex(cur_sigma, t)}")
        cur_log = cur_log + step_log
        cur_L = L_next
        cur_sigma = nxt
    return complex(math.log(abs(L_at_s)), cur_log.imag)


# ---------------------------------------------------------------------------
# finite Euler products with phases

def _phase_array(theta, primes: np.ndarray) -> np.ndarray:
    if isinstance(theta, PhaseAssignment):
        return theta.lookup(primes)
    th = np.asarray(theta, dtype=float)
    if th.shape == ():
        return np.full(primes.shape, float(th))
    if th.shape != primes.shape:
        raise ValueError("phase vector must align with the prime set")
    return th


def finite_log_product_derivs(desc: LFunctionDescriptor, primes, s: complex, theta, order: int,
                              tol: float = 1e-16) -> np.ndarray:
    """d^k/ds^k log L_M(s, theta) for k = 0..order.

    The l-sum for each prime stops once the geometric tail bound built from
    |b(p^l)| <= C p^{l vartheta}/l falls below ``tol``.
    """
    primes = np.asarray(primes, dtype=np.int64)
    out = np.zeros(order + 1, dtype=complex)
    if primes.size == 0:
        return out
    s = complex(s)
    sig = s.real - desc.theta_exponent
    if sig <= 0.5:
        raise ValueError("need Re(s) > 1/2 + vartheta for absolute convergence")
    th = _phase_array(theta, primes)
    lp = np.log(primes.astype(float))
    idx = np.arange(primes.size)
    k = np.arange(order + 1)
    l = 1
    while idx.size:
        p_act = primes[idx]
        lpa = lp[idx]
        b = desc.log_coeffs(p_act, l)
        base = b * np.exp(-2j * np.pi * l * th[idx]) * np.exp(-l * s * lpa)
        powers = (-l * lpa)[None, :] ** k[:, None]
        out += (powers * base[None, :]).sum(axis=1)
        # tail bound for l' > l: ratio of consecutive majorant terms
        nl = l + 1
        ratio = np.exp(-sig * lpa) * ((nl + 1) / nl) ** max(order, 0)
        nxt = desc.coeff_bound * np.exp(-nl * sig * lpa) / nl * np.maximum(1.0, nl * lpa) ** order
        tail = np.where(ratio < 1, nxt / (1 - np.minimum(ratio, 0.999999)), np.inf)
        idx = idx[tail > tol]
        l = nl
        if l > 10000:
            raise PrecisionError("l-series failed to converge")
    return out


def finite_log_product(desc: LFunctionDescriptor, primes, sigma0: float, theta, order: int = 0,
                       tol: float = 1e-16) -> complex:
    return complex(finite_log_product_derivs(desc, primes, sigma0, theta, order, tol)[order])


def perturbation_bound(desc: LFunctionDescriptor, Q: float, sigma0: float, N: int, delta: float | None = None) -> float:
    """Bound on max_k |d^k log L_P(Q)(sigma0, theta) - d^k log L_P(Q)(sigma0, theta*)| for ||theta - theta*||_inf < delta.

    Uses |exp(-2 pi i l u) - 1| <= 2 pi l |u| termwise, so the bound is
    2 pi delta sum_{p<=Q} sum_l l max_{k<N} (l log p)^k |b(p^l)| p^{-l sigma0}.
    """
    if Q <= 2 or sigma0 <= 0.5:
        raise ValueError("need Q > 2 and sigma0 > 1/2")
    delta = 1.0 / Q if delta is None else delta
    ps = primes_upto(Q)
    lp = np.log(ps.astype(float))
    total = 0.0
    idx = np.arange(ps.size)
    l = 1
    while idx.size:
        lpa = lp[idx]
        b = np.abs(desc.log_coeffs(ps[idx], l))
        w = np.maximum(1.0, (l * lpa) ** (N - 1))
        term = l * w * b * np.exp(-l * sigma0 * lpa)
        total += float(term.sum())
        nl = l + 1
        bound_next = desc.coeff_bound * np.maximum(1.0, (nl * lpa) ** (N - 1)) * np.exp(-nl * (sigma0 - desc.theta_exponent) * lpa)
        ratio = np.exp(-(sigma0 - desc.theta_exponent) * lpa) * ((nl + 1) / nl) ** N
        tail = np.where(ratio < 1, bound_next / (1 - np.minimum(ratio, 0.999999)), np.inf)
        idx = idx[tail > 1e-18]
        l = nl
    return 2 * math.pi * delta * total
