"""Closed-form exponents and thresholds of the effective universality bounds.

Everything here is elementary arithmetic on (sigma0, E_L) and the target
vector.  Thresholds for the shift T are returned as ``log log T`` since T
itself overflows any float for every interesting input.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass

import numpy as np

from .lfunc import LFunctionDescriptor


class RangeError(ValueError):
    """An input lies outside the region where the formulas apply."""


@dataclass(frozen=True)
class EffectiveConstants:
    sigma0: float
    E_L: float
    A: float
    eta: float
    d1_1: float
    B_exp: float
    d1: float
    d: float
    mu: float
    rho: float
    h_exponent: float
    x_exponent: float

    def as_dict(self) -> dict:
        return asdict(self)


def admissible_interval(desc: LFunctionDescriptor) -> tuple[float, float]:
    return max(desc.sigma_L, 1.0 - 2.0 * desc.E_L), 1.0


def check_sigma0(desc: LFunctionDescriptor, sigma0: float) -> None:
    lo = max(desc.sigma_L, 1.0 - 2.0 * desc.E_L)
    if not sigma0 < 1.0:
        raise RangeError(f"sigma0 = {sigma0} violates sigma0 < 1")
    if not sigma0 > lo:
        which = "sigma_L" if desc.sigma_L >= 1.0 - 2.0 * desc.E_L else "1 - 2 E_L"
        raise RangeError(f"sigma0 = {sigma0} violates sigma0 > max(sigma_L, 1 - 2 E_L) = {lo} ({which})")


def exponent_A(sigma0: float, E_L: float) -> float:
    return 0.5 * (max(sigma0, 1.0 - E_L) + 0.5 * (1.0 + sigma0))


def exponent_eta(sigma0: float, E_L: float) -> float:
    A = exponent_A(sigma0, E_L)
    return 0.5 * min(0.5 * (1.0 - E_L), 0.5 * (A - sigma0), 1.0 + sigma0 - 2.0 * A)


def compute_constants(desc: LFunctionDescriptor, sigma0: float) -> EffectiveConstants:
    check_sigma0(desc, sigma0)
    E = desc.E_L
    A = exponent_A(sigma0, E)
    eta = exponent_eta(sigma0, E)
    ratio = sigma0 / (sigma0 - eta)
    d1_1 = ratio * (A - sigma0 - 2.0 * eta)
    B = min(ratio * (1.0 + sigma0 - 2.0 * A - eta), sigma0 - eta)
    d1 = 2.0 * ratio * max(1.0 / d1_1, 1.0 / min(B, sigma0 - 0.5))
    d = max(d1, 8.0 / (sigma0 - 0.5))
    dens = desc.delta_L(0.5 * (desc.sigma_L + sigma0))
    consts = EffectiveConstants(
        sigma0=sigma0,
        E_L=E,
        A=A,
        eta=eta,
        d1_1=d1_1,
        B_exp=B,
        d1=d1,
        d=d,
        mu=math.sqrt(desc.kappa / 8.0),
        rho=desc.kappa / 4.0,
        h_exponent=dens / 2.0,
        x_exponent=min(1.0 / 200.0, dens / 10.0),
    )
    _check_invariants(consts)
    return consts


def _check_invariants(c: EffectiveConstants) -> None:
    s = c.sigma0
    if not (s < c.A < 0.5 * (1 + s) and 1 - c.E_L < c.A < 1):
        raise RangeError(f"A = {c.A} outside (sigma0, (1+sigma0)/2) and (1-E_L, 1)")
    for name in ("eta", "d1_1", "B_exp"):
        if not getattr(c, name) > 0:
            raise RangeError(f"{name} = {getattr(c, name)} is not positive")


def l1(v) -> float:
    return float(np.sum(np.abs(np.asarray(v, dtype=complex))))


def threshold_T_main(consts: EffectiveConstants, N: int, c, eps: float, C1_stand_in: float = 1.0) -> float:
    """log log T for the main threshold, with the unknown constant replaced by ``C1_stand_in``."""
    if not 0 < eps < 1:
        raise RangeError("eps must lie in (0, 1)")
    return C1_stand_in * (l1(c) + 1.0 / eps) ** consts.d


def threshold_Q(consts: EffectiveConstants, c, eps: float, C_stand_in: float = 1.0) -> float:
    """Size of the prime cut-off Q demanded before T = exp exp(C Q)."""
    return C_stand_in * (l1(c) + 1.0 / eps) ** consts.d


def _branch_log_abs(z: complex, branch: int) -> float:
    return abs(cmath.log(z) + 2j * math.pi * branch)


def B_quantity(N: int, c, eps: float, branch: int = 0) -> float:
    c = np.asarray(c, dtype=complex)
    if c.size == 0 or c[0] == 0:
        raise RangeError("c_0 must be nonzero")
    if not eps > 0:
        raise RangeError("eps must be positive")
    c0 = abs(c[0])
    return _branch_log_abs(c[0], branch) + (l1(c) / c0) ** ((N - 1) ** 2) * (1.0 + c0) / eps


def A_quantity_voronin(N: int, b, eps: float, branch: int = 0) -> float:
    b = np.asarray(b, dtype=complex)
    if b.size == 0 or not abs(b[0]) > eps > 0:
        raise RangeError("need |b_0| > eps > 0")
    return _branch_log_abs(b[0], branch) + (l1(b) / eps) ** (N * N)


def gl_N_choice(M_g: float, delta0: float, eps: float) -> int:
    """Smallest N >= 1 with M_g delta0^N / (1 - delta0) < eps / 3."""
    if not 0 < delta0 < 1:
        raise RangeError("delta0 must lie in (0, 1)")
    if M_g < 0 or not eps > 0:
        raise RangeError("need M_g >= 0 and eps > 0")
    if M_g == 0:
        return 1
    # closed form, then fix up the boundary against rounding
    n = max(1, math.ceil(math.log(eps * (1 - delta0) / (3 * M_g)) / math.log(delta0)))
    while n > 1 and M_g * delta0 ** (n - 1) / (1 - delta0) < eps / 3:
        n -= 1
    while not M_g * delta0**n / (1 - delta0) < eps / 3:
        n += 1
    return n
