"""Selberg-class descriptors for zeta and Dirichlet L-functions.

A descriptor carries the coefficient maps ``a(n)`` (Dirichlet series) and
``b(p^l)`` (Euler/log series) together with the density, zero-density and
short-interval constants the downstream formulas consume.  Only the
character table is serialized; coefficient functions are rebuilt from it.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .primes import prime_power, primes_upto

SCHEMA = 1


def zeta_zero_density_exponent(sigma: float) -> float:
    """Default Delta(sigma) for zeta: (8/3)(sigma - 1/2)/(3 - 2 sigma).

    A conservative affine-type stand-in, replaceable per descriptor.
    """
    return (8.0 / 3.0) * (sigma - 0.5) / (3.0 - 2.0 * sigma)


@dataclass(frozen=True)
class LFunctionDescriptor:
    name: str
    dirichlet_coeff: Callable[[int], complex]
    euler_log_coeff: Callable[[int, int], complex]
    kappa: float
    sigma_L: float
    delta_L: Callable[[float], float]
    E_L: float
    D: float
    degree: float = 1.0
    gamma_factor: tuple[tuple[float, complex], ...] = ((0.5, 0.0),)
    R: float = 1.0 / math.sqrt(math.pi)
    omega: complex = 1.0
    m_L: int = 0
    # |b(p^l)| <= coeff_bound * p^(l*theta_exponent) / l for all p, l
    coeff_bound: float = 1.0
    theta_exponent: float = 0.0
    modulus: int | None = None
    character: tuple[complex, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.sigma_L < 0.5:
            raise ValueError("sigma_L must be >= 1/2")
        if not 0 < self.E_L < 1:
            raise ValueError("E_L must lie in (0, 1)")
        if self.theta_exponent >= 0.5:
            raise ValueError("Euler coefficients must grow slower than p^(l/2)")

    # vectorised coefficient access used by the heavy numerics
    def prime_coeffs(self, primes: np.ndarray) -> np.ndarray:
        """``b(p) = a(p)`` for an array of primes."""
        primes = np.asarray(primes, dtype=np.int64)
        if self.character is not None:
            table = np.asarray(self.character, dtype=complex)
            return table[primes % self.modulus]
        return np.array([complex(self.euler_log_coeff(int(p), 1)) for p in primes], dtype=complex)

    def log_coeffs(self, primes: np.ndarray, l: int) -> np.ndarray:
        """``b(p^l)`` for an array of primes and fixed ``l``."""
        primes = np.asarray(primes, dtype=np.int64)
        if self.character is not None:
            return self.prime_coeffs(primes) ** l / l
        return np.array([complex(self.euler_log_coeff(int(p), l)) for p in primes], dtype=complex)

    @property
    def is_builtin(self) -> bool:
        return self.character is not None

    def to_json(self) -> str:
        if self.character is None:
            raise ValueError("only character-backed descriptors are serializable")
        doc = {
            "schema": SCHEMA,
            "name": self.name,
            "modulus": self.modulus,
            "character": [[c.real, c.imag] for c in map(complex, self.character)],
            "kappa": self.kappa,
            "sigma_L": self.sigma_L,
            "E_L": self.E_L,
            "D": self.D,
            "degree": self.degree,
            "gamma_factor": [[lam, complex(mu).real, complex(mu).imag] for lam, mu in self.gamma_factor],
            "R": self.R,
            "omega": [complex(self.omega).real, complex(self.omega).imag],
            "m_L": self.m_L,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LFunctionDescriptor":
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise ValueError(f"unsupported descriptor schema {doc.get('schema')!r}")
        table = [complex(re, im) for re, im in doc["character"]]
        base = builtin_dirichlet(doc["modulus"], table)
        return replace(
            base,
            name=doc["name"],
            kappa=doc["kappa"],
            sigma_L=doc["sigma_L"],
            E_L=doc["E_L"],
            D=doc["D"],
            degree=doc["degree"],
            gamma_factor=tuple((lam, complex(re, im)) for lam, re, im in doc["gamma_factor"]),
            R=doc["R"],
            omega=complex(*doc["omega"]),
            m_L=doc["m_L"],
        )


def builtin_zeta() -> LFunctionDescriptor:
    return LFunctionDescriptor(
        name="zeta",
        dirichlet_coeff=lambda n: 1.0,
        euler_log_coeff=lambda p, l: 1.0 / l,
        kappa=1.0,
        sigma_L=0.5,
        delta_L=zeta_zero_density_exponent,
        E_L=5.0 / 12.0,
        D=22.0,
        degree=1.0,
        gamma_factor=((0.5, 0.0),),
        R=1.0 / math.sqrt(math.pi),
        omega=1.0,
        m_L=1,
        modulus=1,
        character=(1.0,),
    )


def _check_character(q: int, table: Sequence[complex]) -> tuple[complex, ...]:
    if len(table) != q:
        raise ValueError(f"character table must have {q} entries, got {len(table)}")
    chi = tuple(complex(v) for v in table)
    tol = 1e-12
    for a in range(q):
        coprime = math.gcd(a, q) == 1
        if coprime and abs(abs(chi[a]) - 1.0) > tol:
            raise ValueError(f"chi({a}) must be a root of unity, got {chi[a]}")
        if not coprime and chi[a] != 0:
            raise ValueError(f"chi({a}) must vanish since gcd({a}, {q}) > 1")
    if abs(chi[1 % q] - 1.0) > tol:
        raise ValueError("chi(1) must equal 1")
    for a in range(q):
        for b in range(a, q):
            if abs(chi[(a * b) % q] - chi[a] * chi[b]) > 1e-9:
                raise ValueError(f"table is not multiplicative: chi({a}*{b}) != chi({a})chi({b})")
    return chi


def builtin_dirichlet(modulus: int, character: Sequence[complex]) -> LFunctionDescriptor:
    """Dirichlet L(s, chi) for a character given by its values on residues ``0..q-1``.

    Primitivity is the caller's responsibility.  E_L, sigma_L, D and the
    zero-density exponent copy the zeta defaults; they are unverified
    assumptions for general characters.
    """
    q = int(modulus)
    if q < 1:
        raise ValueError("modulus must be a positive integer")
    chi = _check_character(q, character)
    if q == 1:
        return builtin_zeta()

    def a(n: int) -> complex:
        return chi[n % q]

    def b(p: int, l: int) -> complex:
        return chi[p % q] ** l / l

    principal = all(abs(v - 1) < 1e-12 for v in chi if v != 0)
    parity_odd = abs(chi[(q - 1) % q] + 1) < 1e-12
    return LFunctionDescriptor(
        name=f"dirichlet:{q}",
        dirichlet_coeff=a,
        euler_log_coeff=b,
        kappa=1.0,
        sigma_L=0.5,
        delta_L=zeta_zero_density_exponent,
        E_L=5.0 / 12.0,
        D=22.0,
        degree=1.0,
        gamma_factor=((0.5, 0.5 if parity_odd else 0.0),),
        R=math.sqrt(q / math.pi),
        omega=1.0,
        m_L=1 if principal else 0,
        modulus=q,
        character=chi,
    )


def lambda_weight(desc: LFunctionDescriptor, x: float, n: int) -> complex:
    """Smoothed generalized von Mangoldt weight Lambda_{L,x}(n)."""
    if x <= 1:
        raise ValueError("x must exceed 1")
    if n < 1 or n > x * x:
        return 0.0
    pl = prime_power(n)
    if pl is None:
        return 0.0
    p, l = pl
    lam = complex(desc.euler_log_coeff(p, l)) * math.log(n)
    if n <= x:
        return lam
    return lam * math.log(x * x / n) / math.log(x)


def density_mean(desc: LFunctionDescriptor, X: float) -> float:
    """(1/pi(X)) * sum_{p<=X} |a(p)|^2, the finite-X form of the kappa condition."""
    ps = primes_upto(X)
    if ps.size == 0:
        raise ValueError("X must be at least 2")
    return float(np.sum(np.abs(desc.prime_coeffs(ps)) ** 2) / ps.size)


def fit_prime_coeff_constant(desc: LFunctionDescriptor, eta: float, limit: float = 10**5) -> float:
    """Empirical C_{L,eta} = max_{p<=limit} |a(p)| / p^eta."""
    ps = primes_upto(limit)
    return float(np.max(np.abs(desc.prime_coeffs(ps)) / ps.astype(float) ** eta))


def fit_log_coeff_constant(desc: LFunctionDescriptor, eps: float, p_limit: float = 10**3, l_max: int = 12) -> float:
    """Empirical constant C with |b(p^l)| <= C (2^l - 1) p^(l eps) / l on a finite grid."""
    ps = primes_upto(p_limit).astype(float)
    best = 0.0
    for l in range(1, l_max + 1):
        b = np.abs(desc.log_coeffs(ps.astype(np.int64), l))
        ratio = b * l / ((2.0**l - 1.0) * ps ** (l * eps))
        best = max(best, float(ratio.max()))
    return best


def principal_phase(value: complex) -> float:
    """theta in [0, 1) with value = |value| exp(2 pi i theta)."""
    th = (cmath.phase(value) / (2 * math.pi)) % 1.0
    return 0.0 if th >= 1.0 else th
