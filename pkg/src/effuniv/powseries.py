"""Truncated formal power series and the exp/log coefficient maps.

``F_polys`` returns the coefficients of ``exp(sum z_n X^n)`` and
``G_polys`` those of ``log(1 + sum w_n X^n)``; they are mutually inverse.
exp and log use the recurrences coming from ``E' = E f'`` and
``f' = W'/W`` rather than composing Taylor series.
"""

from __future__ import annotations

import cmath
import itertools
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np


class TruncatedSeries:
    """Complex power series ``sum_{n<=N_max} c_n X^n``, exact modulo X^(N_max+1)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[complex], N_max: int | None = None):
        c = np.asarray(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs, dtype=complex)
        if N_max is not None:
            if c.size < N_max + 1:
                c = np.concatenate([c, np.zeros(N_max + 1 - c.size, dtype=complex)])
            c = c[: N_max + 1]
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        self.coeffs = c

    @property
    def N_max(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def zero(cls, N_max: int) -> "TruncatedSeries":
        return cls(np.zeros(N_max + 1, dtype=complex))

    @classmethod
    def constant(cls, value: complex, N_max: int) -> "TruncatedSeries":
        c = np.zeros(N_max + 1, dtype=complex)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, value: complex, N_max: int) -> "TruncatedSeries":
        """The jet ``value + X`` (a point plus an infinitesimal step)."""
        c = np.zeros(N_max + 1, dtype=complex)
        c[0] = value
        if N_max >= 1:
            c[1] = 1.0
        return cls(c)

    def __getitem__(self, n):
        return self.coeffs[n]

    def __len__(self):
        return self.coeffs.size

    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            if other.N_max != self.N_max:
                raise ValueError("truncation degrees differ")
            return other
        return TruncatedSeries.constant(complex(other), self.N_max)

    def __add__(self, other):
        o = self._coerce(other)
        return TruncatedSeries(self.coeffs + o.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self.coeffs)

    def __sub__(self, other):
        o = self._coerce(other)
        return TruncatedSeries(self.coeffs - o.coeffs)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs * complex(other))
        o = self._coerce(other)
        return TruncatedSeries(np.convolve(self.coeffs, o.coeffs)[: self.N_max + 1])

    __rmul__ = __mul__

    def reciprocal(self) -> "TruncatedSeries":
        a = self.coeffs
        if a[0] == 0:
            raise ZeroDivisionError("series with zero constant term has no reciprocal")
        n = self.N_max
        r = np.zeros(n + 1, dtype=complex)
        r[0] = 1.0 / a[0]
        for k in range(1, n + 1):
            r[k] = -np.dot(a[1 : k + 1], r[k - 1 :: -1][:k]) / a[0]
        return TruncatedSeries(r)

    def __truediv__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs / complex(other))
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def exp(self) -> "TruncatedSeries":
        """exp of a series; the constant term is factored out as a scalar."""
        f = self.coeffs
        n = self.N_max
        e = np.zeros(n + 1, dtype=complex)
        e[0] = 1.0
        kf = np.arange(1, n + 1) * f[1:]  # coefficients of X f'
        for k in range(1, n + 1):
            e[k] = np.dot(kf[:k], e[k - 1 :: -1][:k]) / k
        return TruncatedSeries(e * cmath.exp(f[0]))

    def log(self, branch: int = 0) -> "TruncatedSeries":
        """log of a series with nonzero constant term (principal log of c_0 + 2 pi i branch)."""
        w = self.coeffs
        if w[0] == 0:
            raise ValueError("log requires a nonzero constant term")
        u = w / w[0]
        n = self.N_max
        g = np.zeros(n + 1, dtype=complex)
        g[0] = cmath.log(w[0]) + 2j * math.pi * branch
        # k g_k = k u_k - sum_{j=1}^{k-1} j g_j u_{k-j}
        for k in range(1, n + 1):
            acc = k * u[k]
            for j in range(1, k):
                acc -= j * g[j] * u[k - j]
            g[k] = acc / k
        return TruncatedSeries(g)

    def abs(self) -> "TruncatedSeries":
        return TruncatedSeries(np.abs(self.coeffs).astype(complex))

    def shift(self, m: int) -> "TruncatedSeries":
        """Multiply by X^m, truncating."""
        c = np.zeros(self.N_max + 1, dtype=complex)
        if m <= self.N_max:
            c[m:] = self.coeffs[: self.N_max + 1 - m]
        return TruncatedSeries(c)

    def evaluate(self, x: complex) -> complex:
        return complex(np.polyval(self.coeffs[::-1], x))

    def __repr__(self):
        return f"TruncatedSeries({self})"

    def __str__(self):
        terms = []
        for n, c in enumerate(self.coeffs):
            if c == 0 and n > 0:
                continue
            cs = f"{c.real:g}" if c.imag == 0 else f"({c.real:g}{c.imag:+g}i)"
            terms.append(cs if n == 0 else f"{cs}*X" if n == 1 else f"{cs}*X^{n}")
        return " + ".join(terms)


def f_map(z: Sequence[complex]) -> TruncatedSeries:
    """f(X; z) = sum_{n=1}^N z_n X^n."""
    z = np.asarray(z, dtype=complex)
    return TruncatedSeries(np.concatenate([[0.0], z]))


def F_polys(z: Sequence[complex]) -> np.ndarray:
    """(F_1(z_[1]), ..., F_N(z_[N])): degree 1..N coefficients of exp(f(X; z))."""
    z = np.asarray(z, dtype=complex)
    if z.size == 0:
        return z
    return f_map(z).exp().coeffs[1:]


def G_polys(w: Sequence[complex]) -> np.ndarray:
    """(G_1(w_[1]), ..., G_N(w_[N])): coefficients of log(1 + sum w_n X^n)."""
    w = np.asarray(w, dtype=complex)
    if w.size == 0:
        return w
    return TruncatedSeries(np.concatenate([[1.0], w])).log().coeffs[1:]


def h_series(z: Sequence[complex], N_max: int | None = None) -> TruncatedSeries:
    """h(X; z) = -log(1 - sum |z_n| X^n), with nonnegative coefficients."""
    z = np.abs(np.asarray(z, dtype=complex))
    N_max = z.size if N_max is None else N_max
    inner = TruncatedSeries(np.concatenate([[1.0], -z]), N_max)
    return -inner.log()


def majorizes(alpha: TruncatedSeries, beta: TruncatedSeries, slack: float = 0.0) -> bool:
    """True iff |a_n| <= b_n for every n (alpha is dominated by beta).

    ``slack`` is an absolute allowance for floating-point roundoff.
    """
    if alpha.N_max != beta.N_max:
        raise ValueError("truncation degrees differ")
    b = beta.coeffs
    if np.any(b.imag != 0) or np.any(b.real < 0):
        raise ValueError("majorant must have nonnegative real coefficients")
    return bool(np.all(np.abs(alpha.coeffs) <= b.real + slack))


def weighted_degree(i: Sequence[int]) -> int:
    """S(i) = i_1 + 2 i_2 + ... for a multi-index i = (i_1, i_2, ...)."""
    return sum((k + 1) * ik for k, ik in enumerate(i))


# Exact polynomial forms of F_n, used for mixed partial derivatives.
# A polynomial is a dict {exponent tuple (e_1..e_N): Fraction}.

@lru_cache(maxsize=None)
def _F_polynomials(N: int) -> tuple[dict, ...]:
    zero = (0,) * N
    polys = [{zero: Fraction(1)}]
    # n F_n = sum_{k=1}^n k Z_k F_{n-k}
    for n in range(1, N + 1):
        acc: dict = {}
        for k in range(1, n + 1):
            for mono, coef in polys[n - k].items():
                m = list(mono)
                m[k - 1] += 1
                key = tuple(m)
                acc[key] = acc.get(key, Fraction(0)) + coef * k
        polys.append({m: c / n for m, c in acc.items() if c != 0})
    return tuple(polys[1:])


def _diff_poly(poly: dict, i: Sequence[int]) -> dict:
    out = {}
    for mono, coef in poly.items():
        c = coef
        new = list(mono)
        ok = True
        for var, order in enumerate(i):
            if order == 0:
                continue
            e = mono[var]
            if e < order:
                ok = False
                break
            c *= math.perm(e, order)
            new[var] = e - order
        if ok:
            key = tuple(new)
            out[key] = out.get(key, Fraction(0)) + c
    return out


def F_partial(z: Sequence[complex], i: Sequence[int]) -> np.ndarray:
    """(d^i F_n)(z_[n]) for n = 1..len(z), by exact differentiation of the F_n polynomials."""
    z = np.asarray(z, dtype=complex)
    N = z.size
    ii = tuple(i) + (0,) * (N - len(i))
    if len(ii) > N:
        raise ValueError("multi-index longer than the variable vector")
    out = np.zeros(N, dtype=complex)
    for n, poly in enumerate(_F_polynomials(N)):
        d = _diff_poly(poly, ii)
        total = 0j
        for mono, coef in d.items():
            term = complex(float(coef))
            for var, e in enumerate(mono):
                if e:
                    term *= z[var] ** e
            total += term
        out[n] = total
    return out


def multi_indices(length: int, max_total: int, min_total: int = 1):
    """All multi-indices of given length with min_total <= |i| <= max_total."""
    for i in itertools.product(range(max_total + 1), repeat=length):
        if min_total <= sum(i) <= max_total:
            yield i


def alpha_norm_bound(Fvals: Sequence[complex]) -> float:
    """Explicit bound on ||alpha|| given F_[N-1](alpha), via evaluation at X = 1/(3(1+||F||))."""
    F = np.asarray(Fvals, dtype=complex)
    m = F.size  # N - 1
    if m == 0:
        return 0.0
    normF = float(np.sum(np.abs(F)))
    geo = sum(3.0**-n for n in range(1, m + 1))
    return (3.0 * (1.0 + normF)) ** m * abs(math.log(1.0 - geo))


def exp_log_chain(c: Sequence[complex], branch: int = 0) -> tuple[complex, np.ndarray]:
    """Map derivative targets (c_0, ..., c_{N-1}) to log-derivative coordinates.

    Returns ``alpha0 = log c_0`` (with winding ``branch``) and
    ``alpha = G(beta)`` where ``beta_k = c_k / (c_0 k!)``.
    """
    c = np.asarray(c, dtype=complex)
    if c.size == 0 or c[0] == 0:
        raise ValueError("c_0 must be nonzero")
    k = np.arange(1, c.size)
    fact = np.array([math.factorial(int(j)) for j in k], dtype=float)
    beta = c[1:] / (c[0] * fact)
    alpha0 = cmath.log(c[0]) + 2j * math.pi * branch
    return alpha0, G_polys(beta)


def reconstruct_derivatives(alpha0: complex, alpha: Sequence[complex]) -> np.ndarray:
    """Inverse of :func:`exp_log_chain`: (e^a0, e^a0 * 1! F_1, ..., e^a0 (N-1)! F_{N-1})."""
    F = F_polys(alpha)
    fact = np.array([math.factorial(j) for j in range(1, F.size + 1)], dtype=float)
    e0 = cmath.exp(alpha0)
    return np.concatenate([[e0], e0 * fact * F])


def perturbation_constant(N: int, samples: int = 500, rng: np.random.Generator | None = None,
                          scale: float = 2.0) -> float:
    """Empirical K_N in the stability bound for (alpha_0, alpha) -> e^alpha_0 F(alpha).

    Max over random base points and perturbations of
    ||e^z0 F(z) - e^a0 F(a)|| / (|e^a0| (1 + ||F(a)||)^((N-1)^2) delta).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    m = N - 1
    if m == 0:
        return 0.0
    best = 0.0
    for _ in range(samples):
        a0 = complex(*rng.normal(size=2))
        a = (rng.normal(size=m) + 1j * rng.normal(size=m)) * scale
        delta = float(rng.uniform(1e-3, 0.99))
        d = rng.normal(size=m + 1) + 1j * rng.normal(size=m + 1)
        d *= delta * rng.uniform(0, 1) / np.sum(np.abs(d))
        z0, z = a0 + d[0], a + d[1:]
        Fa = F_polys(a)
        num = np.sum(np.abs(cmath.exp(z0) * F_polys(z) - cmath.exp(a0) * Fa))
        den = abs(cmath.exp(a0)) * (1 + np.sum(np.abs(Fa))) ** (m * m) * delta
        best = max(best, float(num / den))
    return best
