"""Target-distribution system on the nodes -log(2^j X).

Solves ``sum_j (-log X_j)^k z_j = a_k`` (k = 0..N-1) with the
Bjorck-Pereyra Newton-form recursion, followed by one step of iterative
refinement with residuals accumulated in extended precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_ORDER = 12


@dataclass(frozen=True)
class NodeSystem:
    X: float
    N: int

    def __post_init__(self):
        if not self.X > math.e:
            raise ValueError(f"X must exceed e, got {self.X}")
        if not 1 <= self.N <= MAX_ORDER:
            raise ValueError(f"N must lie in [1, {MAX_ORDER}] (conditioning guard), got {self.N}")

    @property
    def nodes(self) -> np.ndarray:
        j = np.arange(self.N)
        return -(math.log(self.X) + j * math.log(2.0))

    def matrix(self) -> np.ndarray:
        """Row k holds the k-th powers of the nodes."""
        return np.vander(self.nodes, self.N, increasing=True).T


def _bjorck_pereyra(x: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Solves sum_j x_j^k z_j = b_k (Golub & Van Loan, dual Vandermonde).
    n = x.size - 1
    z = np.array(b, dtype=complex)
    for k in range(n):
        for i in range(n, k, -1):
            z[i] -= x[k] * z[i - 1]
    for k in range(n - 1, -1, -1):
        for i in range(k + 1, n + 1):
            z[i] /= x[i] - x[i - k - 1]
        for i in range(k, n):
            z[i] -= z[i + 1]
    return z


def residuals(system: NodeSystem, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Per-equation residuals, accumulated in extended precision."""
    u = system.nodes.astype(np.longdouble)
    zr = np.asarray(z.real, dtype=np.longdouble)
    zi = np.asarray(z.imag, dtype=np.longdouble)
    a = np.asarray(a, dtype=complex)
    out = np.empty(system.N, dtype=complex)
    pk = np.ones_like(u)
    for k in range(system.N):
        re = np.sum(pk * zr) - np.longdouble(a[k].real)
        im = np.sum(pk * zi) - np.longdouble(a[k].imag)
        out[k] = complex(float(re), float(im))
        pk = pk * u
    return out


def relative_residuals(system: NodeSystem, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Residuals scaled by sum_j |u_j|^k |z_j| + |a_k| (backward-error form)."""
    r = residuals(system, z, a)
    u = np.abs(system.nodes)
    scale = np.array([np.sum(u**k * np.abs(z)) for k in range(system.N)]) + np.abs(a)
    scale[scale == 0] = 1.0
    return np.abs(r) / scale


def solve(system: NodeSystem, a) -> np.ndarray:
    """The unique z with sum_j (-log X_j)^k z_j = a_k."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (system.N,):
        raise ValueError(f"right-hand side must have length {system.N}")
    x = system.nodes
    z = _bjorck_pereyra(x, a)
    z = z - _bjorck_pereyra(x, residuals(system, z, a))
    return z


def norm_ratio(system: NodeSystem, a) -> float:
    """||z|| / ((log X)^(N-1) ||a||) in the l1 norm."""
    a = np.asarray(a, dtype=complex)
    z = solve(system, a)
    return float(np.sum(np.abs(z)) / (math.log(system.X) ** (system.N - 1) * np.sum(np.abs(a))))


def norm_bound_check(N: int, trials: int = 1000, rng: np.random.Generator | None = None,
                     X_range: tuple[float, float] = (10.0, 1e6)) -> float:
    """Fitted K_N: max of ||z|| / ((log X)^(N-1) ||a||) over random unit a and log-uniform X."""
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(0) if rng is None else rng
    lo, hi = math.log(X_range[0]), math.log(X_range[1])
    best = 0.0
    for _ in range(trials):
        X = math.exp(rng.uniform(lo, hi))
        a = rng.normal(size=N) + 1j * rng.normal(size=N)
        a /= np.sum(np.abs(a))
        best = max(best, norm_ratio(NodeSystem(X, N), a))
    return best
