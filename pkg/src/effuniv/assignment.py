"""Prime-indexed phase vectors theta_p in [0, 1)."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhaseAssignment:
    """Sorted primes with matching phases; primes outside the domain read as 0."""

    primes: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.primes, dtype=np.int64)
        th = np.asarray(self.phases, dtype=float) % 1.0
        th[th >= 1.0] = 0.0
        if p.shape != th.shape or p.ndim != 1:
            raise ValueError("primes and phases must be 1-d arrays of equal length")
        order = np.argsort(p, kind="stable")
        p, th = p[order], th[order]
        if p.size > 1 and np.any(np.diff(p) == 0):
            raise ValueError("duplicate prime in phase assignment")
        object.__setattr__(self, "primes", p)
        object.__setattr__(self, "phases", th)

    @classmethod
    def empty(cls) -> "PhaseAssignment":
        return cls(np.array([], dtype=np.int64), np.array([], dtype=float))

    @classmethod
    def from_dict(cls, mapping: dict) -> "PhaseAssignment":
        keys = sorted(mapping)
        return cls(np.array(keys, dtype=np.int64), np.array([mapping[k] for k in keys], dtype=float))

    def __len__(self):
        return int(self.primes.size)

    def __getitem__(self, p: int) -> float:
        return float(self.lookup(np.array([p]))[0])

    def lookup(self, primes) -> np.ndarray:
        q = np.asarray(primes, dtype=np.int64)
        out = np.zeros(q.shape, dtype=float)
        if self.primes.size == 0:
            return out
        idx = np.searchsorted(self.primes, q)
        idx_c = np.minimum(idx, self.primes.size - 1)
        hit = self.primes[idx_c] == q
        out[hit] = self.phases[idx_c[hit]]
        return out

    def override(self, other: "PhaseAssignment") -> "PhaseAssignment":
        """Copy of self with every phase present in ``other`` replaced."""
        keep = ~np.isin(self.primes, other.primes)
        return PhaseAssignment(np.concatenate([self.primes[keep], other.primes]),
                               np.concatenate([self.phases[keep], other.phases]))

    def restrict(self, primes) -> "PhaseAssignment":
        q = np.unique(np.asarray(primes, dtype=np.int64))
        return PhaseAssignment(q, self.lookup(q))

    def to_json(self) -> str:
        pairs = ", ".join(f"[{int(p)}, {float(t):.17g}]" for p, t in zip(self.primes, self.phases))
        return f"[{pairs}]"

    @classmethod
    def from_json(cls, text: str) -> "PhaseAssignment":
        pairs = json.loads(text)
        if not pairs:
            return cls.empty()
        arr = np.array(pairs, dtype=float)
        return cls(arr[:, 0].astype(np.int64), arr[:, 1])
