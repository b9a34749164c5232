"""Phase-vector constructions: disk filling, greedy alternating phases, and theta*.

The theta* pipeline distributes a target derivative vector over N short
prime blocks.  A Vandermonde solve on the nodes -log(2^j Y) fixes one
complex target per block; each block then hits its target exactly through
:func:`realize_phase_sum`.  Every other prime keeps its greedy phase.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from .assignment import PhaseAssignment
from .bounds import RangeError, check_sigma0, compute_constants, l1
from .evaluate import finite_log_product_derivs
from .lfunc import LFunctionDescriptor, fit_prime_coeff_constant
from .primes import SieveLimitError, default_sieve, primes_between, primes_upto
from .vandermonde import NodeSystem
from .vandermonde import solve as vdm_solve

_LTOL = 1e-16  # per-prime l-truncation tolerance used by the finite products


class PipelineError(RuntimeError):
    """A construction step cannot be carried out; ``step`` names it."""

    def __init__(self, step: str, message: str, diagnostics: dict | None = None):
        self.step = step
        self.diagnostics = diagnostics or {}
        super().__init__(f"{step}: {message}")


# ---------------------------------------------------------------------------
# disk filling

def _split_two(T: complex, a: float, b: float) -> tuple[complex, complex]:
    """Vectors u, v with |u| = a, |v| = b, u + v = T (u is turned clockwise from T)."""
    rho = abs(T)
    if rho < 1e-300:
        return complex(a), complex(-b)
    cos_alpha = (rho * rho + a * a - b * b) / (2.0 * a * rho)
    alpha = math.acos(min(1.0, max(-1.0, cos_alpha)))
    u = a * cmath.exp(1j * (cmath.phase(T) - alpha))
    v = T - u
    av = abs(v)
    v = b * v / av if av > 0 else b * cmath.exp(1j * cmath.phase(T))
    return u, v


def realize_phase_sum(radii, target: complex) -> np.ndarray:
    """Phases theta with sum_n r_n exp(-2 pi i theta_n) = target.

    Radii need not be sorted; the result is aligned with the input order.
    The largest remaining radius is peeled off repeatedly: the partial sum
    of the others is given a length inside both its own attainable annulus
    and the lens where a two-vector split of the current target exists.
    """
    r = np.asarray(radii, dtype=float)
    T = complex(target)
    n = r.size
    if n == 0:
        if abs(T) > 0:
            raise ValueError("empty radius set cannot reach a nonzero target")
        return np.zeros(0)
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    order = np.argsort(r, kind="stable")
    rs = r[order]
    total = float(rs.sum())
    slack = 1e-12 * total
    if abs(T) > total + slack:
        raise ValueError(f"|target| = {abs(T):.6g} exceeds the radius sum {total:.6g}")
    if n >= 3 and rs[-1] > rs[:-1].sum() + slack:
        raise ValueError("largest radius exceeds the sum of the others (polygon condition)")
    if n == 2 and abs(T) < rs[1] - rs[0] - slack:
        raise ValueError(f"|target| = {abs(T):.6g} below the inner radius {rs[1] - rs[0]:.6g}")
    if n == 1 and abs(abs(T) - rs[0]) > 1e-9 * rs[0]:
        raise ValueError("a single radius reaches only its own circle")

    angles = np.empty(n)
    if n == 1:
        angles[0] = cmath.phase(T)
    else:
        cur = T
        prefix = np.cumsum(rs)
        for k in range(n - 1, 1, -1):
            S = prefix[k - 1]
            inner = max(0.0, 2.0 * rs[k - 1] - S)
            rho = abs(cur)
            lo = max(inner, abs(rho - rs[k]))
            hi = min(S, rho + rs[k])
            if lo > hi + slack:
                raise ValueError("target not attainable (inconsistent radii)")
            R = 0.5 * (lo + min(hi, max(lo, hi)))
            u, v = _split_two(cur, R, rs[k]) if R > 0 else (0j, cur)
            angles[k] = cmath.phase(v)
            cur = u
        u, v = _split_two(cur, rs[0], rs[1])
        angles[0] = cmath.phase(u)
        angles[1] = cmath.phase(v)
    theta = np.empty(n)
    theta[order] = (-angles / (2.0 * math.pi)) % 1.0
    theta[theta >= 1.0] = 0.0  # x % 1.0 can round up to 1.0 for tiny negative x
    return theta


def phase_sum(radii, theta) -> complex:
    return complex(np.sum(np.asarray(radii, dtype=float) * np.exp(-2j * np.pi * np.asarray(theta, dtype=float))))


# ---------------------------------------------------------------------------
# greedy alternating phases

def _coeff_phases(b: np.ndarray) -> np.ndarray:
    """theta^L_p with b(p) = |b(p)| exp(2 pi i theta^L_p); 0 where b(p) = 0."""
    th = (np.angle(b) / (2.0 * np.pi)) % 1.0
    th[b == 0] = 0.0
    return th


def greedy_signs(abs_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signs e_p in {+1, -1} and partial sums of e_p |b(p)| for the alternating rule."""
    signs = np.empty(abs_b.size)
    sums = np.empty(abs_b.size)
    running = 0.0
    for i, v in enumerate(abs_b.tolist()):
        s = 1.0 if running <= 0 else -1.0
        if v != 0:
            running += s * v
        signs[i] = s
        sums[i] = running
    return signs, sums


def greedy_theta0(desc: LFunctionDescriptor, prime_limit: float) -> PhaseAssignment:
    if prime_limit < 2:
        raise ValueError("prime_limit must be at least 2")
    ps = primes_upto(prime_limit)
    b = desc.prime_coeffs(ps)
    signs, _ = greedy_signs(np.abs(b))
    th = _coeff_phases(b) + np.where(signs > 0, 0.0, 0.5)
    th[b == 0] = 0.0
    return PhaseAssignment(ps, th)


def rotated_partial_sums(desc: LFunctionDescriptor, theta: PhaseAssignment) -> np.ndarray:
    """Cumulative sums of b(p) exp(-2 pi i theta_p) along the domain of ``theta``."""
    b = desc.prime_coeffs(theta.primes)
    return np.cumsum(b * np.exp(-2j * np.pi * theta.phases))


# ---------------------------------------------------------------------------
# the gamma series

@dataclass(frozen=True)
class GammaResult:
    values: np.ndarray
    truncation_point: float
    tail_bound: float


def _weight_tv(k: int, sigma: float, P: float) -> float:
    """Total variation on [P, inf) of (log x)^k x^(-sigma), which tends to 0."""
    w = lambda x: math.log(x) ** k * x ** (-sigma)
    peak = math.exp(k / sigma)
    if P >= peak:
        return w(P)
    return 2.0 * w(peak) - w(P)


def _power_tail(k: int, a: float, P: float) -> float:
    """Bound on sum_{n > P} (log n)^k n^(-a) for a > 1: integral plus the maximum."""
    x = (a - 1.0) * math.log(P)
    integral = gammaincc(k + 1, x) * gamma_fn(k + 1) / (a - 1.0) ** (k + 1)
    peak = math.exp(k / a)
    xm = max(P, peak)
    return integral + math.log(xm) ** k * xm ** (-a)


def gamma_tail_bound(desc: LFunctionDescriptor, sigma0: float, N: int, P: float) -> float:
    """Certified bound on max_k |gamma_k - (partial sum over p <= P)|."""
    if desc.theta_exponent != 0:
        raise ValueError("certified gamma tail needs bounded prime coefficients")
    C = desc.coeff_bound
    worst = 0.0
    for k in range(N):
        # l = 1: partial sums of the alternating terms stay within [-C, C]
        t1 = 2.0 * C * _weight_tv(k, sigma0, P)
        # l >= 2: |b(p^l)| <= C / l, summed over all integers n > P
        t2 = 0.0
        l = 2
        while True:
            term = C * l ** (k - 1) * _power_tail(k, l * sigma0, P)
            t2 += term
            if term < 1e-22 or l > 400:
                t2 += term  # geometric remainder, ratio below 1/2 from here on
                break
            l += 1
        worst = max(worst, t1 + t2)
    return worst + primes_upto(P).size * _LTOL


def gamma_targets(desc: LFunctionDescriptor, theta0: PhaseAssignment | None, sigma0: float, N: int,
                  tail_eps: float | None = 1e-3, prime_limit: float | None = None) -> GammaResult:
    """gamma_k = sum_p sum_l (-log p^l)^k b(p^l) e(-l theta_p) p^(-l sigma0), truncated with a certified tail.

    With ``prime_limit`` the sum stops there; otherwise the cut-off doubles
    from 10^3 until the certified tail is below ``tail_eps``.
    """
    if sigma0 <= 0.5:
        raise ValueError("sigma0 must exceed 1/2")
    sieve = default_sieve()
    if prime_limit is None:
        if tail_eps is None or tail_eps <= 0:
            raise ValueError("give a positive tail_eps or an explicit prime_limit")
        P = 1000.0
        while gamma_tail_bound(desc, sigma0, N, P) > tail_eps:
            P *= 2
            if P > sieve.limit:
                raise PipelineError("gamma", f"certified tail cannot reach {tail_eps:g} below the sieve limit {sieve.limit}")
    else:
        P = float(prime_limit)
        if P > sieve.limit:
            raise PipelineError("gamma", f"prime limit {P:g} exceeds sieve limit {sieve.limit}")
    ps = primes_upto(P)
    if theta0 is None:
        theta0 = greedy_theta0(desc, P)
    elif ps.size and (len(theta0) == 0 or theta0.primes[-1] < ps[-1]):
        raise ValueError("theta0 does not cover all primes up to the truncation point")
    values = finite_log_product_derivs(desc, ps, sigma0, theta0, N - 1, tol=_LTOL)
    return GammaResult(values, P, gamma_tail_bound(desc, sigma0, N, P))


# ---------------------------------------------------------------------------
# pipeline parameters

@dataclass(frozen=True)
class PipelineParams:
    sigma0: float
    N: int
    eps: float
    eta: float
    X: float
    Y: float
    H: float
    Q: float
    mode: str = "practical"
    mu: float = 0.0
    rho: float = 0.0
    A: float = 0.0
    C_eta: float = 1.0
    C1: float = 1.0

    def as_dict(self) -> dict:
        return asdict(self)


def _pow(base: float, exp: float) -> float:
    try:
        return math.pow(base, exp)
    except OverflowError:
        return math.inf


def derive_pipeline_params(desc: LFunctionDescriptor, sigma0: float, N: int, eps: float, c, mode: str = "practical",
                           X: float | None = None, Y: float | None = None, H: float | None = None,
                           Q: float | None = None, C1: float = 1.0, gamma: np.ndarray | None = None) -> PipelineParams:
    """Block parameters, either user-supplied (practical) or from the closed-form choices (rigorous).

    Rigorous mode replaces the unquantified constant in the X threshold by
    ``C1`` and uses the fitted C_{L,eta}; the result is heuristic to that extent.
    """
    check_sigma0(desc, sigma0)
    if not 0 < eps < 1:
        raise RangeError("eps must lie in (0, 1)")
    if not 1 <= N:
        raise RangeError("N must be positive")
    consts = compute_constants(desc, sigma0)
    c = np.asarray(c, dtype=complex)
    if c.shape != (N,):
        raise RangeError(f"target vector must have length N = {N}")
    C_eta = fit_prime_coeff_constant(desc, consts.eta, limit=min(10**5, default_sieve().limit))
    common = dict(sigma0=sigma0, N=N, eps=eps, eta=consts.eta, mu=consts.mu, rho=consts.rho, A=consts.A,
                  C_eta=C_eta, C1=C1)
    if mode == "practical":
        if None in (X, Y, H, Q):
            raise RangeError("practical mode needs X, Y, H and Q")
        if not X > math.e:
            raise RangeError("X must exceed e")
        if not Y >= 2 * X + 1:
            raise RangeError(f"Y = {Y} violates Y >= 2X + 1 = {2 * X + 1}")
        if not 0 < H <= Y:
            raise RangeError(f"H = {H} violates 0 < H <= Y")
        if not Q > 2**N * Y:
            raise RangeError(f"Q = {Q} violates Q > 2^N Y = {2**N * Y}")
        return PipelineParams(X=float(X), Y=float(Y), H=float(H), Q=float(Q), mode="practical", **common)
    if mode != "rigorous":
        raise RangeError(f"unknown mode {mode!r}")
    if gamma is None:
        gamma = gamma_targets(desc, None, sigma0, N, tail_eps=1e-2).values
    dist = l1(c - np.asarray(gamma, dtype=complex))
    Xr = C1 * _pow(dist + 1.0, 2.0 / consts.d1_1)
    Xr = max(Xr, math.e + 1.0)
    s, e = sigma0, consts.eta
    Yr = _pow(C_eta / consts.mu, 1.0 / (s - e)) * _pow(2.0 * Xr, s / (s - e))
    Hr = _pow(Yr, consts.A)
    Qr = math.floor(2**N * Yr) + 1.0 if math.isfinite(Yr) else math.inf
    return PipelineParams(X=Xr, Y=Yr, H=Hr, Q=Qr, mode="rigorous", **common)


# ---------------------------------------------------------------------------
# theta* assembly

@dataclass
class Construction:
    theta_star: PhaseAssignment
    residuals: np.ndarray
    raw_residuals: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _block_prime_terms(desc, primes: np.ndarray, sigma0: float, K: int):
    """Per-prime arrays over l of b(p^l) p^(-l sigma0) and (-l log p)^k, for the polishing Jacobian."""
    lp = np.log(primes.astype(float))
    L = 1
    while np.max(desc.coeff_bound * np.exp(-L * (sigma0 - desc.theta_exponent) * lp) * np.maximum(1, L * lp) ** K) > 1e-18:
        L += 1
    ls = np.arange(1, L + 1)
    coef = np.stack([desc.log_coeffs(primes, int(l)) for l in ls], axis=1) * np.exp(-np.outer(lp, ls) * sigma0)
    powk = (-np.outer(lp, ls))[None, :, :] ** np.arange(K + 1)[:, None, None]
    return ls, coef, powk


def _local_values(ls, coef, powk, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Contributions g_{p,k}(theta_p) and their theta-derivatives, shape (K+1, m)."""
    rot = np.exp(-2j * np.pi * np.outer(theta, ls)) * coef  # (m, L)
    vals = np.einsum("kml,ml->km", powk, rot)
    ders = np.einsum("kml,ml->km", powk, rot * (-2j * np.pi * ls)[None, :])
    return vals, ders


def polish_phases(desc, primes: np.ndarray, theta: np.ndarray, base: np.ndarray, c: np.ndarray, sigma0: float,
                  max_iter: int = 40, tol: float = 1e-14) -> tuple[np.ndarray, int]:
    """Minimum-norm Gauss-Newton on the given phases so that base + sum_p g_p(theta_p) = c."""
    K = c.size - 1
    ls, coef, powk = _block_prime_terms(desc, primes, sigma0, K)
    th = theta.copy()
    it = 0
    for it in range(1, max_iter + 1):
        vals, ders = _local_values(ls, coef, powk, th)
        r = base + vals.sum(axis=1) - c
        if np.max(np.abs(r)) < tol:
            return th % 1.0, it - 1
        J = np.vstack([ders.real, ders.imag])
        rr = np.concatenate([r.real, r.imag])
        step, *_ = np.linalg.lstsq(J, -rr, rcond=None)
        scale = 1.0
        norm0 = np.max(np.abs(r))
        while scale > 1e-4:
            v2, _ = _local_values(ls, coef, powk, th + scale * step)
            if np.max(np.abs(base + v2.sum(axis=1) - c)) < norm0:
                break
            scale *= 0.5
        th = th + scale * step
    return th % 1.0, it


def select_anchor_primes(desc, X: float, N: int, mu: float) -> np.ndarray:
    cand = primes_between(X, 2 * X)
    ok = cand[np.abs(desc.prime_coeffs(cand)) > mu]
    return ok[:N], ok


def assemble_theta_star(desc: LFunctionDescriptor, params: PipelineParams, c, gamma_mode: str = "finite",
                        polish: bool = True, gamma_tail_eps: float = 1e-3) -> Construction:
    """Run the block construction for targets c_k = d^k/ds^k log L_P(Q)(sigma0, theta*).

    ``gamma_mode="series"`` subtracts the infinite gamma series; ``"finite"``
    (default) subtracts the exact contribution of P(Q) minus the blocks under
    the greedy phases, which is what the series approximates.
    """
    c = np.asarray(c, dtype=complex)
    N, s0 = params.N, params.sigma0
    if c.shape != (N,) or not np.all(np.isfinite(c)):
        raise RangeError(f"target vector must be {N} finite complex numbers")
    diag: dict = {"mode": params.mode, "gamma_mode": gamma_mode}
    sieve = default_sieve()
    for name in ("X", "Y", "H", "Q"):
        v = getattr(params, name)
        if not math.isfinite(v) or v > sieve.limit:
            raise PipelineError("sieve", f"{name} = {v:.6g} exceeds the sieve limit {sieve.limit}", diag)
    try:
        PQ = primes_upto(params.Q)
    except SieveLimitError as exc:
        raise PipelineError("sieve", str(exc), diag) from exc

    theta0 = greedy_theta0(desc, params.Q)

    anchors, qualifying = select_anchor_primes(desc, params.X, N, params.mu)
    diag["anchor_candidates"] = int(qualifying.size)
    if anchors.size < N:
        raise PipelineError("anchor primes", f"only {anchors.size} primes p in (X, 2X] with |a(p)| > mu; need {N}", diag)
    blocks = []
    for j in range(N):
        lo = 2**j * params.Y
        inner = primes_between(lo, lo + params.H)
        if inner.size and inner[-1] > params.Q:
            raise PipelineError("blocks", f"block {j} reaches beyond Q", diag)
        blocks.append(np.concatenate([[anchors[j]], inner]).astype(np.int64))
    M = np.concatenate(blocks)
    if np.unique(M).size != M.size:
        raise PipelineError("blocks", "blocks are not pairwise disjoint", diag)
    diag["anchors"] = anchors.tolist()
    diag["block_sizes"] = [int(b.size) for b in blocks]

    # gamma: the series (always reported) and the exact finite remainder
    series_limit = min(sieve.limit, max(params.Q, 10**6))
    try:
        gs = gamma_targets(desc, None, s0, N, tail_eps=gamma_tail_eps)
    except PipelineError:
        gs = gamma_targets(desc, None, s0, N, prime_limit=series_limit)
    diag["gamma_series"] = gs.values
    diag["gamma_truncation"] = gs.truncation_point
    diag["gamma_tail_bound"] = gs.tail_bound
    rest = np.setdiff1d(PQ, M, assume_unique=True)
    g_fin = finite_log_product_derivs(desc, rest, s0, theta0, N - 1, tol=_LTOL)
    diag["gamma_finite"] = g_fin
    if gamma_mode == "series":
        g_used = gs.values
    elif gamma_mode == "finite":
        g_used = g_fin
    else:
        raise RangeError(f"unknown gamma_mode {gamma_mode!r}")

    system = NodeSystem(params.Y, N)
    z = vdm_solve(system, c - g_used)
    znorm = l1(z)
    radii = [np.abs(desc.prime_coeffs(b)) * b.astype(float) ** (-s0) for b in blocks]
    caps = [float(r.sum()) for r in radii]
    diag["z"] = z
    diag["z_norm"] = znorm
    diag["block_capacity"] = caps

    # sufficient conditions of the block construction, measured
    rad_q = np.abs(desc.prime_coeffs(qualifying)) * qualifying.astype(float) ** (-s0)
    inner_rad = np.concatenate([r[1:] for r in radii])
    inner_sums = [float(r[1:].sum()) for r in radii]
    diag["Y1"] = bool(rad_q.size == 0 or inner_rad.size == 0 or rad_q.min() >= inner_rad.max())
    diag["Y2"] = bool(rad_q.size == 0 or rad_q.max() <= min(inner_sums))

    bad = [j for j in range(N) if znorm > caps[j]]
    if bad:
        raise PipelineError(
            "block capacity",
            f"||z|| = {znorm:.6g} exceeds the attainable radius of block(s) {bad} "
            f"(capacities {', '.join(f'{caps[j]:.6g}' for j in bad)})",
            diag,
        )

    new_p, new_th = [], []
    for j, (blk, r) in enumerate(zip(blocks, radii)):
        b = desc.prime_coeffs(blk)
        nz = r > 0
        try:
            psi = realize_phase_sum(r[nz], z[j])
        except ValueError as exc:
            raise PipelineError("disk filling", f"block {j}: {exc}", diag) from exc
        new_p.append(blk[nz])
        new_th.append(psi + _coeff_phases(b[nz]))
    mp = np.concatenate(new_p)
    mth = np.concatenate(new_th)
    theta_star = theta0.override(PhaseAssignment(mp, mth))
    raw = finite_log_product_derivs(desc, PQ, s0, theta_star, N - 1, tol=_LTOL)
    raw_res = np.abs(raw - c)
    diag["raw_residuals"] = raw_res
    diag["polish_iterations"] = 0
    if polish:
        ls, coef, powk = _block_prime_terms(desc, mp, s0, N - 1)
        vals, _ = _local_values(ls, coef, powk, theta_star.lookup(mp))
        base = raw - vals.sum(axis=1)
        th, iters = polish_phases(desc, mp, theta_star.lookup(mp), base, c, s0)
        polished = theta0.override(PhaseAssignment(mp, th))
        res = np.abs(finite_log_product_derivs(desc, PQ, s0, polished, N - 1, tol=_LTOL) - c)
        diag["polish_iterations"] = iters
        if np.max(res) < np.max(raw_res):
            theta_star = polished
            raw_final = res
        else:
            raw_final = raw_res
    else:
        raw_final = raw_res
    return Construction(theta_star, raw_final, raw_res, diag)


def global_phase_solve(desc: LFunctionDescriptor, params: PipelineParams, c, seed: int = 0, jitter: float = 0.05,
                       max_iter: int = 100) -> Construction:
    """Gauss-Newton on every phase in P(Q), started from jittered greedy phases.

    Not the block construction: no capacity check, no Vandermonde split.
    Useful when the blocks are too small for the target but P(Q) as a whole is not.
    """
    c = np.asarray(c, dtype=complex)
    N, s0 = params.N, params.sigma0
    if c.shape != (N,) or not np.all(np.isfinite(c)):
        raise RangeError(f"target vector must be {N} finite complex numbers")
    sieve = default_sieve()
    if not math.isfinite(params.Q) or params.Q > sieve.limit:
        raise PipelineError("sieve", f"Q = {params.Q:.6g} exceeds the sieve limit {sieve.limit}")
    PQ = primes_upto(params.Q)
    theta0 = greedy_theta0(desc, params.Q)
    rng = np.random.default_rng(seed)
    start = theta0.phases + rng.uniform(-jitter, jitter, PQ.size)
    raw = np.abs(finite_log_product_derivs(desc, PQ, s0, start, N - 1, tol=_LTOL) - c)
    th, iters = polish_phases(desc, PQ, start, np.zeros(N, dtype=complex), c, s0, max_iter=max_iter)
    theta_star = PhaseAssignment(PQ, th)
    res = np.abs(finite_log_product_derivs(desc, PQ, s0, theta_star, N - 1, tol=_LTOL) - c)
    diag = {"mode": params.mode, "strategy": "global", "seed": seed, "jitter": jitter,
            "polish_iterations": iters, "raw_residuals": raw}
    return Construction(theta_star, res, raw, diag)
