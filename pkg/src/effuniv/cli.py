"""Command-line harness: constants, construct, scan, disc, mollifier-check.

Reports are JSON (``"schema": 1``) with floats rounded to 15 significant
digits so identical inputs give byte-identical output.  Exit codes: 0 ok,
2 bad input, 3 construction step failed, 4 numerical precision failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds, mollifier, phases
from .evaluate import (DEFAULT_CONFIG, BranchError, EvalConfig, PrecisionError, eval_L, eval_L_derivs,
                       eval_logL_derivs, finite_log_product_derivs)
from .lfunc import LFunctionDescriptor, builtin_dirichlet, builtin_zeta
from .primes import primes_upto

SCHEMA = 1
EXIT_OK, EXIT_INPUT, EXIT_PIPELINE, EXIT_PRECISION = 0, 2, 3, 4
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

log = logging.getLogger("effuniv")


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parsing and formatting

def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("I", "i").replace("i", "j")
    try:
        return complex(t)
    except ValueError as exc:
        raise InputError(f"not a complex literal: {text!r}") from exc


def parse_vector(text: str) -> np.ndarray:
    return np.array([parse_complex(x) for x in text.split(",") if x.strip()], dtype=complex)


def parse_descriptor(spec: str) -> LFunctionDescriptor:
    """``zeta``, ``dirichlet:<q>:<v0,v1,...>`` or a path to a descriptor JSON file."""
    if spec == "zeta":
        return builtin_zeta()
    if spec.startswith("dirichlet:"):
        parts = spec.split(":", 2)
        if len(parts) != 3:
            raise InputError("expected dirichlet:<modulus>:<comma-separated table>")
        try:
            q = int(parts[1])
            return builtin_dirichlet(q, list(parse_vector(parts[2])))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    if spec.endswith(".json"):
        with open(spec) as fh:
            return LFunctionDescriptor.from_json(fh.read())
    raise InputError(f"unknown descriptor {spec!r}")


def parse_trange(text: str) -> tuple[float, float, float]:
    try:
        a, b, c = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise InputError("expected t0:t1:step") from exc
    if not (a < b) or not c > 0:
        raise InputError(f"empty or invalid range {text!r}")
    return a, b, c


def _num(x: float):
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return float(f"{x:.15g}")


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_num(obj.real), _num(obj.imag)]
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(jsonable({"schema": SCHEMA, **doc}), sort_keys=True, indent=2)


def _fmt(x: float) -> str:
    return f"{x:.15g}"


# ---------------------------------------------------------------------------
# constants

def cmd_constants(desc: LFunctionDescriptor, sigma0: float, N: int, c, eps: float, C1: float = 1.0) -> dict:
    consts = bounds.compute_constants(desc, sigma0)
    c = np.asarray(c, dtype=complex)
    doc = {
        "descriptor": desc.name,
        "N": N,
        "constants": consts.as_dict(),
        "threshold_Q": bounds.threshold_Q(consts, c, eps, C1),
        "log_log_T": bounds.threshold_T_main(consts, N, c, eps, C1),
        "C1_stand_in": C1,
    }
    doc["B_quantity"] = bounds.B_quantity(N, c, eps) if c.size and c[0] != 0 else None
    return doc


# ---------------------------------------------------------------------------
# construct

def cmd_construct(desc: LFunctionDescriptor, sigma0: float, N: int, c, eps: float, params: dict | None = None,
                  mode: str = "practical", gamma_mode: str = "finite", polish: bool = True,
                  strategy: str = "blocks") -> tuple[dict, phases.PhaseAssignment]:
    params = params or {}
    p = phases.derive_pipeline_params(desc, sigma0, N, eps, c, mode=mode, X=params.get("X"), Y=params.get("Y"),
                                      H=params.get("H"), Q=params.get("Q"), C1=params.get("C1", 1.0))
    if strategy == "blocks":
        res = phases.assemble_theta_star(desc, p, c, gamma_mode=gamma_mode, polish=polish)
    elif strategy == "global":
        res = phases.global_phase_solve(desc, p, c)
    else:
        raise InputError(f"unknown strategy {strategy!r}")
    worst = float(np.max(res.residuals))
    doc = {
        "descriptor": desc.name,
        "strategy": strategy,
        "params": p.as_dict(),
        "targets": np.asarray(c, dtype=complex),
        "eps": eps,
        "residuals": res.residuals,
        "max_residual": worst,
        "pass": worst < eps / 3.0,
        "diagnostics": res.diagnostics,
    }
    return doc, res.theta_star


# ---------------------------------------------------------------------------
# scan

def _residual_row(desc, sigma0: float, t: float, c: np.ndarray, config: EvalConfig) -> np.ndarray:
    d = eval_logL_derivs(desc, complex(sigma0, t), c.size - 1, config)
    return np.abs(d - c)


def _scan_window(args) -> tuple[int, list, list]:
    desc_json, sigma0, c, ts, index = args
    desc = LFunctionDescriptor.from_json(desc_json)
    rows, errors = [], []
    for t in ts:
        try:
            rows.append(_residual_row(desc, sigma0, t, c, DEFAULT_CONFIG))
        except (BranchError, PrecisionError) as exc:
            rows.append(np.full(c.size, np.nan))
            errors.append({"t": t, "error": f"{type(exc).__name__}: {exc}"})
    return index, rows, errors


@dataclass
class ScanReport:
    descriptor: str
    sigma0: float
    N: int
    targets: np.ndarray
    eps: float
    t_range: tuple[float, float, float]
    grid_t: np.ndarray
    grid_residuals: np.ndarray
    best_t: float
    best_residual_vector: np.ndarray
    window_minima: list
    errors: list = field(default_factory=list)
    wall_time: float | None = None

    @property
    def best_residual(self) -> float:
        return float(np.max(self.best_residual_vector))

    @property
    def success(self) -> bool:
        return self.best_residual < self.eps

    def as_dict(self, with_timing: bool = False) -> dict:
        doc = {
            "descriptor": self.descriptor,
            "sigma0": self.sigma0,
            "N": self.N,
            "targets": self.targets,
            "eps": self.eps,
            "t_range": list(self.t_range),
            "grid_points": int(self.grid_t.size),
            "best_t": self.best_t,
            "best_residual_vector": self.best_residual_vector,
            "best_residual": self.best_residual,
            "success": self.success,
            "window_minima": self.window_minima,
            "errors": self.errors,
        }
        if with_timing:
            doc["wall_time"] = self.wall_time
        return doc

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"residual_{k}" for k in range(self.N)] + ["max_residual"])
        for t, row in zip(self.grid_t, self.grid_residuals):
            w.writerow([_fmt(t)] + [_fmt(v) for v in row] + [_fmt(np.max(row))])
        return buf.getvalue()


def golden_minimize(f, a: float, b: float, tol: float = 1e-11, max_iter: int = 200) -> tuple[float, float]:
    """Golden-section search for a minimum of f on [a, b]; returns (x, f(x))."""
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _grid(t_min: float, t_max: float, step: float) -> np.ndarray:
    n = int(math.floor((t_max - t_min) / step + 1e-9))
    return t_min + step * np.arange(n + 1)


def run_scan(desc: LFunctionDescriptor, sigma0: float, c, eps: float, t_min: float, t_max: float, step: float,
             workers: int = 1, window: int = 100, refine: bool = True) -> ScanReport:
    c = np.asarray(c, dtype=complex)
    if not (0 < t_min < t_max <= 1e4) or not step > 0:
        raise InputError("need 0 < t_min < t_max <= 1e4 and step > 0")
    start = time.perf_counter()
    ts = _grid(t_min, t_max, step)
    desc_json = desc.to_json()
    chunks = [(desc_json, sigma0, c, ts[i : i + window].tolist(), k) for k, i in enumerate(range(0, ts.size, window))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_window, chunks))
    else:
        results = [_scan_window(ch) for ch in chunks]
    results.sort(key=lambda r: r[0])
    rows = np.array([row for _, rs, _ in results for row in rs])
    errors = [e for _, _, es in results for e in es]
    maxres = np.max(rows, axis=1)
    finite = np.where(np.isfinite(maxres), maxres, np.inf)
    if not np.isfinite(finite).any():
        raise PrecisionError("every grid point failed to evaluate")
    i_best = int(np.argmin(finite))
    best_t, best_vec = float(ts[i_best]), rows[i_best]
    minima = []
    for k, (_, rs, _) in enumerate(results):
        m = np.array([np.max(r) for r in rs])
        m = np.where(np.isfinite(m), m, np.inf)
        j = int(np.argmin(m))
        minima.append({"window": k, "t": float(chunks[k][3][j]), "max_residual": float(m[j])})
    if refine:
        def f(t):
            try:
                return float(np.max(_residual_row(desc, sigma0, t, c, DEFAULT_CONFIG)))
            except (BranchError, PrecisionError):
                return math.inf
        lo, hi = max(t_min, best_t - step), min(t_max, best_t + step)
        t_ref, f_ref = golden_minimize(f, lo, hi)
        if f_ref < finite[i_best]:
            best_t = t_ref
            best_vec = _residual_row(desc, sigma0, t_ref, c, DEFAULT_CONFIG)
    return ScanReport(desc.name, sigma0, c.size, c, eps, (t_min, t_max, step), ts, rows, best_t, best_vec,
                      minima, errors, time.perf_counter() - start)


# ---------------------------------------------------------------------------
# disc approximation

def halton(n: int, base: int) -> np.ndarray:
    out = np.empty(n)
    for i in range(n):
        f, x, k = 1.0, 0.0, i + 1
        while k:
            f /= base
            x += f * (k % base)
            k //= base
        out[i] = x
    return out


def disc_samples(radius: float, n_boundary: int = 720, n_interior: int = 1000) -> np.ndarray:
    """Offsets s - s0: boundary circle plus Halton points mapped uniformly into the disc."""
    ang = 2 * np.pi * np.arange(n_boundary) / n_boundary
    bd = radius * np.exp(1j * ang)
    u, v = halton(n_interior, 2), halton(n_interior, 3)
    inner = radius * np.sqrt(u) * np.exp(2j * np.pi * v)
    return np.concatenate([bd, inner])


def _poly(coeffs: np.ndarray, h: np.ndarray) -> np.ndarray:
    return np.polyval(np.asarray(coeffs, dtype=complex)[::-1], h)


def admissible_delta(M_tau: float, N: int, eps: float, delta0: float) -> float:
    """Largest delta <= delta0 (to bisection accuracy) with M delta^N / (1 - delta) < eps/3."""
    g = lambda d: M_tau * d**N / (1 - d) - eps / 3.0
    if g(delta0) < 0:
        return delta0
    lo, hi = 0.0, delta0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return lo


def cmd_disc(desc: LFunctionDescriptor, sigma0: float, t0: float, r: float, g_taylor, eps: float, delta0: float,
             t_range: tuple[float, float, float], n_boundary: int = 720, n_interior: int = 1000,
             config: EvalConfig = DEFAULT_CONFIG) -> dict:
    g = np.asarray(g_taylor, dtype=complex)
    if g.size == 0 or g[0] == 0:
        raise InputError("g(s0) must be nonzero")
    if not 0 < delta0 < 1 or not 0 < eps < 1 or not r > 0:
        raise InputError("need 0 < delta0 < 1, 0 < eps < 1, r > 0")
    lo_sigma = max(desc.sigma_L, 1 - 2 * desc.E_L)
    if sigma0 - r <= lo_sigma:
        raise InputError(f"disc leaves the half-plane sigma > {lo_sigma}")
    s0 = complex(sigma0, t0)
    bd = r * np.exp(2j * np.pi * np.arange(n_boundary) / n_boundary)
    M_g = float(np.max(np.abs(_poly(g, bd))))
    N = bounds.gl_N_choice(M_g, delta0, eps)
    fact = np.array([math.factorial(k) for k in range(N)], dtype=float)
    g_pad = np.concatenate([g, np.zeros(max(0, N - g.size), dtype=complex)])
    c = g_pad[:N] * fact  # derivatives g^(k)(s0)

    def mismatch(tau: float) -> float:
        try:
            return float(np.max(np.abs(eval_L_derivs(desc, s0 + 1j * tau, N - 1, config) - c)))
        except (PrecisionError, ZeroDivisionError):
            return math.inf

    a, b, step = t_range
    taus = _grid(a, b, step)
    vals = np.array([mismatch(t) for t in taus])
    i = int(np.argmin(vals))
    tau, best = golden_minimize(mismatch, max(a, taus[i] - step), min(b, taus[i] + step))
    if best > vals[i]:
        tau, best = float(taus[i]), float(vals[i])

    Lder = eval_L_derivs(desc, s0 + 1j * tau, N - 1, config)
    M_tau = max(abs(eval_L(desc, s0 + h + 1j * tau, 0, config)) for h in bd)
    delta = admissible_delta(M_tau, N, eps, delta0)
    h = disc_samples(delta * r, n_boundary, n_interior)
    L_vals = np.array([eval_L(desc, s0 + x + 1j * tau, 0, config) for x in h])
    g_vals = _poly(g, h)
    P_g = _poly(g_pad[:N], h)
    P_L = _poly(Lder / fact, h)
    sup_dev = float(np.max(np.abs(L_vals - g_vals)))
    sigma1 = float(np.max(np.abs(g_vals - P_g)))
    sigma2 = float(np.max(np.abs(P_L - P_g)))
    sigma3 = float(np.max(np.abs(L_vals - P_L)))
    return {
        "descriptor": desc.name,
        "s0": s0,
        "r": r,
        "N": N,
        "M_g": M_g,
        "targets": c,
        "tau": tau,
        "derivative_mismatch": best,
        "M_tau": M_tau,
        "delta": delta,
        "sup_deviation": sup_dev,
        "sigma1": sigma1,
        "sigma2": sigma2,
        "sigma3": sigma3,
        "sigma1_bound": M_g * delta0**N / (1 - delta0),
        "sigma3_bound": M_tau * delta**N / (1 - delta),
        "budget_holds": sup_dev <= sigma1 + sigma2 + sigma3,
        "success": sup_dev < eps,
        "samples": {"boundary": n_boundary, "interior": n_interior},
    }


# ---------------------------------------------------------------------------
# mollifier check

def cmd_mollifier_check(Q: float, M: float, seed: int = 0, points: int = 20) -> dict:
    spec = mollifier.MollifierSpec(Q=Q, M=M)
    rng = np.random.default_rng(seed)
    a0 = [abs(mollifier.fourier_alpha(spec, 0, float(t)) - 1.0) for t in rng.uniform(size=points)]
    doc = {
        "Q": Q,
        "M": M,
        "delta": spec.delta,
        "bump_normalizer": mollifier.bump_normalizer(),
        "C_phi": spec.C_phi,
        "alpha0_max_error": max(a0),
        "truncation_error_bound": mollifier.truncation_error_bound(spec),
        "full_sum_bound": mollifier.full_sum_bound(spec),
        "fitted": mollifier.fitted_exponent_constants(spec),
    }
    k = primes_upto(Q).size
    if k <= 3 and M <= 1000:
        worst = 0.0
        for _ in range(points):
            th, ts = rng.uniform(size=k), rng.uniform(size=k)
            worst = max(worst, abs(mollifier.truncated_phi_Q(spec, th, ts, int(M)) - mollifier.phi_Q_value(spec, th, ts)))
        doc["reconstruction_max_error"] = worst
    return doc


# ---------------------------------------------------------------------------
# entry point

def _add_common(p: argparse.ArgumentParser, target: bool = True) -> None:
    p.add_argument("--descriptor", default="zeta", help="zeta | dirichlet:<q>:<table> | <file>.json")
    p.add_argument("--sigma0", type=float, required=True)
    if target:
        p.add_argument("--order", "-N", type=int, default=None, help="N (defaults to the target length)")
        p.add_argument("--target", required=True, help="comma-separated complex literals, e.g. 0.1,0.05+0.2i")
        p.add_argument("--eps", type=float, required=True)
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="effuniv", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="effective exponents and thresholds")
    _add_common(p)
    p.add_argument("--C1", type=float, default=1.0, help="stand-in for the unquantified constant")

    p = sub.add_parser("construct", help="build theta* for a derivative target")
    _add_common(p)
    p.add_argument("--params", help="JSON file with X, Y, H, Q (practical mode)")
    p.add_argument("--mode", choices=["practical", "rigorous"], default="practical")
    for name in ("X", "Y", "H", "Q"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--gamma", choices=["finite", "series"], default="finite")
    p.add_argument("--no-polish", action="store_true")
    p.add_argument("--strategy", choices=["blocks", "global"], default="blocks",
                   help="blocks: the Vandermonde block construction; global: Gauss-Newton over all of P(Q)")
    p.add_argument("--theta-out", help="write theta* as JSON (prime, phase) pairs")

    p = sub.add_parser("scan", help="scan t for log L derivatives near the target")
    _add_common(p)
    p.add_argument("--trange", required=True, help="t0:t1:step")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", help="write per-t residuals here")
    p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")

    p = sub.add_parser("disc", help="approximate g on a disc by a vertical shift of L")
    _add_common(p, target=False)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--g", required=True, help="Taylor coefficients of g at s0, comma-separated")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta0", type=float, required=True)
    p.add_argument("--trange", required=True, help="tau0:tau1:step")

    p = sub.add_parser("mollifier-check", help="certify the periodized bump estimates")
    p.add_argument("--Q", type=float, required=True)
    p.add_argument("--M", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    return ap


def _targets(args) -> tuple[np.ndarray, int]:
    c = parse_vector(args.target)
    N = args.order if args.order is not None else c.size
    if c.size != N:
        raise InputError(f"--target has {c.size} entries but --order is {N}")
    return c, N


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "constants":
            desc = parse_descriptor(args.descriptor)
            c, N = _targets(args)
            _emit(dumps(cmd_constants(desc, args.sigma0, N, c, args.eps, args.C1)), args.out)
        elif args.command == "construct":
            desc = parse_descriptor(args.descriptor)
            c, N = _targets(args)
            params = {}
            if args.params:
                with open(args.params) as fh:
                    params = json.load(fh)
            for name in ("X", "Y", "H", "Q"):
                if getattr(args, name) is not None:
                    params[name] = getattr(args, name)
            doc, theta = cmd_construct(desc, args.sigma0, N, c, args.eps, params, args.mode, args.gamma,
                                       not args.no_polish, args.strategy)
            if args.theta_out:
                with open(args.theta_out, "w") as fh:
                    fh.write(theta.to_json() + "\n")
            _emit(dumps(doc), args.out)
        elif args.command == "scan":
            desc = parse_descriptor(args.descriptor)
            c, N = _targets(args)
            t0, t1, step = parse_trange(args.trange)
            rep = run_scan(desc, args.sigma0, c, args.eps, t0, t1, step, workers=args.workers)
            if args.csv:
                with open(args.csv, "w") as fh:
                    fh.write(rep.to_csv())
            if args.timing:
                log.warning("wall time %.3f s", rep.wall_time)
            _emit(dumps(rep.as_dict(with_timing=args.timing)), args.out)
        elif args.command == "disc":
            desc = parse_descriptor(args.descriptor)
            doc = cmd_disc(desc, args.sigma0, args.t0, args.r, parse_vector(args.g), args.eps, args.delta0,
                           parse_trange(args.trange))
            _emit(dumps(doc), args.out)
        elif args.command == "mollifier-check":
            _emit(dumps(cmd_mollifier_check(args.Q, args.M, args.seed)), args.out)
    except phases.PipelineError as exc:
        sys.stderr.write(f"error: construction failed at step {exc}\n")
        if exc.diagnostics:
            sys.stderr.write(dumps({"diagnostics": exc.diagnostics}) + "\n")
        return EXIT_PIPELINE
    except PrecisionError as exc:
        sys.stderr.write(f"error: precision: {exc}\n")
        return EXIT_PRECISION
    except (InputError, bounds.RangeError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
