"""Integration kernels: adaptive 1D, principal value, stratified Monte Carlo
and Richardson extrapolation in k^2.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Quadrature did not reach the requested tolerance.

    ``estimate`` and ``abs_error`` hold the best available result.
    """

    def __init__(self, message: str, estimate=float("nan"), abs_error=float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.abs_error = abs_error


class PoleAtEndpointError(QuadratureError):
    """The pole sits on an interval endpoint; the caller must split the interval."""


class MCError(QuadratureError):
    """Monte Carlo standard error above the configured target."""


@dataclass(frozen=True)
class QuadResult:
    value: float | complex
    abs_error: float
    evaluations: int

    def __post_init__(self):
        if not self.abs_error >= 0:
            raise ValueError("abs_error must be >= 0")


@dataclass(frozen=True)
class MCConfig:
    """Settings for the deterministic stratified Monte Carlo estimator.

    Attributes
    ----------
    seed : key of the counter-based generator
    samples : total number of integrand evaluations
    strata : number of equal slabs along the first coordinate
    target_rel_error : largest acceptable standard error / |estimate|
    """

    seed: int = 20240101
    samples: int = 200_000
    strata: int = 64
    target_rel_error: float = 1e-2

    def __post_init__(self):
        if self.samples <= 0:
            raise ValueError("samples must be > 0")
        if self.strata < 1:
            raise ValueError("strata must be >= 1")
        if self.samples < self.strata:
            raise ValueError("samples must be >= strata")
        if not self.target_rel_error > 0:
            raise ValueError("target_rel_error must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def integrate_adaptive(f: Callable[[float], float], a: float, b: float,
                       tol: float = 1e-10, tol_abs: float = 0.0,
                       points: Sequence[float] | None = None,
                       limit: int = 500) -> QuadResult:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    Infinite limits are allowed (QUADPACK maps them internally). Raises
    :class:`QuadratureError` with the best estimate when the subdivision
    limit is exhausted or roundoff prevents reaching ``tol``.
    """
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    finite = math.isfinite(a) and math.isfinite(b)
    pts = None
    if points is not None and finite:
        pts = sorted(p for p in points if a < p < b) or None
    counter = [0]

    def g(x):
        counter[0] += 1
        return f(x)

    with np.errstate(all="ignore"):
        out = integrate.quad(
            g, a, b, epsabs=tol_abs, epsrel=tol, limit=limit, points=pts,
            full_output=1,
        )
    value, err = float(out[0]), float(abs(out[1]))
    # a fourth element (the QUADPACK message) is present only when ier != 0
    failed = len(out) > 3
    if not math.isfinite(value) or (failed and err > max(tol * abs(value), tol_abs)):
        raise QuadratureError(
            f"adaptive quadrature on [{a}, {b}] reached error {err:.3g}"
            f" for value {value:.6g}", value, err)
    result = QuadResult(value, err, counter[0])
    return result


def pv_log_term(pole: float, a: float, b: float) -> float:
    """``PV int_a^b dx / (x - pole)`` for a pole inside or outside ``[a, b]``."""
    return math.log(abs((b - pole) / (a - pole)))


def integrate_pv(f_regular: Callable[[float], float], pole: float | Sequence[float],
                 residue: float | Sequence[float], a: float, b: float,
                 tol: float = 1e-10, tol_abs: float = 0.0) -> QuadResult:
    """Principal value of ``f_regular(x) + sum_j residue_j / (x - pole_j)``.

    The singular part is integrated in closed form,
    ``residue * ln|(b - pole)/(pole - a)|``, and only the regular remainder
    is handed to adaptive quadrature. Several simple poles may be given.
    """
    poles = np.atleast_1d(np.asarray(pole, dtype=float))
    residues = np.atleast_1d(np.asarray(residue, dtype=float))
    if poles.shape != residues.shape:
        raise ValueError("pole and residue must have the same length")
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    scale = max(1.0, abs(a), abs(b))
    for c in poles:
        if min(abs(c - a), abs(c - b)) < 1e-10 * scale:
            raise PoleAtEndpointError(
                f"pole {c} within 1e-10 of an endpoint of [{a}, {b}]; bisect the interval")
    singular = float(sum(r * pv_log_term(c, a, b) for c, r in zip(poles, residues)))
    inside = [c for c in poles if a < c < b]
    reg = integrate_adaptive(f_regular, a, b, tol=tol, tol_abs=tol_abs, points=inside)
    return QuadResult(reg.value + singular, reg.abs_error, reg.evaluations)


def _chunk_bounds(n: int, parts: int):
    edges = np.linspace(0, n, parts + 1).astype(np.int64)
    return list(zip(edges[:-1], edges[1:]))


def counter_uniforms(seed: int, stream: int, n: int, dim: int) -> np.ndarray:
    """``n x dim`` uniforms from a Philox stream keyed by ``(seed, stream)``.

    The draw depends only on the key, never on call order, which is what
    makes chunked parallel sampling reproducible.
    """
    bitgen = np.random.Philox(key=[seed % 2**64, stream % 2**64])
    return np.random.Generator(bitgen).random((n, dim))


def mc_integrate(f: Callable[[np.ndarray], np.ndarray], lower: Sequence[float],
                 upper: Sequence[float], cfg: MCConfig, threads: int | None = None,
                 check_target: bool = True) -> QuadResult:
    """Stratified Monte Carlo over a hyper-rectangle.

    ``f`` receives an ``(n, d)`` array of points and returns ``n`` values.
    The first coordinate is split into ``cfg.strata`` equal slabs; samples
    are allotted to slabs as evenly as possible and drawn from a
    counter-based stream keyed by ``(cfg.seed, slab)``. Slab results are
    combined in slab order, so the estimate is bit-identical for any
    ``threads``.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    dim = lo.size
    if dim < 1 or dim > 6 or hi.shape != lo.shape:
        raise ValueError("domain must have between 1 and 6 dimensions")
    if np.any(hi <= lo):
        raise ValueError("upper bounds must exceed lower bounds")
    S = cfg.strata
    per = _chunk_bounds(cfg.samples, S)
    width = (hi - lo)
    vol = float(np.prod(width))

    def run(s):
        n = int(per[s][1] - per[s][0])
        u = counter_uniforms(cfg.seed, s, n, dim)
        u[:, 0] = (s + u[:, 0]) / S
        x = lo + u * width
        vals = np.asarray(f(x), dtype=float)
        mean = float(np.mean(vals))
        var = float(np.var(vals, ddof=1)) / n if n > 1 else 0.0
        return mean, var

    threads = threads or 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, range(S)))
    else:
        parts = [run(s) for s in range(S)]
    value = vol * sum(m for m, _ in parts) / S
    err = vol * math.sqrt(sum(v for _, v in parts)) / S
    res = QuadResult(value, err, cfg.samples)
    if check_target and err > cfg.target_rel_error * abs(value) and err > 0:
        raise MCError(f"MC relative error {err / abs(value) if value else math.inf:.3g}"
                      f" above target {cfg.target_rel_error}", value, err)
    return res


def default_threads() -> int:
    env = os.environ.get("PLASMA_THREADS")
    if env:
        return max(1, int(env))
    return 1


def richardson_k2(values: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Extrapolate ``v(k) = v0 + c2 k^2 + c4 k^4 + ...`` to ``k = 0``.

    ``values`` holds ``(k, v)`` pairs with strictly decreasing k. Neville
    elimination in the variable ``k^2`` removes one even power per extra
    point; the error estimate is the magnitude of the last correction.
    """
    if len(values) < 2:
        raise ValueError("Richardson extrapolation needs at least 2 points")
    ks = np.array([k for k, _ in values], dtype=float)
    vs = [float(v) for _, v in values]
    if np.any(np.diff(ks) >= 0):
        raise ValueError("k values must be strictly decreasing")
    h = ks * ks
    table = list(vs)
    last = 0.0
    for level in range(1, len(vs)):
        new = []
        for i in range(len(table) - 1):
            h_far, h_near = h[i], h[i + level]
            corr = (table[i + 1] - table[i]) * h_near / (h_far - h_near)
            new.append(table[i + 1] + corr)
            last = corr
        table = new
    return table[0], abs(last)
