"""Built-in invariant checks run by ``relplasma self-test``."""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from . import bremsstrahlung as br
from .gamma import GAMMA, METRIC, slash, spatial_trace_closed_form, trace_product
from .kinematics import PlasmaState, fermi_relation_residuals
from .quadrature import MCConfig, integrate_pv, mc_integrate, richardson_k2
from .rpa import (
    WavePoint,
    chi_density_matter,
    chi_rpa_matter,
    chi_vacuum,
    dielectric_longitudinal,
    lambda_projectors,
)


def _clifford():
    err = 0.0
    for mu, nu in itertools.product(range(4), repeat=2):
        ac = GAMMA[mu] @ GAMMA[nu] + GAMMA[nu] @ GAMMA[mu]
        err = max(err, np.abs(ac - 2 * METRIC[mu, nu] * np.eye(4)).max())
    return err < 1e-14, f"max anticommutator error {err:.1e}"


def _traces(rng):
    g = METRIC
    err = 0.0
    for a, b, c, d in itertools.product(range(4), repeat=4):
        ref = 4 * (g[a, b] * g[c, d] - g[a, c] * g[b, d] + g[a, d] * g[b, c])
        err = max(err, abs(trace_product([GAMMA[a], GAMMA[b], GAMMA[c], GAMMA[d]]) - ref))
    rel = 0.0
    for _ in range(20):
        m = rng.uniform(0.1, 2)
        p3, k3 = rng.normal(size=3), rng.normal(size=3)
        p = np.r_[math.sqrt(p3 @ p3 + m * m), p3]
        pk3 = p3 + k3
        pk = np.r_[math.sqrt(pk3 @ pk3 + m * m), pk3]
        closed = spatial_trace_closed_form(p, pk, m)
        lower = [GAMMA[i] * -1 for i in range(1, 4)]
        brute = np.array([[trace_product([lower[i], slash(p) - m * np.eye(4), lower[j],
                                          slash(pk) - m * np.eye(4)]).real
                           for j in range(3)] for i in range(3)])
        rel = max(rel, np.abs(brute - closed).max() / np.abs(brute).max())
    return err < 1e-12 and rel < 1e-10, f"4-gamma {err:.1e}, closed form rel {rel:.1e}"


def _fermi(rng, n):
    worst = 0.0
    for _ in range(n):
        st = PlasmaState(rng.uniform(0.1, 100), rng.uniform(-2, 2))
        r = fermi_relation_residuals(rng.uniform(1, 50), rng.uniform(1, 50), st)
        worst = max(worst, np.abs(r).max())
    return worst < 1e-12, f"max residual {worst:.1e}"


def _spin_sums(rng, n):
    st = PlasmaState(10.0)
    worst = 0.0
    for _ in range(n):
        p_i, p_f, k = rng.normal(size=(3, 3))
        pol = np.cross(k, rng.normal(size=3))
        pol /= np.linalg.norm(pol)
        for sp in (br.ELECTRON, br.POSITRON):
            t = br.spin_summed_trace(p_i, p_f, k, pol, sp, st)
            e = br.spin_summed_explicit(p_i, p_f, k, pol, sp, st)
            worst = max(worst, abs(t - e) / max(abs(e), 1e-300))
    return worst < 1e-8, f"max rel diff {worst:.1e}"


def _projector_shift(rng):
    st = PlasmaState(1.0)
    worst = 0.0
    for _ in range(50):
        k = rng.uniform(0.05, 2)
        p, u = rng.uniform(0.01, 3), rng.uniform(-1, 1)
        wp = WavePoint(k, 0.3)
        pp = math.sqrt(p * p - 2 * p * k * u + k * k)
        up = (k - p * u) / pp
        a = np.array(lambda_projectors(p, u, wp, st))
        b = np.array(lambda_projectors(pp, up, wp, st))
        worst = max(worst, np.abs(a - b).max())
    return worst < 1e-12, f"max shift asymmetry {worst:.1e}"


def _quadrature():
    pv = integrate_pv(lambda x: 1.0, 1.0, 1.0, 0.0, 2.0).value
    v0, _ = richardson_k2([(0.1, 3.01), (0.05, 3.0025)])
    mc = mc_integrate(lambda x: np.ones(len(x)), [0, 0, 0], [1, 1, 1], MCConfig(1, 1000, 10))
    ok = abs(pv - 2) < 1e-12 and abs(v0 - 3) < 1e-14 and mc.value == 1.0
    return ok, f"pv {pv:.15g}, richardson {v0:.15g}, mc {mc.value}"


def _response(quick):
    st = PlasmaState(5.0, 0.3)
    w = WavePoint(0.3, 0.2)
    cl, ct = chi_rpa_matter(w, st, 1e-8)
    cm, _ = chi_rpa_matter(WavePoint(0.3, -0.2), st, 1e-8)
    c00 = chi_density_matter(w, st, 1e-8)
    gauge = abs(c00 - (0.3 / 0.2) ** 2 * cl) / abs(c00)
    conj = abs(cm - cl.conjugate()) / abs(cl)
    eps0 = dielectric_longitudinal(0, WavePoint(0.3, 0.0), st,
                                   chi_00=chi_density_matter(WavePoint(0.3, 0.0), st))
    ok = gauge < 1e-7 and conj < 1e-7 and cl.imag <= 0 and ct.imag <= 0 and eps0.real > 1
    msg = f"gauge {gauge:.1e}, reality {conj:.1e}, static eps_l {eps0.real:.4g}"
    if not quick:
        vl, _ = chi_vacuum(WavePoint(0.5, 1.0), st, 50.0)
        ok = ok and vl.imag == 0.0
        msg += f", vacuum Im below threshold {vl.imag}"
    return ok, msg


def _absorption(quick):
    st = PlasmaState(200.0, 0.95)
    ion1, ion2 = br.IonPotentialModel(1, 0.01, 1.0), br.IonPotentialModel(2, 0.01, 1.0)
    mc = MCConfig(7, 4000 if quick else 20000, 16, 0.2)
    a1, e1 = br.absorption_at_k(0.01, [0, 0, 1e-3], [1, 0, 0], st, ion1, mc)
    a2, _ = br.absorption_at_k(0.01, [0, 0, 1e-3], [1, 0, 0], st, ion2, mc)
    ratio = a2 / a1
    return a1 > 0 and abs(ratio - 4) < 1e-9, f"alpha {a1:.4g} +- {e1:.2g}, Z^2 ratio {ratio:.12g}"


def run_self_test(quick: bool = False, verbose: bool = True) -> bool:
    """Run every check, print one line each, return True if all pass."""
    rng = np.random.default_rng(2024)
    checks = [
        ("clifford algebra", lambda: _clifford()),
        ("gamma traces", lambda: _traces(rng)),
        ("fermi identities", lambda: _fermi(rng, 200 if quick else 2000)),
        ("spin sums", lambda: _spin_sums(rng, 20 if quick else 100)),
        ("projector shift symmetry", lambda: _projector_shift(rng)),
        ("quadrature kernels", _quadrature),
        ("rpa response", lambda: _response(quick)),
        ("absorption", lambda: _absorption(quick)),
    ]
    all_ok = True
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            ok, msg = fn()
        except Exception as exc:  # report and keep going
            ok, msg = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'} {name}: {msg} ({time.perf_counter() - t0:.2f}s)")
    return all_ok
