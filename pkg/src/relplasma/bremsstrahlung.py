"""Inverse bremsstrahlung of electrons and positrons on static screened ions.

Born-level absorption with the two time orderings of photon absorption and
Coulomb scattering. The spin-summed squared transition matrix is evaluated
as a Dirac trace; the remaining phase-space integral over the initial
momentum and the final direction (the final momentum magnitude is fixed by
energy conservation) is done by deterministic stratified Monte Carlo.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gamma import GAMMA0, IDENTITY, dirac_bar, slash
from .kinematics import PlasmaState, fermi_antiparticle, fermi_particle
from .quadrature import MCConfig, MCError, mc_integrate, richardson_k2
from .rpa import plasma_frequency_squared

PARTICLE, ANTIPARTICLE = "particle", "antiparticle"
ELECTRON, POSITRON = "electron", "positron"


class ExtrapolationError(RuntimeError):
    """alpha(k) changed by more than the allowed fraction across k_seq."""

    def __init__(self, message, values):
        super().__init__(message)
        self.values = values


@dataclass(frozen=True)
class DiracSpinor:
    components: np.ndarray
    momentum: np.ndarray
    energy: float
    spin: int
    branch: str

    def bar(self) -> np.ndarray:
        return dirac_bar(self.components)


@dataclass(frozen=True)
class IonPotentialModel:
    """Static ion of charge ``Z e`` with screening wavenumber ``kappa``.

    ``n_ion`` multiplies the squared potential (independent scatterers).
    """

    Z: int = 1
    kappa: float = 0.0
    n_ion: float = 1.0

    def __post_init__(self):
        if int(self.Z) != self.Z or self.Z < 1:
            raise ValueError("Z must be an integer >= 1")
        if not self.kappa >= 0:
            raise ValueError("kappa must be >= 0")
        if not self.n_ion >= 0:
            raise ValueError("n_ion must be >= 0")


@dataclass(frozen=True)
class AbsorptionResult:
    omega: float
    alpha: float
    collision_nu_re: float
    k_values_used: tuple
    mc_error: float
    alpha_by_k: tuple = ()
    extrapolation_error: float = 0.0
    k_scaling_slope: float = float("nan")
    flags: tuple = field(default_factory=tuple)


def spinor(p, spin: int, branch: str, state: PlasmaState) -> DiracSpinor:
    """Dirac-representation spinor with spin quantized along z.

    Particles: ``u = sqrt((E+m)/2m) (xi, sigma.p xi/(E+m))`` with ``ubar u = 1``.
    Antiparticles: ``v = sqrt((E+m)/2m) (sigma.p eta/(E+m), eta)`` with
    ``vbar v = -1``.
    """
    if spin not in (1, -1):
        raise ValueError("spin must be +1 or -1")
    p = np.asarray(p, dtype=float)
    m = state.mass
    E = math.sqrt(float(p @ p) + m * m)
    sp = np.array([[p[2], p[0] - 1j * p[1]], [p[0] + 1j * p[1], -p[2]]])
    norm = math.sqrt((E + m) / (2.0 * m))
    if branch == PARTICLE:
        xi = np.array([1.0, 0.0]) if spin == 1 else np.array([0.0, 1.0])
        comp = norm * np.concatenate([xi, sp @ xi / (E + m)])
    elif branch == ANTIPARTICLE:
        eta = np.array([0.0, 1.0]) if spin == 1 else np.array([1.0, 0.0])
        comp = norm * np.concatenate([sp @ eta / (E + m), eta])
    else:
        raise ValueError(f"branch must be {PARTICLE!r} or {ANTIPARTICLE!r}")
    return DiracSpinor(comp.astype(complex), p, E, spin, branch)


def ion_potential(q, model: IonPotentialModel, state: PlasmaState):
    """Screened Coulomb potential ``Z e / (q^2 + kappa^2)`` (Heaviside-Lorentz)."""
    q = np.asarray(q, dtype=float)
    den = q * q + model.kappa**2
    if np.any(den == 0.0):
        raise ZeroDivisionError("ion potential is singular at q = 0 without screening")
    return model.Z * math.sqrt(state.e2) / den


def _four(E, p):
    p = np.asarray(p, dtype=float)
    E = np.asarray(E, dtype=float)
    return np.concatenate([E[..., None], p], axis=-1)


def _energy(p, m):
    return np.sqrt(np.sum(np.asarray(p) ** 2, axis=-1) + m * m)


def transition_matrix(p_i, p_f, k, pol, species: str, state: PlasmaState) -> np.ndarray:
    """The 4x4 Dirac matrix between the spinors of the transition amplitude.

    Works on single kinematic points or batches (leading axes). The photon
    four-vector is ``(E_f - E_i, k)``; energy denominators are on-shell
    energies of ``p_f - k`` and ``p_i + k``.
    """
    m = state.mass
    p_i = np.asarray(p_i, dtype=float)
    p_f = np.asarray(p_f, dtype=float)
    k = np.broadcast_to(np.asarray(k, dtype=float), p_i.shape)
    pol = np.broadcast_to(np.asarray(pol), p_i.shape)
    Ei, Ef = _energy(p_i, m), _energy(p_f, m)
    K = slash(_four(Ef - Ei, k))
    Pi, Pf = slash(_four(Ei, p_i)), slash(_four(Ef, p_f))
    e = slash(np.concatenate([np.zeros(pol.shape[:-1] + (1,)), pol], axis=-1))
    d_f = _energy(p_f - k, m)[..., None, None]
    d_i = _energy(p_i + k, m)[..., None, None]
    mI = m * IDENTITY
    if species == ELECTRON:
        return e @ (Pf - K + mI) @ GAMMA0 / d_f - GAMMA0 @ (Pi + K + mI) @ e / d_i
    if species == POSITRON:
        return GAMMA0 @ (Pf - K - mI) @ e / d_f - e @ (Pi + K - mI) @ GAMMA0 / d_i
    raise ValueError(f"species must be {ELECTRON!r} or {POSITRON!r}")


def transition_amplitude(p_i, s_i: int, p_f, s_f: int, k, pol, species: str,
                         state: PlasmaState) -> complex:
    """``eps^mu N_mu`` for one spin configuration.

    Electron: ``ubar(p_f) M u(p_i)``; positron: ``vbar(p_i) M v(p_f)``.
    ``pol`` need not be unit length but must be orthogonal to ``k``.
    """
    k = np.asarray(k, dtype=float)
    pol = np.asarray(pol)
    if not np.any(k):
        raise ValueError("k must be nonzero")
    if abs(np.dot(pol, k)) > 1e-12 * max(1.0, float(np.linalg.norm(pol) * np.linalg.norm(k))):
        raise ValueError("polarization must be orthogonal to k")
    M = transition_matrix(p_i, p_f, k, pol, species, state)
    if species == ELECTRON:
        ui = spinor(p_i, s_i, PARTICLE, state).components
        uf = spinor(p_f, s_f, PARTICLE, state)
        return complex(uf.bar() @ M @ ui)
    vi = spinor(p_i, s_i, ANTIPARTICLE, state)
    vf = spinor(p_f, s_f, ANTIPARTICLE, state).components
    return complex(vi.bar() @ M @ vf)


def _bar_matrix(M):
    return GAMMA0 @ np.conj(np.swapaxes(M, -1, -2)) @ GAMMA0


def spin_summed_trace(p_i, p_f, k, pol, species: str, state: PlasmaState):
    """Spin-summed ``|eps.N|^2`` as a Dirac trace (batched).

    Electron: ``tr[(pf/ + m)/2m M (pi/ + m)/2m Mbar]``;
    positron: ``tr[M (pf/ - m)/2m Mbar (pi/ - m)/2m]``, ``Mbar = g0 M^+ g0``.
    """
    m = state.mass
    p_i = np.asarray(p_i, dtype=float)
    p_f = np.asarray(p_f, dtype=float)
    M = transition_matrix(p_i, p_f, k, pol, species, state)
    Mb = _bar_matrix(M)
    Pi = slash(_four(_energy(p_i, m), p_i))
    Pf = slash(_four(_energy(p_f, m), p_f))
    sgn = 1.0 if species == ELECTRON else -1.0
    A_i = (Pi + sgn * m * IDENTITY) / (2 * m)
    A_f = (Pf + sgn * m * IDENTITY) / (2 * m)
    if species == ELECTRON:
        prod = A_f @ M @ A_i @ Mb
    else:
        prod = M @ A_f @ Mb @ A_i
    return np.real(np.trace(prod, axis1=-2, axis2=-1))


def spin_summed_explicit(p_i, p_f, k, pol, species: str, state: PlasmaState) -> float:
    """Spin-summed ``|eps.N|^2`` by enumerating the four spin pairs."""
    return float(sum(
        abs(transition_amplitude(p_i, si, p_f, sf, k, pol, species, state)) ** 2
        for si in (1, -1) for sf in (1, -1)
    ))


# --- phase-space sampling -----------------------------------------------------

def _orthonormal_frame(n):
    """Two unit vectors completing ``n`` (batched, rows) to a right-handed frame."""
    helper = np.where(np.abs(n[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
    e1 = np.cross(helper, n)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(n, e1)
    return e1, e2


class _RadialProposal:
    """Piecewise-linear inverse CDF for |p_i| following the occupation weight."""

    def __init__(self, state: PlasmaState, omega: float, n: int = 4000):
        m = state.mass
        e_top = max(abs(state.mu), m) + 45.0 / state.beta
        pmax = math.sqrt(e_top**2 - m * m)
        grid = np.linspace(0.0, pmax, n + 1)
        E = np.sqrt(grid**2 + m * m)
        w = (fermi_particle(E, state) * (1 - fermi_particle(E + omega, state))
             + fermi_antiparticle(E, state) * (1 - fermi_antiparticle(E + omega, state)))
        g = grid**2 * w
        g = g + 1e-6 * g.max()
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(grid))])
        self.grid, self.cdf = grid, cdf / cdf[-1]
        self.slope = np.diff(grid) / np.diff(self.cdf)

    def __call__(self, u):
        p = np.interp(u, self.cdf, self.grid)
        j = np.clip(np.searchsorted(self.cdf, u, side="right") - 1, 0, len(self.slope) - 1)
        return p, self.slope[j]


def _debug_enabled():
    return os.environ.get("RELPLASMA_DEBUG", "") not in ("", "0")


def _integrand_factory(omega, kvec, pol, state, ion, kappa_imp):
    m, beta = state.mass, state.beta
    radial = _RadialProposal(state, omega)
    debug = _debug_enabled()

    def f(u):
        pi_mag, jac_r = radial(u[:, 0])
        ci = 2.0 * u[:, 1] - 1.0
        phi_i = 2.0 * math.pi * u[:, 2]
        si = np.sqrt(np.clip(1.0 - ci * ci, 0.0, None))
        ni = np.stack([si * np.cos(phi_i), si * np.sin(phi_i), ci], axis=1)
        Ei = np.sqrt(pi_mag**2 + m * m)
        Ef = Ei + omega
        pf_mag = np.sqrt(Ef * Ef - m * m)
        # final direction relative to p_i, sampled ~ 1/(A - B c)
        A = pi_mag**2 + pf_mag**2 + kappa_imp**2
        B = 2.0 * pi_mag * pf_mag
        r = (A - B) / (A + B)
        c = (A - (A + B) * r ** u[:, 3]) / B
        c = np.clip(c, -1.0, 1.0)
        pdf_c = -1.0 / (np.log(r) * (A - B * c) / B)
        phi_f = 2.0 * math.pi * u[:, 4]
        e1, e2 = _orthonormal_frame(ni)
        sc = np.sqrt(np.clip(1.0 - c * c, 0.0, None))
        nf = (c[:, None] * ni + sc[:, None] * (np.cos(phi_f)[:, None] * e1
                                               + np.sin(phi_f)[:, None] * e2))
        p_i = pi_mag[:, None] * ni
        p_f = pf_mag[:, None] * nf
        q = p_f - p_i - kvec
        a0 = ion_potential(np.linalg.norm(q, axis=1), ion, state)
        w_e = fermi_particle(Ei, state) - fermi_particle(Ef, state)
        w_p = fermi_antiparticle(Ei, state) - fermi_antiparticle(Ef, state)
        if debug:
            fi, ff = fermi_particle(Ei, state), fermi_particle(Ef, state)
            lhs = ff * (1 - fi) * np.expm1(beta * omega)
            assert np.allclose(lhs, w_e, rtol=1e-9, atol=1e-300)
        S_e = spin_summed_trace(p_i, p_f, kvec, pol, ELECTRON, state)
        S_p = spin_summed_trace(p_i, p_f, kvec, pol, POSITRON, state)
        # measure: d^3p_i (4 pi * 2 pi over unit square) and dOmega_f / pdf
        jac = jac_r * pi_mag**2 * (4.0 * math.pi) * (2.0 * math.pi) / pdf_c
        return jac * (pf_mag / Ei) * a0**2 * (S_e * w_e + S_p * w_p)

    return f


def _phase_space_integral(omega, kvec, pol, state, ion, mc, threads=None):
    """J = int d^3p_i dOmega_f (p_f/E_i) A0^2 sum_species S (n_i - n_f)."""
    m = state.mass
    if fermi_particle(m, state) == 0.0 and fermi_antiparticle(m, state) == 0.0:
        return 0.0, 0.0
    kvec = np.asarray(kvec, dtype=float)
    pol = np.asarray(pol, dtype=float)
    kappa_imp = max(ion.kappa, 1e-3 * math.sqrt(m / state.beta))
    f = _integrand_factory(omega, kvec, pol, state, ion, kappa_imp)
    res = mc_integrate(f, [0.0] * 5, [1.0] * 5, mc, threads=threads, check_target=False)
    return res.value, res.abs_error


def _alpha_prefactor(omega, state, ion):
    m = state.mass
    return math.pi * state.e2**2 * m * m * ion.n_ion / (4.0 * omega**3 * (2 * math.pi) ** 6)


def _check_mc(value, err, mc):
    if err > mc.target_rel_error * abs(value) and err > 0:
        raise MCError(f"MC relative error {err / abs(value) if value else math.inf:.3g}"
                      f" above target {mc.target_rel_error}", value, err)


def force_force_re(omega: float, k, pol, state: PlasmaState, ion: IonPotentialModel,
                   mc: MCConfig, threads: int | None = None, return_error: bool = False,
                   check: bool = True):
    """Real part of the force-force correlation of the transverse current.

    ``Re<jdot; jdot> = -(e^2 m^2 pi n_ion / (4 omega beta (2 pi)^6)) J``;
    negative for absorption. Raises :class:`MCError` above the MC target.
    """
    if not omega > 0:
        raise ValueError("omega must be > 0")
    k = np.asarray(k, dtype=float)
    if not np.linalg.norm(k) > 0:
        raise ValueError("|k| must be > 0")
    J, dJ = _phase_space_integral(omega, k, pol, state, ion, mc, threads)
    m = state.mass
    pref = state.e2 * m * m * math.pi * ion.n_ion / (4.0 * omega * state.beta
                                                      * (2 * math.pi) ** 6)
    val, err = -pref * J, pref * dJ
    if check:
        _check_mc(val, err, mc)
    return (val, err) if return_error else val


def absorption_at_k(omega: float, k, pol, state: PlasmaState, ion: IonPotentialModel,
                    mc: MCConfig, threads: int | None = None):
    """``alpha = -beta (e^2/omega^2) Re<jdot; jdot>`` at one finite k; returns (alpha, err)."""
    J, dJ = _phase_space_integral(omega, k, pol, state, ion, mc, threads)
    c = _alpha_prefactor(omega, state, ion)
    return c * J, c * dJ


def fit_k_slope(ks: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log|v| against log k."""
    ks = np.asarray(ks, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    if len(ks) < 2 or np.any(v == 0):
        return float("nan")
    return float(np.polyfit(np.log(ks), np.log(v), 1)[0])


def absorption_coefficient(omega: float, state: PlasmaState, ion: IonPotentialModel,
                           mc: MCConfig, k_seq: Sequence[float] = (1e-2, 5e-3),
                           k_dir=(0.0, 0.0, 1.0), pol=(1.0, 0.0, 0.0),
                           threads: int | None = None, max_k_change: float = 0.2,
                           wpl2: float | None = None) -> AbsorptionResult:
    """Inverse-bremsstrahlung absorption coefficient extrapolated to k -> 0.

    Every k in ``k_seq`` reuses the same random stream, so differences
    between the alpha(k) values reflect the k dependence rather than noise.
    """
    if not omega > 0:
        raise ValueError("omega must be > 0")
    ks = [float(x) for x in k_seq]
    if len(ks) < 2 or any(b >= a for a, b in zip(ks, ks[1:])) or ks[-1] <= 0:
        raise ValueError("k_seq must hold >= 2 positive, strictly decreasing values")
    k_dir = np.asarray(k_dir, dtype=float)
    k_dir = k_dir / np.linalg.norm(k_dir)
    flags = []
    if omega >= 2.0 * state.mass:
        flags.append("RWA-questionable")
    vals, errs = [], []
    for k in ks:
        a, e = absorption_at_k(omega, k * k_dir, pol, state, ion, mc, threads)
        vals.append(a)
        errs.append(e)
    if all(v == 0.0 for v in vals):
        return AbsorptionResult(omega, 0.0, 0.0, tuple(ks), 0.0, tuple(vals), 0.0,
                                float("nan"), tuple(flags))
    spread = abs(vals[0] - vals[-1]) / abs(vals[-1])
    if spread > max_k_change:
        raise ExtrapolationError(
            f"alpha(k) varies by {spread:.3g} across k_seq", list(zip(ks, vals)))
    alpha0, extrap_err = richardson_k2(list(zip(ks, vals)))
    mc_err = errs[-1]
    _check_mc(alpha0, mc_err, mc)
    # Re<jdot;jdot> is alpha times a k-independent factor, so the slope is shared
    slope = fit_k_slope(ks, vals)
    if wpl2 is None:
        wpl2 = plasma_frequency_squared(state)
    nu = alpha0 * omega**2 / wpl2 if wpl2 > 0 else float("nan")
    return AbsorptionResult(omega, float(alpha0), float(nu), tuple(ks), float(mc_err),
                            tuple(vals), float(extrap_err), slope, tuple(flags))

