"""On-shell kinematics and Fermi-Dirac occupations of a pair plasma.

Natural units (hbar = c = 1). Energies are in the same unit as
``PlasmaState.mass`` (the electron mass by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import expit

ALPHA_FS = 7.2973525693e-3
E2_HEAVISIDE_LORENTZ = 4.0 * math.pi * ALPHA_FS


@dataclass(frozen=True)
class PlasmaState:
    """Thermodynamic state of an electron-positron plasma.

    Attributes
    ----------
    beta : inverse temperature, 1/energy
    mu : chemical potential (negative values favour positrons)
    mass : fermion mass, sets the energy scale
    e2 : coupling e^2 = 4 pi alpha (Heaviside-Lorentz)
    """

    beta: float
    mu: float = 0.0
    mass: float = 1.0
    e2: float = E2_HEAVISIDE_LORENTZ

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.mass > 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if not self.e2 > 0:
            raise ValueError(f"e2 must be > 0, got {self.e2}")

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta

    def with_mu(self, mu: float) -> "PlasmaState":
        return PlasmaState(self.beta, mu, self.mass, self.e2)


def on_shell_energy(p, mass: float):
    """Return ``+sqrt(|p|^2 + m^2)``; ``p`` is a 3-vector or (..., 3) array."""
    p = np.asarray(p, dtype=float)
    return np.sqrt(np.sum(p * p, axis=-1) + mass * mass)


def _logistic_of_minus(x):
    # 1 / (exp(x) + 1) without overflow
    return expit(-np.asarray(x, dtype=float))


def fermi_particle(E, state: PlasmaState):
    """Particle occupation ``1 / (exp(beta (E - mu)) + 1)``."""
    return _logistic_of_minus(state.beta * (np.asarray(E, dtype=float) - state.mu))


def fermi_antiparticle(E, state: PlasmaState):
    """Antiparticle occupation ``1 / (exp(beta (E + mu)) + 1)``."""
    return _logistic_of_minus(state.beta * (np.asarray(E, dtype=float) + state.mu))


def combined_distribution(E, state: PlasmaState):
    """``F(E) = 2 (f(E) + fbar(E))``, the spin-summed carrier weight."""
    return 2.0 * (fermi_particle(E, state) + fermi_antiparticle(E, state))


def combined_distribution_derivative(E, state: PlasmaState):
    """dF/dE, evaluated in the overflow-safe form ``-beta f (1 - f)``."""
    f = fermi_particle(E, state)
    fb = fermi_antiparticle(E, state)
    return -2.0 * state.beta * (f * (1.0 - f) + fb * (1.0 - fb))


def fermi_relation_residuals(E_a, E_b, state: PlasmaState) -> np.ndarray:
    """Residuals (lhs - rhs) of the four detailed-balance identities.

    ``E_a`` plays the role of E_p and ``E_b`` that of the shifted energy
    (E_{p+k} in the first and fourth relation, E_{p-k} in the second and
    third). The intraband relations use ``exp(+-beta (E_a - E_b))``, the pair
    relations ``exp(-+beta (E_a + E_b))``. Accepts arrays; the result has a
    leading axis of length 4.

    Products with the Boltzmann factor are formed in log space and in
    extended precision, since ``exp(beta dE)`` amplifies rounding of
    ``beta dE ~ 1e4`` by that same factor.
    """
    return fermi_relation_residuals_batch(E_a, E_b, state.beta, state.mu)


def fermi_relation_residuals_batch(E_a, E_b, beta, mu) -> np.ndarray:
    """:func:`fermi_relation_residuals` with ``beta`` and ``mu`` broadcast as arrays."""
    ld = np.longdouble
    b, mu = np.asarray(beta, dtype=ld), np.asarray(mu, dtype=ld)
    if not np.all(b > 0):
        raise ValueError("beta must be > 0")
    a = np.asarray(E_a, dtype=ld)
    c = np.asarray(E_b, dtype=ld)

    def log_occ(x):
        # log(1 / (exp(x) + 1))
        return -np.logaddexp(ld(0), x)

    lf = lambda E: log_occ(b * (E - mu))  # noqa: E731
    l1f = lambda E: log_occ(-b * (E - mu))  # noqa: E731
    lfb = lambda E: log_occ(b * (E + mu))  # noqa: E731
    l1fb = lambda E: log_occ(-b * (E + mu))  # noqa: E731

    def weighted(lo, x):
        # occ * (exp(x) - 1)
        return np.exp(lo + x) - np.exp(lo)

    f_a, f_c = np.exp(lf(a)), np.exp(lf(c))
    fb_a, fb_c = np.exp(lfb(a)), np.exp(lfb(c))
    r1 = weighted(lfb(a) + l1fb(c), b * (a - c)) + (fb_a - fb_c)
    r2 = weighted(lf(c) + l1f(a), -b * (a - c)) - (f_a - f_c)
    r3 = weighted(l1f(a) + l1fb(c), -b * (a + c)) - (-1 + f_a + fb_c)
    r4 = weighted(lfb(a) + lf(c), b * (a + c)) - (1 - fb_a - f_c)
    return np.array([r1, r2, r3, r4], dtype=float)


def _momentum_upper(state: PlasmaState, shift: float = 0.0) -> float:
    """Momentum beyond which both occupations are below ~1e-17 of their peak."""
    m = state.mass
    e_top = max(abs(state.mu), m) + shift + 40.0 / state.beta
    return math.sqrt(max(e_top * e_top - m * m, (10.0 * m) ** 2 * 1e-6))


def _radial_moment(weight, state: PlasmaState) -> float:
    """``int d^3p/(2 pi)^3 weight(p)`` for an isotropic weight."""
    pmax = _momentum_upper(state)
    m = state.mass
    pts = []
    for e in (state.mu, -state.mu):
        if e > m:
            pts.append(math.sqrt(e * e - m * m))
    pts = sorted(p for p in pts if 0 < p < pmax)
    val, _ = integrate.quad(
        lambda p: p * p * weight(p), 0.0, pmax, points=pts or None, limit=400,
        epsabs=0.0, epsrel=1e-11,
    )
    return val / (2.0 * math.pi**2)


def net_density(state: PlasmaState) -> float:
    """Electron-minus-positron number density, ``2 int (f - fbar)``."""
    m = state.mass

    def w(p):
        E = math.sqrt(p * p + m * m)
        return 2.0 * (fermi_particle(E, state) - fermi_antiparticle(E, state))

    return _radial_moment(w, state)


def carrier_density(state: PlasmaState) -> float:
    """Total carrier density ``int F(E_p) d^3p/(2 pi)^3`` (electrons + positrons)."""
    m = state.mass
    return _radial_moment(
        lambda p: combined_distribution(math.sqrt(p * p + m * m), state), state
    )


def solve_mu(n_net: float, beta: float, mass: float = 1.0,
             e2: float = E2_HEAVISIDE_LORENTZ) -> float:
    """Chemical potential giving the requested net electron density."""
    if n_net == 0.0:
        return 0.0
    sign = 1.0 if n_net > 0 else -1.0

    def g(mu):
        return net_density(PlasmaState(beta, sign * mu, mass, e2)) * sign - abs(n_net)

    lo, hi = 0.0, mass
    while g(hi) < 0:
        lo, hi = hi, 2.0 * hi + 10.0 / beta
    return sign * optimize.brentq(g, lo, hi, xtol=1e-15 * max(hi, 1.0), rtol=1e-14)
