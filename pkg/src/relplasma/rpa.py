"""RPA susceptibilities and dielectric functions of a relativistic pair plasma.

The susceptibility is reduced to a 2D integral over ``p = |p|`` and
``u = cos(p, k)``. At fixed p the angular integral is carried out in the
variable ``x = E_{p-k}`` (``du = -x dx / (p k)``), in which every term is a
quartic polynomial over a simple pole. Real parts are principal values
with the poles split off analytically; imaginary parts follow from the
delta-function roots in closed form. Only the outer p integral is
adaptive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .kinematics import (
    PlasmaState,
    combined_distribution,
    combined_distribution_derivative,
)
from .quadrature import QuadratureError, integrate_adaptive

_GL_Z, _GL_W = np.polynomial.legendre.leggauss(24)


class PoleError(ArithmeticError):
    """A dielectric conversion hit a vanishing denominator (a normal mode)."""


@dataclass(frozen=True)
class WavePoint:
    """Wavevector magnitude ``k`` (along z) and frequency ``omega``."""

    k: float
    omega: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"k must be > 0, got {self.k}")
        if not math.isfinite(self.omega):
            raise ValueError("omega must be finite")


@dataclass(frozen=True)
class ResponsePoint:
    wave: WavePoint
    chi_l: complex
    chi_t: complex
    eps_l: complex
    eps_t: complex
    quad_error: float
    chi_00: complex | None = None
    flags: tuple = field(default_factory=tuple)


def lambda_projectors(p: float, u: float, wave: WavePoint, state: PlasmaState):
    """Longitudinal and transverse projector values at ``(p, u)``.

    Returns ``(lam_minus_l, lam_plus_l, lam_minus_t, lam_plus_t)`` with
    ``Lambda_-+ = 1 -+ X / (E_p E_{p-k})`` and
    ``X_l = E_p^2 + p k u - 2 p^2 u^2``, ``X_t = m^2 - p k u + p^2 u^2``.
    """
    k, m = wave.k, state.mass
    E = math.sqrt(p * p + m * m)
    x = math.sqrt(p * p - 2.0 * p * k * u + k * k + m * m)
    pku, pu2 = p * k * u, (p * u) ** 2
    xl = E * E + pku - 2.0 * pu2
    xt = m * m - pku + pu2
    r = 1.0 / (E * x)
    return 1.0 - xl * r, 1.0 + xl * r, 1.0 - xt * r, 1.0 + xt * r


def density_projectors(p: float, u: float, wave: WavePoint, state: PlasmaState):
    """Projectors of the charge-density (00) component, ``(lam_minus, lam_plus)``.

    ``Lambda_-+ = 1 -+ X_0 / (E_p E_{p-k})`` with ``X_0 = -(E_p^2 - p k u)``.
    """
    k, m = wave.k, state.mass
    E = math.sqrt(p * p + m * m)
    x = math.sqrt(p * p - 2.0 * p * k * u + k * k + m * m)
    x0 = -(E * E - p * k * u)
    return 1.0 - x0 / (E * x), 1.0 + x0 / (E * x)


# --- inner (angular) integral -------------------------------------------------

def _pmul(a, b):
    out = [0.0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _padd(*polys):
    n = max(len(q) for q in polys)
    out = [0.0] * n
    for q in polys:
        for i, c in enumerate(q):
            out[i] += c
    return out


def _pscale(a, s):
    return [s * c for c in a]


def _peval(a, z):
    acc = 0.0
    for c in reversed(a):
        acc = acc * z + c
    return acc


def _pv_over_pole(P, zc):
    """``PV int_{-1}^{1} P(z) / (z - zc) dz`` for a real polynomial P."""
    if abs(zc) > 2.0:
        # pole well outside: smooth integrand, Gauss-Legendre is exact enough
        return float(np.dot(_GL_W, np.polyval(P[::-1], _GL_Z) / (_GL_Z - zc)))
    # synthetic division P(z) = Q(z)(z - zc) + P(zc)
    n = len(P) - 1
    q = [0.0] * n
    acc = 0.0
    for i in range(n, 0, -1):
        acc = acc * zc + P[i]
        q[i - 1] = acc
    rem = acc * zc + P[0]
    integral_q = sum(c * 2.0 / (i + 1) for i, c in enumerate(q) if i % 2 == 0)
    num, den = abs(1.0 - zc), abs(-1.0 - zc)
    log_term = math.log(max(num, 1e-300) / max(den, 1e-300))
    return integral_q + rem * log_term


class _Shell:
    """Polynomials of the angular integrand at fixed p (variable z in [-1, 1])."""

    __slots__ = ("E", "a", "b", "xm", "h", "pk", "poly")

    def __init__(self, p, k, m, kind):
        E = math.sqrt(p * p + m * m)
        a = math.sqrt((p - k) ** 2 + m * m)
        b = math.sqrt((p + k) ** 2 + m * m)
        xm, h = 0.5 * (a + b), 0.5 * (b - a)
        self.E, self.a, self.b, self.xm, self.h, self.pk = E, a, b, xm, h, p * k
        s_minus_xm2 = (p * p + k * k + m * m) - xm * xm
        # w = (s - x^2)/k as a polynomial in z, x = xm + h z
        w = [s_minus_xm2 / k, -2.0 * xm * h / k, -h * h / k]
        w2 = _pmul(w, w)
        if kind == "l":
            X = _padd([E * E], _pscale(w, 0.5 * k), _pscale(w2, -0.5))
        elif kind == "t":
            X = _padd([m * m], _pscale(w, -0.5 * k), _pscale(w2, 0.25))
        elif kind == "0":
            X = _padd([-E * E], _pscale(w, 0.5 * k))
        else:
            raise ValueError(f"unknown component {kind!r}")
        xpoly = [xm, h]
        inv = 1.0 / (p * k)
        self.poly = {
            -1: _pscale(_padd(xpoly, _pscale(X, -1.0 / E)), inv),
            +1: _pscale(_padd(xpoly, _pscale(X, 1.0 / E)), inv),
        }

    def z(self, x):
        return (x - self.xm) / self.h

    def pv(self, sign, c):
        return _pv_over_pole(self.poly[sign], self.z(c))

    def value_at(self, sign, x):
        """``x Lambda / (p k)`` at ``x`` if x lies on the shell, else 0."""
        if self.a <= x <= self.b:
            return _peval(self.poly[sign], self.z(x))
        return 0.0


def _inner_real(p, wave, state, kind, intraband=True, magnitude=False):
    """Angular PV integral at fixed p; ``magnitude`` sums |terms| instead."""
    k, m, w = wave.k, state.mass, abs(wave.omega)
    sh = _Shell(p, k, m, kind)
    if sh.h <= 0.0:
        return 0.0
    E = sh.E
    terms = [sh.pv(+1, w - E), sh.pv(+1, -E - w)]
    if intraband:
        terms += [-sh.pv(-1, E - w), -sh.pv(-1, E + w)]
    if magnitude:
        return 0.5 * sum(abs(t) for t in terms)
    return 0.5 * sum(terms)


def _inner_imag(p, wave, state, kind, intraband=True, magnitude=False):
    k, m, w = wave.k, state.mass, abs(wave.omega)
    if w == 0.0:
        return 0.0
    sh = _Shell(p, k, m, kind)
    if sh.h <= 0.0:
        return 0.0
    E = sh.E
    terms = [sh.value_at(+1, w - E)]
    if intraband:
        terms += [sh.value_at(-1, E - w), -sh.value_at(-1, E + w)]
    if magnitude:
        return 0.5 * math.pi * sum(abs(t) for t in terms)
    val = sum(terms)
    return 0.5 * math.pi * val * math.copysign(1.0, wave.omega)


# --- outer (radial) integral --------------------------------------------------

def _momentum_cutoff(state: PlasmaState) -> float:
    """p beyond which F(E_p) is below e^-45 of its value at the band edge."""
    m = state.mass
    e_top = max(abs(state.mu), m) + 45.0 / state.beta
    return math.sqrt(e_top * e_top - m * m)


def _breakpoints(wave: WavePoint, mass: float, pmax: float, intraband: bool,
                 extra=()):
    """Momenta where a pole crosses an end of the angular interval."""
    k, w, m = wave.k, abs(wave.omega), mass
    grid = np.unique(np.concatenate([
        np.linspace(0.0, pmax, 1200),
        np.geomspace(min(1e-6, k * 1e-3), pmax, 600),
    ]))
    grid = grid[grid > 0]

    def shell(p):
        E = np.sqrt(p * p + m * m)
        return E, np.sqrt((p - k) ** 2 + m * m), np.sqrt((p + k) ** 2 + m * m)

    poles = [lambda E: w - E]
    if intraband:
        poles += [lambda E: E - w, lambda E: E + w]
    pts = set(float(x) for x in extra if 0 < x < pmax)
    if k < pmax:
        pts.add(k)
    for pole in poles:
        for end in (1, 2):
            def g(p, pole=pole, end=end):
                s = shell(p)
                return pole(s[0]) - s[end]
            vals = g(grid)
            idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
            for i in idx:
                pts.add(float(optimize.brentq(g, grid[i], grid[i + 1], xtol=1e-16,
                                              rtol=1e-15)))
            pts.update(float(grid[i]) for i in np.nonzero(vals == 0)[0])
    return sorted(pts)


def _radial(inner, weight, wave, state, pmax, tol, intraband, extra=()):
    """``int_0^pmax p^2 weight(E_p) inner(p) dp``; ``inner(p, magnitude)``."""
    pts = _breakpoints(wave, state.mass, pmax, intraband, extra)
    m = state.mass

    def f(p):
        return p * p * weight(math.sqrt(p * p + m * m)) * inner(p, False)

    def fabs(p):
        return abs(p * p * weight(math.sqrt(p * p + m * m)) * inner(p, True))

    inner_pts = [p for p in pts if 1e-14 * pmax < p < pmax * (1 - 1e-14)]
    # absolute floor from a coarse estimate of int |f|, for cancelling integrals
    edges = np.array([0.0] + inner_pts + [pmax])
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None] + 0.5 * np.diff(edges)[:, None] * _GL_Z
    absf = np.vectorize(fabs)(mid) @ _GL_W * 0.5 * np.diff(edges)
    scale = float(np.sum(absf))
    if scale == 0.0:
        return 0.0, 0.0
    r = integrate_adaptive(f, 0.0, pmax, tol=tol, tol_abs=tol * scale, points=inner_pts,
                           limit=max(200, 50 * len(inner_pts)))
    return r.value, r.abs_error


def _matter_part(wave, state, tol, kind, part):
    if combined_distribution(state.mass, state) == 0.0:
        return 0.0, 0.0
    pmax = _momentum_cutoff(state)
    extra = []
    if abs(state.mu) > state.mass:
        extra.append(math.sqrt(state.mu**2 - state.mass**2))
    inner_fn = _inner_real if part == "real" else _inner_imag

    def weight(E):
        return combined_distribution(E, state)

    val, err = _radial(lambda p, mag: inner_fn(p, wave, state, kind, True, mag),
                       weight, wave, state, pmax, tol, True, extra)
    pref = state.e2 / (4.0 * math.pi**2)
    return pref * val, pref * err


def _matter_component(wave, state, tol, kind):
    re, e1 = _matter_part(wave, state, tol, kind, "real")
    im, e2 = _matter_part(wave, state, tol, kind, "imag")
    return complex(re, im), e1 + e2


def chi_matter_part(wave: WavePoint, state: PlasmaState, component: str = "l",
                    part: str = "imag", tol: float = 1e-8) -> float:
    """One real number: the real or imaginary part of a single thermal component.

    ``component`` is ``"l"``, ``"t"`` or ``"0"`` (charge density); ``part`` is
    ``"real"`` or ``"imag"``. Cheaper than :func:`chi_rpa_matter` when only
    one of the four numbers is needed (dispersion scans, Hilbert transforms).
    """
    if component not in ("l", "t", "0"):
        raise ValueError("component must be 'l', 't' or '0'")
    if part not in ("real", "imag"):
        raise ValueError("part must be 'real' or 'imag'")
    return _matter_part(wave, state, tol, component, part)[0]


def chi_rpa_matter(wave: WavePoint, state: PlasmaState, tol: float = 1e-8,
                   return_error: bool = False):
    """Thermal (distribution-weighted) part of ``(chi_l, chi_t)``.

    Principal-value real parts and delta-shell imaginary parts, retarded
    continuation ``omega -> omega + i0`` so ``chi(-omega) = conj chi(omega)``.
    Raises :class:`QuadratureError` if the radial quadrature fails.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    cl, el = _matter_component(wave, state, tol, "l")
    ct, et = _matter_component(wave, state, tol, "t")
    if return_error:
        return cl, ct, el + et
    return cl, ct


def chi_density_matter(wave: WavePoint, state: PlasmaState, tol: float = 1e-8,
                       return_error: bool = False):
    """Charge-density component ``chi_00`` of the thermal susceptibility.

    Finite at ``omega = 0`` where ``chi_l`` vanishes; for ``omega != 0``
    current conservation gives ``chi_00 = (k^2/omega^2) chi_l``.
    """
    c, e = _matter_component(wave, state, tol, "0")
    return (c, e) if return_error else c


def chi_vacuum(wave: WavePoint, state: PlasmaState, cutoff: float,
               tol: float = 1e-8, return_error: bool = False):
    """Cutoff-regularized, unrenormalized vacuum term ``(chi_l, chi_t)``.

    Pair (interband) terms only, with the distribution weight replaced by
    -2 and ``|p| < cutoff``. Diverges with the cutoff.
    """
    m, k, w = state.mass, wave.k, abs(wave.omega)
    if not cutoff > 10.0 * max(m, k, w):
        raise ValueError("cutoff must exceed 10 max(m, k, |omega|)")
    out, errs = [], 0.0
    for kind in ("l", "t"):
        re, e1 = _radial(lambda p, mag: _inner_real(p, wave, state, kind, False, mag),
                         lambda E: -2.0, wave, state, cutoff, tol, False)
        im, e2 = _radial(lambda p, mag: _inner_imag(p, wave, state, kind, False, mag),
                         lambda E: -2.0, wave, state, cutoff, tol, False)
        pref = state.e2 / (4.0 * math.pi**2)
        out.append(pref * complex(re, im))
        errs += pref * (e1 + e2)
    if return_error:
        return out[0], out[1], errs
    return out[0], out[1]


def plasma_frequency_squared(state: PlasmaState, tol: float = 1e-11) -> float:
    """Long-wavelength limit of ``chi_t``: ``e^2 int F (1 - v^2/3) / E``."""
    m = state.mass
    if combined_distribution(m, state) == 0.0:
        return 0.0
    pmax = _momentum_cutoff(state)

    def f(p):
        E = math.sqrt(p * p + m * m)
        return p * p * combined_distribution(E, state) / E * (1.0 - p * p / (3 * E * E))

    pts = [math.sqrt(state.mu**2 - m * m)] if abs(state.mu) > m else None
    r = integrate_adaptive(f, 0.0, pmax, tol=tol, points=pts)
    return state.e2 * r.value / (2.0 * math.pi**2)


def debye_wavenumber_squared(state: PlasmaState, tol: float = 1e-11) -> float:
    """``-e^2 int dF/dE d^3p/(2 pi)^3``, the static k -> 0 screening strength."""
    m = state.mass
    pmax = _momentum_cutoff(state)

    def f(p):
        E = math.sqrt(p * p + m * m)
        return -p * p * combined_distribution_derivative(E, state)

    pts = [math.sqrt(state.mu**2 - m * m)] if abs(state.mu) > m else None
    r = integrate_adaptive(f, 0.0, pmax, tol=tol, points=pts)
    return state.e2 * r.value / (2.0 * math.pi**2)


# --- dielectric functions -----------------------------------------------------

CONVENTIONS = ("rpa", "inverse")


def _check_pole(den, what):
    if abs(den) < 1e-14:
        raise PoleError(f"{what} denominator vanishes (normal-mode condition)")


def dielectric_longitudinal(chi_l: complex, wave: WavePoint, state: PlasmaState,
                            convention: str = "rpa", chi_00: complex | None = None) -> complex:
    """Longitudinal dielectric function from ``chi_l``.

    ``convention="rpa"`` (default): ``eps_l = 1 - chi_l / omega^2``, which
    equals ``1 - chi_00 / k^2``; at ``omega = 0`` the density component
    ``chi_00`` must be supplied. ``convention="inverse"``:
    ``eps_l = 1 / (1 - e^2 chi_l / k^2)``.
    """
    if convention == "rpa":
        if wave.omega == 0.0:
            if chi_00 is None:
                raise ValueError("omega = 0 needs the density component chi_00")
            return 1.0 - complex(chi_00) / wave.k**2
        return 1.0 - complex(chi_l) / wave.omega**2
    if convention == "inverse":
        den = 1.0 - state.e2 * complex(chi_l) / wave.k**2
        _check_pole(den, "longitudinal")
        return 1.0 / den
    raise ValueError(f"convention must be one of {CONVENTIONS}")


def dielectric_transverse(chi_t: complex, wave: WavePoint, state: PlasmaState,
                          convention: str = "rpa") -> complex:
    """Transverse dielectric function from ``chi_t`` (requires omega != 0).

    ``convention="rpa"``: ``eps_t = 1 - chi_t / omega^2``.
    ``convention="inverse"``: with ``a = k^2/omega^2`` and
    ``X = e^2 chi_t / (k^2 (1 - a))``, ``eps_t = (1 - X a) / (1 - X)``.
    """
    w = wave.omega
    if w == 0.0:
        raise ValueError("transverse dielectric function needs omega != 0")
    if convention == "rpa":
        return 1.0 - complex(chi_t) / w**2
    if convention == "inverse":
        a = wave.k**2 / w**2
        _check_pole(1.0 - a, "light-cone")
        X = state.e2 * complex(chi_t) / (wave.k**2 * (1.0 - a))
        _check_pole(1.0 - X, "transverse")
        return (1.0 - X * a) / (1.0 - X)
    raise ValueError(f"convention must be one of {CONVENTIONS}")


def chi_from_dielectric_longitudinal(eps_l: complex, wave: WavePoint, state: PlasmaState,
                                     convention: str = "rpa") -> complex:
    if convention == "rpa":
        if wave.omega == 0.0:
            raise ValueError("chi_l is identically zero at omega = 0")
        return (1.0 - complex(eps_l)) * wave.omega**2
    if convention == "inverse":
        _check_pole(eps_l, "longitudinal")
        return wave.k**2 / state.e2 * (eps_l - 1.0) / eps_l
    raise ValueError(f"convention must be one of {CONVENTIONS}")


def chi_from_dielectric_transverse(eps_t: complex, wave: WavePoint, state: PlasmaState,
                                   convention: str = "rpa") -> complex:
    w = wave.omega
    if w == 0.0:
        raise ValueError("transverse relation needs omega != 0")
    if convention == "rpa":
        return (1.0 - complex(eps_t)) * w**2
    if convention == "inverse":
        a = wave.k**2 / w**2
        _check_pole(eps_t - a, "transverse")
        return wave.k**2 / state.e2 * (1.0 - a) * (eps_t - 1.0) / (eps_t - a)
    raise ValueError(f"convention must be one of {CONVENTIONS}")


# --- tensor form --------------------------------------------------------------

def reconstruct_tensor(chi_l: complex, chi_t: complex, wave: WavePoint) -> np.ndarray:
    """``chi_{mu nu}`` (4x4, k along z) from its longitudinal and transverse parts.

    ``chi_{0i} = chi_{i0} = -(k_i / omega) chi_l``, ``chi_00 = (k^2/omega^2) chi_l``,
    ``chi_ij = khat_i khat_j chi_l + (delta_ij - khat_i khat_j) chi_t``;
    spatial components are those of the ordinary 3-vector k.
    """
    if wave.omega == 0.0:
        raise ValueError("tensor reconstruction needs omega != 0")
    kvec = np.array([0.0, 0.0, wave.k])
    khat = kvec / wave.k
    out = np.zeros((4, 4), dtype=complex)
    out[0, 0] = (wave.k / wave.omega) ** 2 * chi_l
    out[0, 1:] = out[1:, 0] = -(kvec / wave.omega) * chi_l
    P = np.outer(khat, khat)
    out[1:, 1:] = P * chi_l + (np.eye(3) - P) * chi_t
    return out


def project_transverse(tensor: np.ndarray, wave: WavePoint, pol_index: int) -> complex:
    """``eps^mu chi_{mu nu} eps^nu`` for the transverse polarization 1 (x) or 2 (y)."""
    if pol_index not in (1, 2):
        raise ValueError("pol_index must be 1 or 2")
    e = np.zeros(4)
    e[pol_index] = 1.0
    return complex(e @ np.asarray(tensor) @ e)


def project_longitudinal(tensor: np.ndarray, wave: WavePoint) -> complex:
    """``khat_i khat_j chi_ij``."""
    khat = np.array([0.0, 0.0, 1.0])
    return complex(khat @ np.asarray(tensor)[1:, 1:] @ khat)


# --- convenience --------------------------------------------------------------

def response_point(wave: WavePoint, state: PlasmaState, tol: float = 1e-8,
                   vacuum: bool = False, cutoff: float | None = None,
                   convention: str = "rpa") -> ResponsePoint:
    """Evaluate susceptibilities and dielectric functions at one (k, omega)."""
    cl, ct, err = chi_rpa_matter(wave, state, tol, return_error=True)
    flags = []
    if vacuum:
        if cutoff is None:
            raise ValueError("vacuum term needs a cutoff")
        vl, vt, ev = chi_vacuum(wave, state, cutoff, tol, return_error=True)
        cl, ct, err = cl + vl, ct + vt, err + ev
    elif abs(wave.omega) ** 2 >= wave.k**2 + 4 * state.mass**2:
        flags.append("above-pair-threshold-without-vacuum")
    chi00 = None
    if wave.omega == 0.0:
        chi00, e0 = chi_density_matter(wave, state, tol, return_error=True)
        err += e0
        eps_l = dielectric_longitudinal(cl, wave, state, convention, chi_00=chi00)
        eps_t = complex(math.nan, math.nan)
        flags.append("eps_t-undefined-at-omega-0")
    else:
        eps_l = dielectric_longitudinal(cl, wave, state, convention)
        eps_t = dielectric_transverse(ct, wave, state, convention)
    return ResponsePoint(wave, cl, ct, eps_l, eps_t, float(err), chi00, tuple(flags))


__all__ = [
    "WavePoint", "ResponsePoint", "PoleError", "QuadratureError",
    "lambda_projectors", "density_projectors", "chi_rpa_matter", "chi_matter_part", "chi_density_matter",
    "chi_vacuum", "plasma_frequency_squared", "debye_wavenumber_squared",
    "dielectric_longitudinal", "dielectric_transverse",
    "chi_from_dielectric_longitudinal", "chi_from_dielectric_transverse",
    "reconstruct_tensor", "project_transverse", "project_longitudinal",
    "response_point",
]
