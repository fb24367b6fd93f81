"""Scan configuration: flat ``section.key = value`` files plus flag overrides.

Physical units are converted here and nowhere else: temperatures in keV
become ``beta`` in units of 1/m_e, densities in m^-3 become natural units
(reduced Compton wavelength cubed).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

M_E_KEV = 510.998950
COMPTON_LENGTH_M = 3.8615926796e-13

DEFAULTS = {
    "plasma.T_keV": None,
    "plasma.T": None,
    "plasma.mu": None,
    "plasma.n_e_m3": None,
    "plasma.n_e": None,
    "grid.k_min": 0.01,
    "grid.k_max": 0.1,
    "grid.n_k": 3,
    "grid.omega_min": 0.05,
    "grid.omega_max": 0.5,
    "grid.n_omega": 4,
    "grid.spacing": "linear",
    "grid.omegas": "0.01",
    "ion.Z": 1,
    "ion.kappa": "debye",
    "ion.n_ion": "neutral",
    "numerics.tol": 1e-6,
    "numerics.vacuum": False,
    "numerics.cutoff": 100.0,
    "numerics.convention": "rpa",
    "numerics.seed": 12345,
    "numerics.samples": 100000,
    "numerics.strata": 64,
    "numerics.target_rel_error": 1e-2,
    "numerics.k_seq": "0.001,0.0005",
    "threads": None,
}

_INT = {"grid.n_k", "grid.n_omega", "ion.Z", "numerics.seed", "numerics.samples",
        "numerics.strata", "threads"}
_BOOL = {"numerics.vacuum"}
_STR = {"grid.spacing", "numerics.convention", "grid.omegas", "numerics.k_seq",
        "ion.kappa", "ion.n_ion"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field} {message}")
        self.field = field


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "is not of the form key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(key, "is not a known configuration key")
        out[key] = value
    return out


def read_config_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _coerce(key, value):
    if value is None:
        return None
    if key in _BOOL:
        if isinstance(value, bool):
            return value
        v = str(value).strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(key, f"must be a boolean, got {value!r}")
    if key in _STR:
        return str(value).strip()
    try:
        if key in _INT:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        return float(value)
    except (TypeError, ValueError):
        kind = "an integer" if key in _INT else "a number"
        raise ConfigError(key, f"must be {kind}, got {value!r}") from None


def _float_list(key, text):
    try:
        vals = [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise ConfigError(key, f"must be a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(key, "must not be empty")
    return vals


@dataclass(frozen=True)
class ScanConfig:
    """Fully resolved scan settings (all in units of m_e)."""

    beta: float
    mu: float
    k_min: float
    k_max: float
    n_k: int
    omega_min: float
    omega_max: float
    n_omega: int
    spacing: str
    omegas: tuple
    Z: int
    kappa: float
    n_ion: float
    tol: float
    vacuum: bool
    cutoff: float
    convention: str
    seed: int
    samples: int
    strata: int
    target_rel_error: float
    k_seq: tuple
    threads: int
    resolved: tuple  # (key, value) pairs echoed into output headers

    def grid_axis(self, lo, hi, n):
        import numpy as np

        if n == 1:
            return [lo]
        if self.spacing == "log":
            return [float(x) for x in np.geomspace(lo, hi, n)]
        return [float(x) for x in np.linspace(lo, hi, n)]

    @property
    def k_values(self):
        return self.grid_axis(self.k_min, self.k_max, self.n_k)

    @property
    def omega_values(self):
        return self.grid_axis(self.omega_min, self.omega_max, self.n_omega)


def resolve(file_values: dict | None = None, overrides: dict | None = None,
            mode: str = "dielectric") -> ScanConfig:
    """Merge defaults, file values and flag overrides, then validate."""
    from .kinematics import PlasmaState, net_density, solve_mu
    from .rpa import debye_wavenumber_squared

    raw = dict(DEFAULTS)
    for src in (file_values or {}), (overrides or {}):
        for key, value in src.items():
            if key not in DEFAULTS:
                raise ConfigError(key, "is not a known configuration key")
            if value is not None:
                raw[key] = value
    v = {k: _coerce(k, x) for k, x in raw.items()}

    if v["threads"] is None:
        env = os.environ.get("PLASMA_THREADS")
        v["threads"] = _coerce("threads", env) if env else 1
    if v["threads"] < 1:
        raise ConfigError("threads", "must be >= 1")

    # temperature
    if v["plasma.T_keV"] is not None and v["plasma.T"] is not None:
        raise ConfigError("plasma.T", "conflicts with plasma.T_keV; give only one")
    if v["plasma.T_keV"] is not None:
        if not v["plasma.T_keV"] > 0:
            raise ConfigError("plasma.T_keV", "must be > 0")
        beta = M_E_KEV / v["plasma.T_keV"]
    elif v["plasma.T"] is not None:
        if not v["plasma.T"] > 0:
            raise ConfigError("plasma.T", "must be > 0")
        beta = 1.0 / v["plasma.T"]
    else:
        raise ConfigError("plasma.T_keV", "is required (or plasma.T in units of m)")

    # chemical potential, given or from a density
    dens = [k for k in ("plasma.mu", "plasma.n_e_m3", "plasma.n_e") if v[k] is not None]
    if len(dens) > 1:
        raise ConfigError(dens[1], f"conflicts with {dens[0]}; give only one")
    if v["plasma.n_e_m3"] is not None:
        if not v["plasma.n_e_m3"] >= 0:
            raise ConfigError("plasma.n_e_m3", "must be >= 0")
        mu = solve_mu(v["plasma.n_e_m3"] * COMPTON_LENGTH_M**3, beta)
    elif v["plasma.n_e"] is not None:
        if not v["plasma.n_e"] >= 0:
            raise ConfigError("plasma.n_e", "must be >= 0")
        mu = solve_mu(v["plasma.n_e"], beta)
    else:
        mu = v["plasma.mu"] if v["plasma.mu"] is not None else 0.0
    if not math.isfinite(mu):
        raise ConfigError("plasma.mu", "must be finite")
    state = PlasmaState(beta, mu)

    # grid
    if mode == "dielectric":
        for key in ("grid.k_min", "grid.k_max"):
            if not v[key] > 0:
                raise ConfigError(key, "must be > 0")
        if v["grid.k_max"] < v["grid.k_min"]:
            raise ConfigError("grid.k_max", "must be >= grid.k_min")
        if not v["grid.omega_min"] >= 0:
            raise ConfigError("grid.omega_min", "must be >= 0")
        if v["grid.omega_max"] < v["grid.omega_min"]:
            raise ConfigError("grid.omega_max", "must be >= grid.omega_min")
        for key in ("grid.n_k", "grid.n_omega"):
            if v[key] < 1:
                raise ConfigError(key, "must be >= 1")
        if v["grid.spacing"] not in ("linear", "log"):
            raise ConfigError("grid.spacing", "must be 'linear' or 'log'")
        if v["grid.spacing"] == "log" and v["grid.omega_min"] == 0 and v["grid.n_omega"] > 1:
            raise ConfigError("grid.omega_min", "must be > 0 for log spacing")
    omegas = tuple(_float_list("grid.omegas", v["grid.omegas"]))
    if mode == "absorption" and any(not w > 0 for w in omegas):
        raise ConfigError("grid.omegas", "must all be > 0")

    # ions
    if v["ion.Z"] < 1:
        raise ConfigError("ion.Z", "must be an integer >= 1")
    kappa_s, nion_s = v["ion.kappa"], v["ion.n_ion"]
    if kappa_s == "debye":
        kappa = math.sqrt(debye_wavenumber_squared(state))
    else:
        kappa = _coerce_float("ion.kappa", kappa_s)
        if not kappa >= 0:
            raise ConfigError("ion.kappa", "must be >= 0")
    if nion_s == "neutral":
        # charge neutrality against the net electron excess
        n_ion = abs(net_density(state)) / v["ion.Z"]
    else:
        n_ion = _coerce_float("ion.n_ion", nion_s)
        if not n_ion >= 0:
            raise ConfigError("ion.n_ion", "must be >= 0")

    # numerics
    if not v["numerics.tol"] > 0:
        raise ConfigError("numerics.tol", "must be > 0")
    if v["numerics.convention"] not in ("rpa", "inverse"):
        raise ConfigError("numerics.convention", "must be 'rpa' or 'inverse'")
    if v["numerics.samples"] < 1:
        raise ConfigError("numerics.samples", "must be >= 1")
    if not 1 <= v["numerics.strata"] <= v["numerics.samples"]:
        raise ConfigError("numerics.strata", "must be between 1 and numerics.samples")
    if not v["numerics.target_rel_error"] > 0:
        raise ConfigError("numerics.target_rel_error", "must be > 0")
    if not 0 <= v["numerics.seed"] < 2**64:
        raise ConfigError("numerics.seed", "must be a 64-bit unsigned integer")
    k_seq = tuple(_float_list("numerics.k_seq", v["numerics.k_seq"]))
    if len(k_seq) < 2 or any(b >= a for a, b in zip(k_seq, k_seq[1:])) or k_seq[-1] <= 0:
        raise ConfigError("numerics.k_seq", "must hold >= 2 positive, strictly decreasing values")
    if mode == "dielectric" and v["numerics.vacuum"]:
        lim = 10 * max(1.0, v["grid.k_max"], v["grid.omega_max"])
        if not v["numerics.cutoff"] > lim:
            raise ConfigError("numerics.cutoff", f"must exceed {lim:g} (10 max(m, k, omega))")

    resolved = dict(v)
    resolved.update({"beta": beta, "mu_resolved": mu, "kappa_resolved": kappa,
                     "n_ion_resolved": n_ion})
    resolved.pop("threads")  # thread count must not change the output bytes
    return ScanConfig(
        beta=beta, mu=mu,
        k_min=v["grid.k_min"], k_max=v["grid.k_max"], n_k=v["grid.n_k"],
        omega_min=v["grid.omega_min"], omega_max=v["grid.omega_max"],
        n_omega=v["grid.n_omega"], spacing=v["grid.spacing"], omegas=omegas,
        Z=v["ion.Z"], kappa=kappa, n_ion=n_ion,
        tol=v["numerics.tol"], vacuum=v["numerics.vacuum"], cutoff=v["numerics.cutoff"],
        convention=v["numerics.convention"], seed=v["numerics.seed"],
        samples=v["numerics.samples"], strata=v["numerics.strata"],
        target_rel_error=v["numerics.target_rel_error"], k_seq=k_seq,
        threads=v["threads"], resolved=tuple(sorted(resolved.items())),
    )


def _coerce_float(key, value):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"must be a number, got {value!r}") from None
