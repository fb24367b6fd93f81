"""Minkowski four-vectors and Dirac gamma matrices.

Metric signature is (+, -, -, -). Gamma matrices are in the Dirac
representation: ``gamma^0 = diag(1, 1, -1, -1)`` and
``gamma^i = [[0, sigma_i], [-sigma_i, 0]]``.
"""

from __future__ import annotations

from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

_I2 = np.eye(2, dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)
PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

IDENTITY = np.eye(4, dtype=complex)
GAMMA0 = np.block([[_I2, _Z2], [_Z2, -_I2]])
GAMMA = np.stack(
    [GAMMA0] + [np.block([[_Z2, s], [-s, _Z2]]) for s in PAULI]
)
"""Contravariant gammas, ``GAMMA[mu] = gamma^mu``, shape (4, 4, 4)."""

GAMMA_LOWER = np.einsum("mn,nab->mab", METRIC, GAMMA)
"""Covariant gammas ``gamma_mu = g_{mu nu} gamma^nu``."""


class FourVector(NamedTuple):
    """Contravariant four-vector ``(t, x, y, z)`` in energy units."""

    t: float
    x: float
    y: float
    z: float

    @property
    def spatial(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_parts(cls, t: float, vec: Sequence[float]) -> "FourVector":
        return cls(float(t), float(vec[0]), float(vec[1]), float(vec[2]))

    def __array__(self, dtype=None, copy=None):
        return np.array(tuple(self), dtype=dtype if dtype is not None else float)


def minkowski_dot(a, b):
    """Return ``a^0 b^0 - a.b`` for four-vectors (last axis of length 4)."""
    a = np.asarray(a, dtype=float) if not np.iscomplexobj(a) else np.asarray(a)
    b = np.asarray(b, dtype=float) if not np.iscomplexobj(b) else np.asarray(b)
    return a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def slash(v) -> np.ndarray:
    """Feynman slash ``v_mu gamma^mu`` of one or many four-vectors.

    A single vector gives a (4, 4) matrix; an array of shape (..., 4) gives
    (..., 4, 4).
    """
    v = np.asarray(v)
    lowered = v * np.array([1.0, -1.0, -1.0, -1.0])
    return np.tensordot(lowered, GAMMA, axes=([-1], [0]))


def trace_product(ms: Sequence[np.ndarray]) -> complex:
    """Trace of the left-to-right product of Dirac matrices.

    The empty product is the identity, whose trace is 4.
    """
    if len(ms) == 0:
        return complex(4.0)
    return complex(np.trace(reduce(np.matmul, ms)))


def dirac_bar(spinor: np.ndarray) -> np.ndarray:
    """Dirac adjoint ``psi^dagger gamma^0`` as a row vector (last axis 4)."""
    return np.conj(spinor) @ GAMMA0


def spatial_trace_closed_form(p, pk, mass: float) -> np.ndarray:
    """Closed form of ``tr{gamma_i (pslash - m) gamma_j (p'slash - m)}``.

    ``p`` and ``pk`` are on-shell four-vectors (the second usually the
    shifted momentum p + k). Returns the 3x3 matrix over spatial i, j:
    ``4 [p_i p'_j + p'_i p_j + delta_ij (E E' - p.p' - m^2)]``.
    """
    p = np.asarray(p, dtype=float)
    pk = np.asarray(pk, dtype=float)
    ps, pks = p[1:], pk[1:]
    diag = p[0] * pk[0] - ps @ pks - mass**2
    return 4.0 * (np.outer(ps, pks) + np.outer(pks, ps) + diag * np.eye(3))
