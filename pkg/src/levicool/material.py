"""Prolate ellipsoidal particles and their polarizability.

The particle is a symmetric top with half-axes ``(a, a, b)``, ``a <= b``,
the long axis along the body z axis.  The body-frame polarizability is
diagonal, ``alpha_x == alpha_y <= alpha_z``.

Euler angles follow the z-y-z convention.  The orientation ``(al, be, ga)``
maps the body frame onto the lab frame with the active rotation

    R = Rz(al) @ Ry(be) @ Rz(ga)

so the long axis points along ``(sin be cos al, sin be sin al, cos be)``
and the lab-frame tensor is ``R @ diag(alpha) @ R.T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import EPS0

# Below this ellipticity the closed-form depolarization factor loses
# digits to cancellation; a Taylor series is used instead.
_SERIES_CUTOFF = 1e-3


@dataclass(frozen=True)
class Material:
    relative_dielectric_constant: float
    density: float
    label: str = ""

    def __post_init__(self):
        if not self.relative_dielectric_constant > 1.0:
            raise ValueError("relative dielectric constant must exceed 1, "
                             f"got {self.relative_dielectric_constant}")
        if not self.density > 0.0:
            raise ValueError(f"density must be positive, got {self.density}")

    @property
    def epsilon(self) -> float:
        return self.relative_dielectric_constant


DIAMOND = Material(5.7, 3500.0, "diamond")
SILICA = Material(2.1, 2200.0, "silica")

PRESETS = {"diamond": DIAMOND, "silica": SILICA}


@dataclass(frozen=True)
class Ellipsoid:
    """Prolate spheroid with short half-axis ``a`` (twice) and long half-axis ``b``, in metres."""

    a: float
    b: float
    material: Material = field(default=DIAMOND)

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("half-axes must be positive")
        if self.a > self.b:
            raise ValueError(f"need a <= b (prolate), got a={self.a}, b={self.b}")

    @classmethod
    def from_nm(cls, a_nm, b_nm, material=DIAMOND):
        return cls(a_nm * 1e-9, b_nm * 1e-9, material)

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.a ** 2 * self.b

    @property
    def ellipticity(self) -> float:
        if self.b == 0:
            return 0.0
        return math.sqrt(1.0 - (self.a / self.b) ** 2)

    @property
    def size(self) -> float:
        """sqrt(a^2 + b^2), the size measure used to group table geometries."""
        return math.hypot(self.a, self.b)


@dataclass(frozen=True)
class PolarizabilityTensor:
    """Body-frame diagonal polarizability in C m^2 / V."""

    alpha_x: float
    alpha_y: float
    alpha_z: float

    def __post_init__(self):
        if not math.isclose(self.alpha_x, self.alpha_y, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError("symmetric top requires alpha_x == alpha_y")

    @property
    def anisotropy(self) -> float:
        """(alpha_z - alpha_x) / alpha_z."""
        if self.alpha_z == 0:
            return 0.0
        return (self.alpha_z - self.alpha_x) / self.alpha_z

    def as_matrix(self) -> np.ndarray:
        return np.diag([self.alpha_x, self.alpha_y, self.alpha_z])


def mass(e: Ellipsoid) -> float:
    return e.material.density * e.volume


def moments_of_inertia(e: Ellipsoid) -> tuple[float, float]:
    """Return ``(I1, I3)``: about a short axis and about the long axis."""
    m = mass(e)
    return m * (e.a ** 2 + e.b ** 2) / 5.0, 2.0 * m * e.a ** 2 / 5.0


def depolarization_lz(ecc: float) -> float:
    """Depolarization factor along the symmetry axis of a prolate spheroid.

    Uses ``Lz = (1-e^2)/e^2 * (artanh(e)/e - 1)``, which tends to 1/3 for a
    sphere and to 0 for a needle.
    """
    if not 0.0 <= ecc < 1.0:
        raise ValueError(f"ellipticity must lie in [0, 1), got {ecc}")
    if ecc < _SERIES_CUTOFF:
        # Lz = 1/3 - sum_{k>=1} 2 e^{2k} / ((2k+1)(2k+3))
        e2 = ecc * ecc
        return 1.0 / 3.0 - e2 * (2.0 / 15.0 + e2 * (2.0 / 35.0 + e2 * (2.0 / 63.0)))
    return (1.0 - ecc * ecc) / (ecc * ecc) * (math.atanh(ecc) / ecc - 1.0)


def depolarization_factors(e: Ellipsoid) -> tuple[float, float, float]:
    if e.a == e.b:
        return 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0
    lz = depolarization_lz(e.ellipticity)
    lx = (1.0 - lz) / 2.0
    return lx, lx, lz


def polarizability(e: Ellipsoid) -> PolarizabilityTensor:
    eps = e.material.epsilon
    lx, ly, lz = depolarization_factors(e)
    pref = EPS0 * e.volume * (eps - 1.0)
    ax = pref / (1.0 + lx * (eps - 1.0))
    return PolarizabilityTensor(ax, ax, pref / (1.0 + lz * (eps - 1.0)))


def sphere_polarizability(radius: float, epsilon: float) -> float:
    """Clausius-Mossotti polarizability of a dielectric sphere."""
    return 4.0 * math.pi * EPS0 * (epsilon - 1.0) / (epsilon + 2.0) * radius ** 3


def euler_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Active z-y-z rotation ``Rz(alpha) @ Ry(beta) @ Rz(gamma)``."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    rz_a = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    ry_b = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
    rz_g = np.array([[cg, -sg, 0.0], [sg, cg, 0.0], [0.0, 0.0, 1.0]])
    return rz_a @ ry_b @ rz_g


def rotate_polarizability(t: PolarizabilityTensor, euler) -> np.ndarray:
    """Lab-frame polarizability for body orientation ``euler = (alpha, beta, gamma)``."""
    r = euler_matrix(*euler)
    out = r @ t.as_matrix() @ r.T
    # symmetrize away rounding asymmetry
    return 0.5 * (out + out.T)
