"""Focused Gaussian beam: waist, axial length scale, intensity and flux.

The beam is polarized along z and propagates along +y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import C, EPS0, HBAR


@dataclass(frozen=True)
class Beam:
    wavelength: float  # m
    power: float  # W
    numerical_aperture: float

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if self.power < 0:
            raise ValueError("power must be non-negative")
        if not 0.0 < self.numerical_aperture <= 1.0:
            raise ValueError(f"numerical aperture must be in (0, 1], got {self.numerical_aperture}")

    @property
    def waist(self) -> float:
        return self.wavelength / (math.pi * self.numerical_aperture)


@dataclass(frozen=True)
class FocusParameters:
    wavelength: float
    power: float
    w0: float
    y0: float
    intensity: float
    field_amplitude: float
    photon_flux: float
    k0: float


def focus_from_waist(wavelength: float, power: float, w0: float) -> FocusParameters:
    """Focus parameters for an explicit waist.

    Used for waist scans where the effective NA = lambda / (pi w0) may
    exceed one.
    """
    if not (wavelength > 0 and w0 > 0) or power < 0:
        raise ValueError("need wavelength > 0, w0 > 0 and power >= 0")
    k0 = 2.0 * math.pi / wavelength
    na = wavelength / (math.pi * w0)
    y0 = math.pi * w0 ** 2 / wavelength
    intensity = power * k0 ** 2 * na ** 2 / (2.0 * math.pi)
    # photon energy is 2 pi hbar c / lambda
    flux = intensity * wavelength / (2.0 * math.pi * HBAR * C)
    e0 = math.sqrt(2.0 * intensity / (C * EPS0))
    return FocusParameters(wavelength, power, w0, y0, intensity, e0, flux, k0)


def focus(beam: Beam) -> FocusParameters:
    return focus_from_waist(beam.wavelength, beam.power, beam.waist)
