"""Feedback cooling of one harmonic degree of freedom with ideal measurement.

Cycle-averaged energy balance::

    dE/dt = Edot - eta E^2 / (2 m)

``eta`` is the parametric feedback gain in s/m^2 (for a libration use
``zeta r^2`` and the moment of inertia in place of ``m``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR


def cooling_power(energy, eta, m):
    """Mean feedback power, -eta E^2 / 2m."""
    energy = np.asarray(energy, dtype=float)
    if np.any(energy < 0):
        raise ValueError("energy must be non-negative")
    out = -eta * energy ** 2 / (2.0 * m)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CoolingSolution:
    E_limit: float
    n_limit: float
    relaxation_rate: float
    edot: float
    eta: float
    m: float
    omega: float

    def B(self, e_initial: float) -> float:
        """Integration constant of the energy trajectory for initial energy ``e_initial``."""
        g = math.sqrt(self.eta / (2.0 * self.m))
        num = g * e_initial + math.sqrt(self.edot)
        den = g * e_initial - math.sqrt(self.edot)
        if den == 0:
            raise ZeroDivisionError("B undefined when E_i equals E_limit")
        return num / den


def cooling_limit(edot: float, eta: float, m: float, omega: float, hbar: float = HBAR) -> CoolingSolution:
    """Steady state of the energy balance.  ``hbar`` is overridable for scaled units."""
    if min(edot, eta, m, omega) <= 0:
        raise ValueError("cooling_limit needs edot, eta, m, omega all > 0")
    n_lim = math.sqrt(2.0 * m * edot / (eta * hbar ** 2 * omega ** 2))
    return CoolingSolution(
        E_limit=hbar * omega * n_lim,
        n_limit=n_lim,
        relaxation_rate=math.sqrt(eta * edot / (2.0 * m)),
        edot=edot, eta=eta, m=m, omega=omega,
    )


def stationary_mean_occupation(edot: float, eta: float, m: float, omega: float, hbar: float = HBAR) -> float:
    """Ensemble-mean occupation of the stochastic steady state.

    With white momentum noise the energy obeys
    ``dE = (Edot - eta E^2/2m) dt + sqrt(2 Edot E) dW`` whose stationary
    density is a half-Gaussian of scale ``E_limit``; its mean is
    ``sqrt(2/pi) E_limit``.
    """
    return math.sqrt(2.0 / math.pi) * cooling_limit(edot, eta, m, omega, hbar).n_limit


def energy_trajectory(e_initial: float, t, edot: float, eta: float, m: float):
    """Closed-form solution of the energy balance starting from ``e_initial``.

    Covers both the cooling branch (E_i > E_limit) and the heating branch
    (B < 0).  E_i == E_limit is a fixed point.
    """
    if e_initial < 0:
        raise ValueError("initial energy must be non-negative")
    if min(edot, eta, m) <= 0:
        raise ValueError("edot, eta and m must be positive")
    t = np.asarray(t, dtype=float)
    e_lim = math.sqrt(2.0 * m * edot / eta)
    rate = math.sqrt(eta * edot / (2.0 * m))
    g = math.sqrt(eta / (2.0 * m))
    den = g * e_initial - math.sqrt(edot)
    if den == 0:
        out = np.full_like(t, e_lim)
    else:
        b = (g * e_initial + math.sqrt(edot)) / den
        # B e^x - 1 = (B - 1) + B (e^x - 1); overflow at large t gives the asymptote
        with np.errstate(over="ignore"):
            out = e_lim * (1.0 + 2.0 / ((b - 1.0) + b * np.expm1(2.0 * rate * t)))
    return float(out) if out.ndim == 0 else out
