"""Closed-form shot-noise heating rates, trap frequencies and their ratios.

Heating rates are per degree of freedom and in J/s.  ``Edot_T`` applies to
each of x and y (z receives half of it); ``Edot_R`` applies to each of the
two librations beta1 and beta2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import EPS0, HBAR, KB
from .material import Ellipsoid, mass, moments_of_inertia, polarizability
from .optics import Beam, FocusParameters, focus, focus_from_waist


def _scattering_prefactor(f: FocusParameters) -> float:
    # 8 pi J_p / 3 * (k0^2 / 4 pi eps0)^2
    return 8.0 * math.pi * f.photon_flux / 3.0 * (f.k0 ** 2 / (4.0 * math.pi * EPS0)) ** 2


def translational_heating_rate(p: Ellipsoid, f: FocusParameters) -> float:
    alpha_z = polarizability(p).alpha_z
    return _scattering_prefactor(f) * alpha_z ** 2 * HBAR ** 2 * f.k0 ** 2 / (2.0 * mass(p))


def rotational_heating_rate(p: Ellipsoid, f: FocusParameters) -> float:
    t = polarizability(p)
    i1, _ = moments_of_inertia(p)
    return _scattering_prefactor(f) * (t.alpha_z - t.alpha_x) ** 2 * HBAR ** 2 / (2.0 * i1)


def rotational_localization_rate(p: Ellipsoid, f: FocusParameters, omega, omega_prime) -> float:
    """Off-diagonal decay rate between orientations ``(alpha, beta[, gamma])``.

    The spin angle gamma, if given, is ignored (symmetric top).
    """
    al, be = omega[0], omega[1]
    alp, bep = omega_prime[0], omega_prime[1]
    t = polarizability(p)
    pref = f.photon_flux / 2.0 * f.k0 ** 4 / (4.0 * math.pi * EPS0) ** 2 * (2.0 * math.pi / 3.0)
    angular = (1.0 - math.cos(2 * be) * math.cos(2 * bep)
               - math.cos(al - alp) * math.sin(2 * be) * math.sin(2 * bep))
    return pref * (t.alpha_z - t.alpha_x) ** 2 * angular


def trap_frequencies(p: Ellipsoid, f: FocusParameters) -> tuple[float, float, float, float, float]:
    """Angular frequencies ``(wx, wy, wz, wbeta1, wbeta2)`` of small oscillations."""
    t = polarizability(p)
    if t.alpha_z < t.alpha_x:
        raise ValueError("alpha_z < alpha_x: long-axis alignment is unstable")
    m = mass(p)
    i1, _ = moments_of_inertia(p)
    e0 = f.field_amplitude
    wx = math.sqrt(t.alpha_z / m) * e0 / f.w0
    wy = math.sqrt(t.alpha_z / (2.0 * m)) * e0 / f.y0
    wb = math.sqrt((t.alpha_z - t.alpha_x) / (2.0 * i1)) * e0
    return wx, wy, wx, wb, wb


def occupation(energy: float, omega: float) -> float:
    if not omega > 0:
        raise ValueError("occupation needs omega > 0")
    return energy / (HBAR * omega)


def delta_n(edot: float, omega: float) -> float:
    """Occupation gained per oscillation period, 2 pi Edot / (hbar omega^2)."""
    if not omega > 0:
        raise ValueError("delta_n needs omega > 0")
    return 2.0 * math.pi * edot / (HBAR * omega ** 2)


def beta_max(p: Ellipsoid, f: FocusParameters, temperature: float) -> float:
    """Thermal libration amplitude sqrt(2 kB T / (I1 w_beta^2))."""
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    wb = trap_frequencies(p, f)[3]
    if wb == 0:
        raise ValueError("no librational confinement (w_beta = 0)")
    i1, _ = moments_of_inertia(p)
    return math.sqrt(2.0 * KB * temperature / (i1 * wb ** 2))


def approximate_ratios(p: Ellipsoid, f: FocusParameters) -> dict:
    """Small-angle closed forms for the four comparison ratios."""
    aniso = polarizability(p).anisotropy
    s2 = p.a ** 2 + p.b ** 2
    lam, w0 = f.wavelength, f.w0
    return {
        "ratio_E": 5.0 * (lam / (2.0 * math.pi * math.sqrt(s2))) ** 2 * aniso ** 2,
        "ratio_omega": math.sqrt(5.0) * w0 / math.sqrt(2.0 * s2) * math.sqrt(aniso),
        "ratio_ndot": lam ** 2 / (4.0 * math.pi ** 2 * w0) * math.sqrt(10.0 * aniso ** 3 / s2),
        "ratio_dn": lam ** 2 / (2.0 * math.pi ** 2 * w0 ** 2) * aniso,
    }


def _safe_div(num, den):
    return num / den if den != 0 else 0.0


@dataclass(frozen=True)
class TrapCharacterization:
    """One table row: frequencies, per-DOF heating rates and ratios."""

    particle: Ellipsoid
    focus: FocusParameters
    mass: float
    inertia: float
    anisotropy: float
    omega_x: float
    omega_y: float
    omega_z: float
    omega_beta1: float
    omega_beta2: float
    Edot_T: float
    Edot_R: float
    momentum_diffusion: float
    ratio_E: float
    ratio_omega: float
    ratio_ndot: float
    ratio_dn: float

    @property
    def Edot_z(self) -> float:
        return 0.5 * self.Edot_T

    @property
    def delta_n_x(self) -> float:
        return delta_n(self.Edot_T, self.omega_x)

    def beta_max(self, temperature: float) -> float:
        if self.omega_beta1 == 0:
            raise ValueError("no librational confinement (w_beta = 0)")
        return math.sqrt(2.0 * KB * temperature / (self.inertia * self.omega_beta1 ** 2))


def ratios(p: Ellipsoid, f: FocusParameters) -> tuple[float, float, float, float]:
    """Exact quotients ``(Edot_R/Edot_T, wb/wx, ndot_R/ndot_T, dn_R/dn_T)``."""
    c = characterize_focus(p, f)
    return c.ratio_E, c.ratio_omega, c.ratio_ndot, c.ratio_dn


def characterize_focus(p: Ellipsoid, f: FocusParameters) -> TrapCharacterization:
    wx, wy, wz, wb1, wb2 = trap_frequencies(p, f)
    et = translational_heating_rate(p, f)
    er = rotational_heating_rate(p, f)
    m = mass(p)
    ratio_e = _safe_div(er, et)
    ratio_w = _safe_div(wb1, wx)
    ratio_ndot = _safe_div(er, wb1) / (et / wx) if er else 0.0
    ratio_dn = _safe_div(er, wb1 ** 2) / (et / wx ** 2) if er else 0.0
    return TrapCharacterization(
        particle=p, focus=f, mass=m, inertia=moments_of_inertia(p)[0],
        anisotropy=polarizability(p).anisotropy,
        omega_x=wx, omega_y=wy, omega_z=wz, omega_beta1=wb1, omega_beta2=wb2,
        Edot_T=et, Edot_R=er, momentum_diffusion=et * m / HBAR ** 2,
        ratio_E=ratio_e, ratio_omega=ratio_w, ratio_ndot=ratio_ndot, ratio_dn=ratio_dn,
    )


def characterize(p: Ellipsoid, beam) -> TrapCharacterization:
    """Characterize a particle in a beam (a :class:`Beam` or :class:`FocusParameters`)."""
    f = focus(beam) if isinstance(beam, Beam) else beam
    return characterize_focus(p, f)


def waist_for_delta_n(p: Ellipsoid, wavelength: float, power: float, target: float) -> float:
    """Beam waist giving the x-DOF ``delta_n`` equal to ``target``.

    ``delta_n`` scales as w0^2 at fixed particle and power.
    """
    if not target > 0:
        raise ValueError("target delta_n must be positive")
    w_ref = wavelength / math.pi
    ref = characterize_focus(p, focus_from_waist(wavelength, power, w_ref)).delta_n_x
    return w_ref * math.sqrt(target / ref)
