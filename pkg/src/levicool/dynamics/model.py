"""Configuration and state types for the trajectory engine."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..constants import HBAR, KB
from ..rates import TrapCharacterization

DOF_LABELS = ("x", "y", "z", "beta1", "beta2")
VELOCITY_NOISE_MODES = {"none": 0, "omega": 1, "finite_difference": 2}
SCHEMES = {"gauss4": 0, "rk4": 1}
COUPLINGS = {"shared": 0, "independent": 1}


class SimulationError(RuntimeError):
    pass


class InstabilityError(SimulationError):
    """One or more trajectories left the small-modulation regime or blew up.

    ``failures`` holds ``(trajectory_index, time, reason)`` tuples;
    ``partial`` is whatever result was available.
    """

    def __init__(self, message, failures=(), partial=None):
        super().__init__(message)
        self.failures = list(failures)
        self.partial = partial


class NonConvergenceError(SimulationError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class DofSystem:
    """Independent harmonic degrees of freedom sharing one trap intensity.

    ``mass`` is the mass or moment of inertia, ``heating`` the shot-noise
    heating rate of each DOF.  ``hbar`` is 2 for the scaled single-DOF
    model, where lengths are in units of sqrt(hbar / 2 m omega).
    """

    labels: tuple
    omega: np.ndarray
    mass: np.ndarray
    heating: np.ndarray
    hbar: float = HBAR
    size_scale: float | None = None

    def __post_init__(self):
        for name in ("omega", "mass", "heating"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if arr.shape != (len(self.labels),):
                raise ValueError(f"{name} must have one entry per DOF")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.omega < 0) or np.any(self.mass <= 0) or np.any(self.heating < 0):
            raise ValueError("need omega >= 0, mass > 0, heating >= 0")
        if not np.any(self.omega > 0):
            raise ValueError("at least one DOF must be confined")

    @property
    def n(self) -> int:
        return len(self.labels)

    @classmethod
    def from_characterization(cls, char: TrapCharacterization, dofs=DOF_LABELS):
        table = {
            "x": (char.omega_x, char.mass, char.Edot_T),
            "y": (char.omega_y, char.mass, char.Edot_T),
            "z": (char.omega_z, char.mass, 0.5 * char.Edot_T),
            "beta1": (char.omega_beta1, char.inertia, char.Edot_R),
            "beta2": (char.omega_beta2, char.inertia, char.Edot_R),
        }
        rows = [table[d] for d in dofs]
        return cls(tuple(dofs), *(np.array(c) for c in zip(*rows)), size_scale=char.particle.size)

    @classmethod
    def scaled(cls, delta_n: float):
        """Single DOF in oscillator units: omega = m = 1, time in radians."""
        if not delta_n > 0:
            raise ValueError("delta_n must be positive")
        return cls(("x",), np.array([1.0]), np.array([1.0]), np.array([delta_n / math.pi]), hbar=2.0)

    def subset(self, dofs):
        idx = [self.labels.index(d) for d in dofs]
        return DofSystem(tuple(self.labels[i] for i in idx), self.omega[idx], self.mass[idx],
                         self.heating[idx], self.hbar, self.size_scale)

    def time_step(self, steps_per_period: int) -> float:
        return 2.0 * math.pi / (float(self.omega.max()) * steps_per_period)

    def momentum_kick(self, dt: float) -> np.ndarray:
        """Standard deviation of the per-step momentum kick, sqrt(2 Edot dt m)."""
        return np.sqrt(2.0 * self.heating * dt * self.mass)

    def position_noise(self, dt: float, n_uncertainty: float) -> np.ndarray:
        """Measurement noise scale chosen so that dq * dp = N hbar / 2."""
        if n_uncertainty == 0:
            return np.zeros(self.n)
        dp = self.momentum_kick(dt)
        with np.errstate(divide="ignore"):
            return np.where(dp > 0, n_uncertainty * self.hbar / (2.0 * dp), np.inf)

    def energy(self, q, p) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        return p ** 2 / (2.0 * self.mass) + 0.5 * self.mass * self.omega ** 2 * q ** 2

    def occupation(self, energy) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.omega > 0, energy / (self.hbar * self.omega), np.nan)


@dataclass(frozen=True)
class FeedbackConfig:
    """Parametric feedback gains.

    The trap intensity is modulated by ``1 + Delta`` with
    ``Delta = sum eta_i x_i x_i' + sum zeta_j r^2 beta_j beta_j'``.
    ``schedule`` lists ``(switch_time, multiplier)`` pairs; from each switch
    time on, all gains are scaled by that multiplier.

    With ``coupling="shared"`` every DOF sees the same modulation.  For
    degenerate pairs (x, z and beta1, beta2) the restoring force is then
    central and the pair's angular momentum is untouched by feedback.
    ``"independent"`` gives each DOF its own term ``eta_i x_i x_i'``.
    """

    eta: tuple = (0.0, 0.0, 0.0)
    zeta: tuple = (0.0, 0.0)
    size_scale_r: float | None = None
    schedule: tuple = ()
    coupling: str = "shared"

    def __post_init__(self):
        object.__setattr__(self, "eta", tuple(float(x) for x in self.eta))
        object.__setattr__(self, "zeta", tuple(float(x) for x in self.zeta))
        object.__setattr__(self, "schedule", tuple((float(t), float(m)) for t, m in self.schedule))
        if len(self.eta) != 3 or len(self.zeta) != 2:
            raise ValueError("need three eta gains and two zeta gains")
        if min(self.eta + self.zeta) < 0:
            raise ValueError("feedback gains must be non-negative")
        times = [t for t, _ in self.schedule]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ValueError("schedule switch times must be strictly increasing")
        if any(m < 0 for _, m in self.schedule):
            raise ValueError("schedule multipliers must be non-negative")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"coupling must be one of {sorted(COUPLINGS)}")
        if self.size_scale_r is not None and not self.size_scale_r > 0:
            raise ValueError("size_scale_r must be positive")

    @classmethod
    def single(cls, gain: float):
        """Gain on x only, e.g. for one-dimensional or scaled runs."""
        return cls(eta=(gain, 0.0, 0.0))

    @property
    def is_off(self) -> bool:
        return not any(self.eta + self.zeta)

    def gain_vector(self, system: DofSystem) -> np.ndarray:
        r = self.size_scale_r if self.size_scale_r is not None else system.size_scale
        gains = []
        for label in system.labels:
            if label in ("x", "y", "z"):
                gains.append(self.eta["xyz".index(label)])
            else:
                zeta = self.zeta[int(label[-1]) - 1]
                if zeta and r is None:
                    raise ValueError("libration feedback needs size_scale_r")
                gains.append(zeta * r ** 2 if zeta else 0.0)
        return np.array(gains)

    def multiplier(self, t: float) -> float:
        m = 1.0
        for t_switch, mult in self.schedule:
            if t >= t_switch:
                m = mult
        return m


@dataclass(frozen=True)
class MeasurementModel:
    """Classical measurement noise with dq dp = N hbar / 2.

    ``velocity_noise`` picks how the measured velocity is formed: ``"omega"``
    adds independent noise of scale omega * dq, ``"none"`` uses the true
    velocity, ``"finite_difference"`` differentiates consecutive measured
    positions.
    """

    N: float = 0.0
    velocity_noise: str = "omega"

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be non-negative")
        if self.velocity_noise not in VELOCITY_NOISE_MODES:
            raise ValueError(f"velocity_noise must be one of {sorted(VELOCITY_NOISE_MODES)}")

    @property
    def enabled(self) -> bool:
        return self.N > 0


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration and ensemble settings.

    ``scheme`` is ``"gauss4"`` (two-stage Gauss-Legendre Runge-Kutta, order
    4, energy-conserving for the harmonic step) or ``"rk4"`` (classical
    explicit Runge-Kutta).  ``delta_limit`` bounds the feedback modulation
    computed from the true state; ``blowup_factor`` bounds energies relative
    to the expected scale.
    """

    steps_per_period: int = 100
    master_seed: int = 0
    trajectories: int = 1
    record_interval: float | None = None
    scheme: str = "gauss4"
    workers: int | None = None
    backend: str | None = None
    delta_limit: float = 1.0
    blowup_factor: float = 1e6

    def __post_init__(self):
        if self.steps_per_period < 20:
            raise ValueError("steps_per_period must be at least 20")
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {sorted(SCHEMES)}")
        if self.record_interval is not None and not self.record_interval > 0:
            raise ValueError("record_interval must be positive")


@dataclass(frozen=True)
class SimState:
    """Coordinates and conjugate momenta of every DOF at time ``t``."""

    t: float
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        p = np.array(self.p, dtype=float)
        if q.shape != p.shape or q.ndim != 1:
            raise ValueError("q and p must be 1-d arrays of equal length")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class Thermal:
    """Equipartition initial state: per-DOF mean energy ``kB T`` (or explicit ``energy``)."""

    temperature: float | None = None
    energy: object = None
    occupation: float | None = None

    def energies(self, system: DofSystem) -> np.ndarray:
        given = [x is not None for x in (self.temperature, self.energy, self.occupation)]
        if sum(given) != 1:
            raise ValueError("give exactly one of temperature, energy, occupation")
        if self.temperature is not None:
            return np.full(system.n, KB * self.temperature)
        if self.energy is not None:
            return np.broadcast_to(np.asarray(self.energy, dtype=float), (system.n,)).copy()
        return self.occupation * system.hbar * system.omega


def trajectory_generator(master_seed: int, index: int) -> np.random.Generator:
    """PCG64 stream for trajectory ``index``; independent of every other index."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(index,))))
