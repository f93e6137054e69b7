"""Steady-state occupations, gain sweeps and optimal-limit scans."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..analytics import cooling_limit
from ..constants import HBAR
from .engine import Ensemble, EnsembleSeries, run_ensemble
from .model import (
    DofSystem,
    FeedbackConfig,
    InstabilityError,
    IntegratorConfig,
    MeasurementModel,
    NonConvergenceError,
    Thermal,
)


@dataclass(frozen=True)
class SteadyState:
    mean: float
    se: float
    windows: int
    window_means: tuple
    converged: bool
    window_time: float


@dataclass(frozen=True)
class SweepPoint:
    value: float
    mean: float
    se: float
    converged: bool
    status: str = "ok"


def scaled_gain(eta: float, mass: float, hbar: float = HBAR) -> float:
    """Dimensionless gain for oscillator units, eta hbar / 2m."""
    return eta * hbar / (2.0 * mass)


def feedback_on(system: DofSystem, dof: str, gain: float, size_scale_r=None, coupling="shared") -> FeedbackConfig:
    """Feedback acting on a single DOF (eta for x/y/z, zeta for beta1/beta2)."""
    eta = [0.0, 0.0, 0.0]
    zeta = [0.0, 0.0]
    if dof in ("x", "y", "z"):
        eta["xyz".index(dof)] = gain
    elif dof in ("beta1", "beta2"):
        zeta[int(dof[-1]) - 1] = gain
    else:
        raise ValueError(f"unknown DOF {dof!r}")
    return FeedbackConfig(eta=eta, zeta=zeta, size_scale_r=size_scale_r, coupling=coupling)


def _limits(system: DofSystem, fb: FeedbackConfig):
    gains = fb.gain_vector(system)
    out = {}
    for i, label in enumerate(system.labels):
        if gains[i] > 0 and system.heating[i] > 0 and system.omega[i] > 0:
            out[label] = cooling_limit(system.heating[i], gains[i], system.mass[i], system.omega[i],
                                       system.hbar)
    return out


def steady_state_occupation(system: DofSystem, fb: FeedbackConfig, mm: MeasurementModel = MeasurementModel(),
                            integ: IntegratorConfig = IntegratorConfig(trajectories=30), dof: str | None = None,
                            initial=None, window_relaxations: float = 50.0, rtol: float = 0.01,
                            max_windows: int = 20) -> SteadyState:
    """Ensemble-mean steady-state occupation of ``dof``.

    Windows last ``window_relaxations`` relaxation times of the slowest
    fed DOF.  Each window yields the ensemble mean of the per-trajectory
    time-averaged occupation; the run stops once two consecutive window
    means differ by less than ``rtol`` and reports the last window's mean
    and standard error.  Starts by default from thermal states at the ideal
    cooling limit.
    """
    limits = _limits(system, fb)
    if not limits:
        raise ValueError("steady state needs positive feedback gain on a heated DOF")
    dof = dof or next(iter(limits))
    i = system.labels.index(dof)
    tau = max(1.0 / c.relaxation_rate for c in limits.values())
    if initial is None:
        e0 = np.array([limits[l].E_limit if l in limits else 0.0 for l in system.labels])
        initial = Thermal(energy=e0)
    ens = Ensemble(system, fb, mm, integ, initial)
    wsteps = max(1, math.ceil(window_relaxations * tau / ens.dt))
    scale = system.hbar * system.omega[i]
    means = []
    per_traj = None
    for _ in range(max_windows):
        _, _, interval = ens.run(wsteps, wsteps)
        failures = ens.failures()
        if failures:
            k, when, why = failures[0]
            raise InstabilityError(f"{len(failures)} trajectories failed; first: trajectory {k} "
                                   f"at t={when:.6g} ({why})", failures)
        per_traj = interval[:, 0, i] / scale
        means.append(float(per_traj.mean()))
        if len(means) >= 2 and abs(means[-1] - means[-2]) < rtol * abs(means[-2]):
            return SteadyState(means[-1], _se(per_traj), len(means), tuple(means), True, wsteps * ens.dt)
    partial = SteadyState(means[-1], _se(per_traj), len(means), tuple(means), False, wsteps * ens.dt)
    raise NonConvergenceError(f"no steady state after {max_windows} windows", partial)


def _se(x):
    return float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.nan


def sweep_gain(system: DofSystem, gains, mm: MeasurementModel = MeasurementModel(),
               integ: IntegratorConfig = IntegratorConfig(trajectories=30), dof: str = "x",
               size_scale_r=None, **kwargs) -> list[SweepPoint]:
    """Steady-state occupation of ``dof`` for each feedback gain.

    Unstable or non-converged points are marked rather than raised.
    """
    points = []
    for g in gains:
        fb = feedback_on(system, dof, float(g), size_scale_r)
        try:
            ss = steady_state_occupation(system, fb, mm, integ, dof=dof, **kwargs)
            points.append(SweepPoint(float(g), ss.mean, ss.se, True))
        except NonConvergenceError as err:
            p = err.partial
            points.append(SweepPoint(float(g), p.mean, p.se, False, "nonconverged"))
        except InstabilityError:
            points.append(SweepPoint(float(g), math.nan, math.nan, False, "unstable"))
    return points


@dataclass(frozen=True)
class LimitPoint:
    delta_n: float
    n_min: float
    se: float
    argmin_gain: float
    points: list = field(default_factory=list)


def minimum_point(points) -> SweepPoint | None:
    good = [p for p in points if p.status == "ok"]
    return min(good, key=lambda p: p.mean) if good else None


def optimal_limit(delta_n: float, gains, N: float, integ: IntegratorConfig = IntegratorConfig(trajectories=30),
                  velocity_noise: str = "omega", **kwargs) -> LimitPoint:
    """Minimum over ``gains`` (dimensionless) of the scaled steady-state occupation."""
    pts = sweep_gain(DofSystem.scaled(delta_n), gains, MeasurementModel(N, velocity_noise), integ, **kwargs)
    best = minimum_point(pts)
    if best is None:
        return LimitPoint(delta_n, math.nan, math.nan, math.nan, pts)
    return LimitPoint(delta_n, best.mean, best.se, best.value, pts)


def run_dimensionless(delta_n: float, N: float, eta_tilde: float, duration: float,
                      integ: IntegratorConfig = IntegratorConfig(), initial=None,
                      velocity_noise: str = "omega", raise_on_failure: bool = True) -> EnsembleSeries:
    """Scaled single-DOF run; time in radians of the trap frequency.

    Occupations of the result are ``(x^2 + v^2) / 4`` in oscillator units.
    """
    system = DofSystem.scaled(delta_n)
    return run_ensemble(system, duration, FeedbackConfig.single(eta_tilde), MeasurementModel(N, velocity_noise),
                        integ, initial, raise_on_failure)
sweep_eta = sweep_gain
