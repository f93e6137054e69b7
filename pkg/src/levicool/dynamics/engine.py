"""Ensemble integration of the feedback-cooled trap.

Each trajectory owns a PCG64 stream spawned from ``(master_seed, index)``.
Per trajectory the stream is consumed as: thermal draws (``n`` positions,
then ``n`` velocities) when starting from a thermal state, then one row of
``d`` standard normals per step laid out as ``[kicks | position noise |
velocity noise]`` (``d = n`` without measurement noise).  The kernels work
on velocities; momenta are converted at the boundaries.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..rates import TrapCharacterization
from . import _backend, _pykernel
from .model import (
    COUPLINGS,
    SCHEMES,
    VELOCITY_NOISE_MODES,
    DofSystem,
    FeedbackConfig,
    InstabilityError,
    IntegratorConfig,
    MeasurementModel,
    SimState,
    Thermal,
    trajectory_generator,
)

STATUS_OK, STATUS_DELTA, STATUS_NONFINITE, STATUS_ENERGY = 0, 1, 2, 3
FAILURE_REASONS = {STATUS_DELTA: "|Delta| >= limit", STATUS_NONFINITE: "non-finite state",
                   STATUS_ENERGY: "energy blow-up"}

# doubles of noise buffered per worker
_CHUNK_DOUBLES = 1 << 18


def _as_system(system) -> DofSystem:
    if isinstance(system, TrapCharacterization):
        return DofSystem.from_characterization(system)
    return system


def noise_scales(system: DofSystem, dt: float, mm: MeasurementModel):
    """Per-DOF (momentum kick, position noise, velocity noise) standard deviations."""
    dp = system.momentum_kick(dt)
    dq = system.position_noise(dt, mm.N)
    if mm.velocity_noise == "omega":
        dv = system.omega * dq
    else:
        dv = np.zeros(system.n)
    return dp, dq, dv


def _kernel_noise(system, dt, mm):
    dp, dq, dv = noise_scales(system, dt, mm)
    fed_inf = ~np.isfinite(dq)
    dq = np.where(fed_inf, 0.0, dq)
    dv = np.where(fed_inf, 0.0, dv)
    return dp / system.mass, dq, dv


def measure(state: SimState, mm: MeasurementModel, system, dt: float, rng):
    """Measured positions and velocities ``(q_m, qdot_m)``.

    Draws ``2 n`` normals (positions, then velocities) when ``mm.N > 0``.
    For ``"finite_difference"`` the velocity needs the previous measurement
    and is only available inside ensemble runs, so the true velocity is
    returned here.
    """
    system = _as_system(system)
    v = state.p / system.mass
    if not mm.enabled:
        return state.q.copy(), v
    _, dq, dv = noise_scales(system, dt, mm)
    z = rng.standard_normal(2 * system.n)
    qm = state.q + z[:system.n] * dq
    vm = v + z[system.n:] * dv
    return qm, vm


def step(state: SimState, dt: float, fb: FeedbackConfig, mm: MeasurementModel, system, rng,
         scheme: str = "gauss4", delta_limit: float = 1.0) -> SimState:
    """Advance one state by a single step, drawing noise from ``rng``."""
    system = _as_system(system)
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = system.n
    d = 3 * n if mm.enabled else n
    q = (state.q.copy())[None, :]
    v = (state.p / system.mass)[None, :]
    xprev = q.copy()
    esum = np.zeros((1, n))
    status = np.zeros(1, dtype=np.int8)
    fail = np.zeros(1, dtype=np.int64)
    noise = rng.standard_normal((1, 1, d))
    kick, dq, dv = _kernel_noise(system, dt, mm)
    gain = fb.gain_vector(system) * fb.multiplier(state.t)
    vel_mode = VELOCITY_NOISE_MODES[mm.velocity_noise]
    if vel_mode == VELOCITY_NOISE_MODES["finite_difference"]:
        vel_mode = VELOCITY_NOISE_MODES["none"]
    _pykernel.advance(q, v, xprev, esum, status, fail, noise, dt, system.omega ** 2,
                      kick, gain, dq, dv, vel_mode, SCHEMES[scheme], delta_limit, 0, COUPLINGS[fb.coupling])
    if status[0]:
        raise InstabilityError(f"step failed at t={state.t:g}: {FAILURE_REASONS[int(status[0])]}",
                               [(0, state.t, FAILURE_REASONS[int(status[0])])])
    return SimState(state.t + dt, q[0], v[0] * system.mass)


def config_hash(*parts) -> str:
    """Short stable digest of configuration objects (dataclasses, arrays, scalars)."""

    def norm(x):
        if hasattr(x, "__dataclass_fields__"):
            return {k: norm(getattr(x, k)) for k in x.__dataclass_fields__}
        if isinstance(x, np.ndarray):
            return [norm(v) for v in x.tolist()]
        if isinstance(x, (list, tuple)):
            return [norm(v) for v in x]
        if isinstance(x, dict):
            return {str(k): norm(v) for k, v in x.items()}
        if isinstance(x, float):
            return repr(x)
        return x

    blob = json.dumps(norm(list(parts)), sort_keys=True, default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class EnsembleSeries:
    """Recorded energies of an ensemble run.

    ``energies`` has shape ``(K, R, n)`` (trajectory, record, DOF) and is NaN
    after a trajectory fails.  ``interval_energy`` holds, for every record
    after the first, the time average of the energy over the preceding
    interval, sampled every step.
    """

    t: np.ndarray
    labels: tuple
    omega: np.ndarray
    hbar: float
    energies: np.ndarray
    interval_energy: np.ndarray
    failures: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def trajectories(self) -> int:
        return self.energies.shape[0]

    def _stats(self, arr):
        ok = np.isfinite(arr)
        k = ok.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.nanmean(np.where(ok, arr, np.nan), axis=0) if arr.size else arr.sum(axis=0)
            if self.trajectories < 2:
                se = np.full(mean.shape, np.nan)
            else:
                se = np.nanstd(arr, axis=0, ddof=1) / np.sqrt(k)
        return mean, se

    @property
    def mean_energy(self):
        return self._stats(self.energies)[0]

    @property
    def se_energy(self):
        return self._stats(self.energies)[1]

    def _to_n(self, e):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.omega > 0, e / (self.hbar * self.omega), np.nan)

    @property
    def occupations(self):
        return self._to_n(self.energies)

    @property
    def mean_occupation(self):
        return self._to_n(self.mean_energy)

    @property
    def se_occupation(self):
        return self._to_n(self.se_energy)

    def dof(self, label) -> int:
        return self.labels.index(label)


class Ensemble:
    """Stateful ensemble that can be advanced in pieces.

    Advancing in several calls gives bit-identical results to one long call.
    """

    def __init__(self, system, fb: FeedbackConfig, mm: MeasurementModel, integ: IntegratorConfig,
                 initial=None, dt: float | None = None):
        self.system = _as_system(system)
        self.fb = fb
        self.mm = mm
        self.integ = integ
        self.kernel = _backend.get_kernel(integ.backend)
        self.dt = dt if dt is not None else self.system.time_step(integ.steps_per_period)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        sys_ = self.system
        n, K = sys_.n, integ.trajectories
        self.n, self.K = n, K
        self.d = 3 * n if mm.enabled else n
        self.kick, self.dq, self.dv = _kernel_noise(sys_, self.dt, mm)
        self.base_gain = fb.gain_vector(sys_)
        self.omega2 = np.ascontiguousarray(sys_.omega ** 2)
        self.vel_mode = VELOCITY_NOISE_MODES[mm.velocity_noise]
        self.scheme = SCHEMES[integ.scheme]
        self.coupling = COUPLINGS[fb.coupling]
        self.rngs = [trajectory_generator(integ.master_seed, i) for i in range(K)]
        self.q = np.zeros((K, n))
        self.v = np.zeros((K, n))
        if initial is None:
            initial = Thermal(energy=0.0)
        if isinstance(initial, SimState):
            if initial.q.shape != (n,):
                raise ValueError("initial state has the wrong number of DOFs")
            self.q[:] = initial.q
            self.v[:] = initial.p / sys_.mass
            self.t0 = initial.t
        else:
            e = initial.energies(sys_)
            if np.any(e < 0):
                raise ValueError("initial energies must be non-negative")
            with np.errstate(divide="ignore", invalid="ignore"):
                sq = np.where(sys_.omega > 0, np.sqrt(e / (sys_.mass * sys_.omega ** 2)), 0.0)
            sv = np.sqrt(e / sys_.mass)
            for k, rng in enumerate(self.rngs):
                z = rng.standard_normal(2 * n)
                self.q[k] = z[:n] * sq
                self.v[k] = z[n:] * sv
            self.t0 = 0.0
        self.e_initial = self.energy().mean(axis=0) if K else np.zeros(n)
        self.xprev = self.q.copy()
        self.esum = np.zeros((K, n))
        self.status = np.zeros(K, dtype=np.int8)
        self.fail_step = np.full(K, -1, dtype=np.int64)
        self.steps = 0
        workers = integ.workers or min(os.cpu_count() or 1, 8)
        self.workers = max(1, min(workers, K))
        self.blocks = [b for b in np.array_split(np.arange(K), self.workers) if b.size]

    @property
    def t(self) -> float:
        return self.t0 + self.steps * self.dt

    def energy(self) -> np.ndarray:
        return 0.5 * self.system.mass * (self.v ** 2 + self.omega2 * self.q ** 2)

    def state(self, k: int) -> SimState:
        return SimState(self.t, self.q[k].copy(), self.v[k] * self.system.mass)

    def _segments(self, nsteps):
        """Split ``nsteps`` at schedule switch points -> (steps, gain multiplier)."""
        start = self.steps
        stop = start + nsteps
        cuts = {start, stop}
        for t_switch, _ in self.fb.schedule:
            s = math.ceil((t_switch - self.t0) / self.dt - 1e-9)
            if start < s < stop:
                cuts.add(s)
        cuts = sorted(cuts)
        for a, b in zip(cuts, cuts[1:]):
            yield b - a, self.fb.multiplier(self.t0 + a * self.dt + 1e-12 * self.dt)

    def _run_block(self, rows, nsteps, gain, chunk):
        lo, hi = rows[0], rows[-1] + 1
        q, v, xp, es = self.q[lo:hi], self.v[lo:hi], self.xprev[lo:hi], self.esum[lo:hi]
        st, fs = self.status[lo:hi], self.fail_step[lo:hi]
        buf = np.empty((hi - lo, chunk, self.d))
        done = 0
        while done < nsteps and (st == STATUS_OK).any():
            s = min(chunk, nsteps - done)
            noise = buf if s == chunk else np.empty((hi - lo, s, self.d))
            for j in range(hi - lo):
                if st[j] == STATUS_OK:
                    self.rngs[lo + j].standard_normal(out=noise[j])
            self.kernel.advance(q, v, xp, es, st, fs, noise, self.dt, self.omega2, self.kick, gain,
                                self.dq, self.dv, self.vel_mode, self.scheme, self.integ.delta_limit,
                                self.steps + done, self.coupling)
            done += s

    def advance(self, nsteps: int):
        """Integrate ``nsteps`` steps; ``esum`` accumulates v^2 + omega^2 q^2 each step."""
        if nsteps < 0:
            raise ValueError("nsteps must be non-negative")
        for seg, mult in self._segments(nsteps):
            gain = np.ascontiguousarray(self.base_gain * mult)
            size = max(b.size for b in self.blocks)
            chunk = max(1, min(seg, _CHUNK_DOUBLES // (size * self.d)))
            if len(self.blocks) == 1:
                self._run_block(self.blocks[0], seg, gain, chunk)
            else:
                with ThreadPoolExecutor(len(self.blocks)) as pool:
                    list(pool.map(lambda b: self._run_block(b, seg, gain, chunk), self.blocks))
            self.steps += seg
        self._check_energy()

    def _check_energy(self):
        sys_ = self.system
        scale = self.e_initial + sys_.heating * (self.t - self.t0) + sys_.hbar * sys_.omega
        scale = np.where(scale > 0, scale, np.inf)
        big = (self.energy() > self.integ.blowup_factor * scale).any(axis=1)
        hit = big & (self.status == STATUS_OK)
        self.status[hit] = STATUS_ENERGY
        self.fail_step[hit] = self.steps

    def take_interval_mean(self) -> np.ndarray:
        """Per-trajectory mean energy since the last call, and reset the accumulator."""
        out = 0.5 * self.system.mass * self.esum / max(1, self._since)
        self.esum[:] = 0.0
        self._since = 0
        return out

    _since = 0

    def run(self, nsteps: int, record_every: int):
        """Advance ``nsteps``, recording every ``record_every`` steps.

        Returns ``(t, snapshots, interval_means)``; snapshots include the
        starting point.
        """
        record_every = max(1, int(record_every))
        marks = list(range(0, nsteps, record_every)) + [nsteps]
        t = [self.t]
        snaps = [self._masked(self.energy())]
        means = []
        self.esum[:] = 0.0
        self._since = 0
        for a, b in zip(marks, marks[1:]):
            self.advance(b - a)
            self._since += b - a
            t.append(self.t)
            snaps.append(self._masked(self.energy()))
            means.append(self._masked(self.take_interval_mean()))
        if means:
            interval = np.stack(means, axis=1)
        else:
            interval = np.zeros((self.K, 0, self.n))
        return np.array(t), np.stack(snaps, axis=1), interval

    def _masked(self, e):
        e = e.copy()
        e[self.status != STATUS_OK] = np.nan
        return e

    def failures(self):
        out = []
        for k in np.flatnonzero(self.status):
            out.append((int(k), self.t0 + float(self.fail_step[k]) * self.dt,
                        FAILURE_REASONS[int(self.status[k])]))
        return out


def _record_steps(duration, dt, record_interval):
    nsteps = int(round(duration / dt))
    if abs(nsteps * dt - duration) > 1e-6 * dt and nsteps * dt < duration:
        nsteps += 1
    if record_interval is None:
        every = max(1, nsteps // 100)
    else:
        every = max(1, int(round(record_interval / dt)))
    return nsteps, every


def run_ensemble(system, duration: float, fb: FeedbackConfig = FeedbackConfig(),
                 mm: MeasurementModel = MeasurementModel(), integ: IntegratorConfig = IntegratorConfig(),
                 initial=None, raise_on_failure: bool = True) -> EnsembleSeries:
    """Integrate ``integ.trajectories`` independent trajectories for ``duration``.

    ``initial`` is a :class:`SimState` (shared by every trajectory) or a
    :class:`Thermal` initial state.  Trajectories that fail are reported in
    ``failures``; with ``raise_on_failure`` an :class:`InstabilityError`
    carrying the partial series is raised instead of returning.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    ens = Ensemble(system, fb, mm, integ, initial)
    nsteps, every = _record_steps(duration, ens.dt, integ.record_interval)
    t, snaps, interval = ens.run(nsteps, every)
    sys_ = ens.system
    meta = {
        "config_hash": config_hash(sys_, fb, mm, {**asdict(integ), "workers": None, "backend": None},
                                   duration, initial),
        "master_seed": integ.master_seed,
        "dt": ens.dt,
        "steps": nsteps,
        "trajectories": integ.trajectories,
        "backend": _backend.DEFAULT if integ.backend is None else integ.backend,
    }
    series = EnsembleSeries(t, sys_.labels, np.array(sys_.omega), sys_.hbar, snaps, interval,
                            ens.failures(), meta)
    if raise_on_failure and series.failures:
        k, when, why = series.failures[0]
        raise InstabilityError(f"{len(series.failures)} of {integ.trajectories} trajectories failed; "
                               f"first: trajectory {k} at t={when:.6g} ({why})",
                               series.failures, series)
    return series


def run_trajectory(system, duration: float, fb: FeedbackConfig = FeedbackConfig(),
                   mm: MeasurementModel = MeasurementModel(), integ: IntegratorConfig = IntegratorConfig(),
                   initial=None, index: int = 0):
    """Single trajectory ``index`` of the ensemble defined by ``integ.master_seed``.

    Returns ``(t, energies)`` with energies of shape ``(R, n)``.  The result
    equals row ``index`` of the corresponding ensemble run.
    """
    integ1 = IntegratorConfig(**{**asdict(integ), "trajectories": index + 1, "workers": 1})
    ens = Ensemble(system, fb, mm, integ1, initial)
    # only the requested trajectory needs integrating
    ens.status[:index] = -1
    nsteps, every = _record_steps(duration, ens.dt, integ.record_interval)
    t, snaps, _ = ens.run(nsteps, every)
    if ens.status[index] > 0:
        when = ens.t0 + float(ens.fail_step[index]) * ens.dt
        why = FAILURE_REASONS[int(ens.status[index])]
        raise InstabilityError(f"trajectory {index} failed at t={when:.6g} ({why})", [(index, when, why)])
    return t, snaps[index]


def fit_heating_rates(series: EnsembleSeries):
    """Least-squares slope of energy vs time per DOF.

    Slopes are fitted per trajectory; returns ``(mean slope, standard
    error)`` arrays over trajectories.
    """
    t = series.t
    tc = t - t.mean()
    e = series.energies
    ok = np.isfinite(e).all(axis=(1, 2))
    e = e[ok]
    ec = e - e.mean(axis=1, keepdims=True)
    slopes = np.einsum("r,krn->kn", tc, ec) / np.dot(tc, tc)
    mean = slopes.mean(axis=0)
    se = slopes.std(axis=0, ddof=1) / math.sqrt(len(slopes)) if len(slopes) > 1 else np.full(mean.shape, np.nan)
    return mean, se
