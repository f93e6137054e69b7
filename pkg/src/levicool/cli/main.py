"""``levicool`` command line: table, heat, cool, sweep, analytic."""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .. import analytics
from ..constants import KB
from ..dynamics import (
    DofSystem,
    FeedbackConfig,
    InstabilityError,
    IntegratorConfig,
    MeasurementModel,
    NonConvergenceError,
    Thermal,
    fit_heating_rates,
    run_ensemble,
    sweep_gain,
)
from ..material import PRESETS, Ellipsoid, Material
from ..optics import Beam, focus, focus_from_waist
from ..rates import characterize_focus, waist_for_delta_n
from .config import ConfigError, RunConfig, load
from .output import Table

EXIT_OK, EXIT_CONFIG, EXIT_INSTABILITY, EXIT_NONCONVERGENCE = 0, 1, 2, 3
MK = 1e-3 * KB  # J/s per mK/s

TABLE_COLUMNS = [
    ("a", "nm"), ("b", "nm"), ("anisotropy", ""), ("f_beta", "kHz"), ("f_x", "kHz"), ("f_y", "kHz"),
    ("Edot_R", "mK/s"), ("Edot_T", "mK/s"), ("ratio_E", ""), ("ratio_omega", ""), ("ratio_ndot", ""),
    ("ratio_dn", ""), ("delta_n_x", ""),
]


# builders ----------------------------------------------------------------

def _material(cfg: RunConfig) -> Material:
    p = cfg.particle
    base = PRESETS.get(p.material)
    eps = p.epsilon if p.epsilon is not None else base.epsilon
    rho = p.density if p.density is not None else base.density
    try:
        return Material(eps, rho, p.material)
    except ValueError as err:
        raise ConfigError("particle.epsilon", str(err)) from None


def _particles(cfg: RunConfig):
    mat = _material(cfg)
    out = []
    for a, b in zip(cfg.particle.a_nm, cfg.particle.b_nm):
        try:
            out.append(Ellipsoid.from_nm(a, b, mat))
        except ValueError as err:
            raise ConfigError("particle.a_nm", str(err)) from None
    return out


def _particle(cfg: RunConfig) -> Ellipsoid:
    ps = _particles(cfg)
    if len(ps) != 1:
        raise ConfigError("particle.a_nm", "this command takes exactly one particle")
    return ps[0]


def _focus(cfg: RunConfig, waist=None):
    b = cfg.beam
    try:
        if waist is not None:
            return focus_from_waist(b.wavelength_nm * 1e-9, b.power_mW * 1e-3, waist)
        if b.waist_nm is not None:
            return focus_from_waist(b.wavelength_nm * 1e-9, b.power_mW * 1e-3, b.waist_nm * 1e-9)
        return focus(Beam(b.wavelength_nm * 1e-9, b.power_mW * 1e-3, b.NA))
    except ValueError as err:
        raise ConfigError("beam.NA", str(err)) from None


def _system(cfg: RunConfig, char, dofs=None) -> DofSystem:
    try:
        return DofSystem.from_characterization(char, tuple(dofs or cfg.simulation.dofs))
    except ValueError as err:
        raise ConfigError("simulation.dofs", str(err)) from None


def _size_r(cfg: RunConfig):
    return None if cfg.feedback.r_nm is None else cfg.feedback.r_nm * 1e-9


def _feedback(cfg: RunConfig) -> FeedbackConfig:
    f = cfg.feedback
    try:
        return FeedbackConfig(f.eta, f.zeta, _size_r(cfg), f.schedule, f.coupling)
    except ValueError as err:
        raise ConfigError("feedback.eta", str(err)) from None


def _measurement(cfg: RunConfig) -> MeasurementModel:
    try:
        return MeasurementModel(cfg.measurement.N, cfg.measurement.velocity_noise)
    except ValueError as err:
        raise ConfigError("measurement.N", str(err)) from None


def _integrator(cfg: RunConfig, default_trajectories: int) -> IntegratorConfig:
    i = cfg.integrator
    try:
        return IntegratorConfig(
            steps_per_period=i.steps_per_period,
            master_seed=i.master_seed,
            trajectories=i.trajectories if i.trajectories is not None else default_trajectories,
            record_interval=i.record_interval_s,
            scheme=i.scheme,
            workers=i.workers,
            delta_limit=i.delta_limit,
        )
    except ValueError as err:
        raise ConfigError("integrator", str(err)) from None


def _temperature(cfg: RunConfig, default: float) -> float:
    t = cfg.initial.temperature_K
    t = default if t is None else t
    if t < 0:
        raise ConfigError("initial.temperature_K", "must be non-negative")
    return t


def _metadata(cfg: RunConfig, command: str, **extra):
    return {"command": command, "config_hash": cfg.digest(), "master_seed": cfg.integrator.master_seed, **extra}


def _write(cfg: RunConfig, table: Table, name: str):
    paths = table.write(cfg.output.dir, name, cfg.output.format)
    for p in paths:
        print(f"wrote {p}", file=sys.stderr)


def _save_config(cfg: RunConfig, command: str):
    os.makedirs(cfg.output.dir, exist_ok=True)
    with open(os.path.join(cfg.output.dir, f"{command}.cfg"), "w") as fh:
        fh.write(cfg.to_text())


# commands ----------------------------------------------------------------

def table_row(char):
    two_pi = 2.0 * math.pi
    p = char.particle
    return [p.a * 1e9, p.b * 1e9, char.anisotropy, char.omega_beta1 / two_pi / 1e3,
            char.omega_x / two_pi / 1e3, char.omega_y / two_pi / 1e3, char.Edot_R / MK,
            char.Edot_T / MK, char.ratio_E, char.ratio_omega, char.ratio_ndot, char.ratio_dn,
            char.delta_n_x]


def cmd_table(cfg: RunConfig) -> int:
    f = _focus(cfg)
    tab = Table([c for c, _ in TABLE_COLUMNS], [u for _, u in TABLE_COLUMNS], _metadata(cfg, "table"))
    header = ("a", "b", "(az-ax)/az", "fb/kHz", "fx/kHz", "fy/kHz", "ER mK/s", "ET mK/s",
              "ER/ET", "wb/wx", "nR/nT", "dnR/dnT")
    print(" ".join(f"{h:>10}" for h in header))
    for p in _particles(cfg):
        row = table_row(characterize_focus(p, f))
        tab.add(*row)
        shown = [f"{row[0]:10.0f}", f"{row[1]:10.0f}", f"{row[2]:10.2f}"]
        shown += [f"{x:10.3g}" for x in row[3:8]] + [f"{x:10.2f}" for x in row[8:12]]
        print(" ".join(shown))
    _write(cfg, tab, "table")
    return EXIT_OK


def _series_tables(cfg, series, system, prefix, command, analytic):
    """``analytic(i, t)`` gives the reference energy of DOF ``i`` at times ``t``."""
    meta = _metadata(cfg, command, dt=series.metadata["dt"], trajectories=series.trajectories)
    mean, se = series.mean_energy, series.se_energy
    for i, label in enumerate(series.labels):
        tab = Table(["t", "E_mean", "E_se", "T_mean", "T_se", "T_analytic", "n_mean", "n_se"],
                    ["s", "J", "J", "K", "K", "K", "1", "1"], meta)
        w = system.omega[i]
        ref = np.broadcast_to(analytic(i, series.t - series.t[0]), series.t.shape)
        for r, t in enumerate(series.t):
            e, s = mean[r, i], se[r, i]
            n = e / (system.hbar * w) if w > 0 else math.nan
            ns = s / (system.hbar * w) if w > 0 else math.nan
            tab.add(t, e, s, e / KB, s / KB, ref[r] / KB, n, ns)
        _write(cfg, tab, f"{prefix}_{label}")


def cmd_heat(cfg: RunConfig) -> int:
    char = characterize_focus(_particle(cfg), _focus(cfg))
    system = _system(cfg, char)
    integ = _integrator(cfg, 100)
    t_i = _temperature(cfg, 1e-6)
    series = run_ensemble(system, cfg.integrator.duration_s, FeedbackConfig(), MeasurementModel(), integ,
                          Thermal(temperature=t_i))
    _series_tables(cfg, series, system, "heat", "heat", lambda i, t: KB * t_i + system.heating[i] * t)
    tab = Table(["dof", "slope", "slope_se", "shot_noise", "z"], ["", "mK/s", "mK/s", "mK/s", "1"],
                _metadata(cfg, "heat"))
    if len(series.t) > 1:
        slope, se = fit_heating_rates(series)
    else:
        slope = se = np.full(system.n, math.nan)
    print(f"{'dof':>6} {'fit mK/s':>12} {'se':>10} {'shot mK/s':>12}")
    for i, label in enumerate(system.labels):
        z = (slope[i] - system.heating[i]) / se[i] if se[i] > 0 else math.nan
        tab.add(label, slope[i] / MK, se[i] / MK, system.heating[i] / MK, z)
        print(f"{label:>6} {slope[i] / MK:12.4g} {se[i] / MK:10.2g} {system.heating[i] / MK:12.4g}")
    _write(cfg, tab, "heat_summary")
    return EXIT_OK


def cmd_cool(cfg: RunConfig) -> int:
    char = characterize_focus(_particle(cfg), _focus(cfg))
    system = _system(cfg, char)
    fb = _feedback(cfg)
    try:
        gains = fb.gain_vector(system)
    except ValueError as err:
        raise ConfigError("feedback.r_nm", str(err)) from None
    integ = _integrator(cfg, 30)
    t_i = _temperature(cfg, 0.1)
    try:
        series = run_ensemble(system, cfg.integrator.duration_s, fb, _measurement(cfg), integ,
                              Thermal(temperature=t_i))
    except InstabilityError as err:
        raise InstabilityError(f"{err} (eta={list(fb.eta)}, zeta={list(fb.zeta)} s/m^2, "
                               f"schedule={list(fb.schedule)})", err.failures, err.partial) from None

    def analytic(i, t):
        # closed form only for a constant, nonzero gain
        if fb.schedule or gains[i] <= 0 or system.heating[i] <= 0:
            return KB * t_i + system.heating[i] * t if gains[i] == 0 else np.full_like(t, math.nan)
        return analytics.energy_trajectory(KB * t_i, t, system.heating[i], gains[i], system.mass[i])

    _series_tables(cfg, series, system, "cool", "cool", analytic)
    tab = Table(["dof", "gain", "n_final", "n_final_se", "n_limit"], ["", "s/m^2", "1", "1", "1"],
                _metadata(cfg, "cool"))
    n_final, n_se = series.mean_occupation[-1], series.se_occupation[-1]
    print(f"{'dof':>6} {'<n> final':>12} {'se':>10} {'n_limit':>10}")
    for i, label in enumerate(system.labels):
        g = gains[i] * fb.multiplier(series.t[-1])
        lim = math.nan
        if g > 0 and system.heating[i] > 0 and system.omega[i] > 0:
            lim = analytics.cooling_limit(system.heating[i], g, system.mass[i], system.omega[i]).n_limit
        tab.add(label, g, n_final[i], n_se[i], lim)
        print(f"{label:>6} {n_final[i]:12.4g} {n_se[i]:10.2g} {lim:10.4g}")
    _write(cfg, tab, "cool_summary")
    return EXIT_OK


def _sweep_kwargs(cfg):
    s = cfg.sweep
    return {"window_relaxations": s.window_relaxations, "rtol": s.rtol, "max_windows": s.max_windows}


def cmd_sweep(cfg: RunConfig) -> int:
    s = cfg.sweep
    particle = _particle(cfg)
    integ = _integrator(cfg, 30)
    vel = cfg.measurement.velocity_noise
    statuses = []
    if s.parameter == "eta":
        char = characterize_focus(particle, _focus(cfg))
        system = _system(cfg, char, (s.dof,))
        tab = Table(["N", "gain", "n_mean", "n_se", "converged", "status", "n_limit"],
                    ["1", "s/m^2", "1", "1", "", "", "1"], _metadata(cfg, "sweep", dof=s.dof))
        r = _size_r(cfg) or system.size_scale
        for N in s.N:
            points = sweep_gain(system, s.eta, MeasurementModel(N, vel), integ, s.dof, _size_r(cfg),
                                **_sweep_kwargs(cfg))
            for p in points:
                g = p.value * (r ** 2 if s.dof.startswith("beta") else 1.0)
                lim = analytics.cooling_limit(system.heating[0], g, system.mass[0], system.omega[0]).n_limit
                tab.add(N, p.value, p.mean, p.se, p.converged, p.status, lim)
                statuses.append(p.status)
                print(f"N={N:<4g} gain={p.value:<10.3g} <n>={p.mean:9.4g} +- {p.se:<8.2g} {p.status}")
        _write(cfg, tab, "sweep")
    else:
        b = cfg.beam
        pts = Table(["N", "delta_n", "waist", "gain", "n_mean", "n_se", "converged", "status"],
                    ["1", "1", "nm", "s/m^2", "1", "1", "", ""], _metadata(cfg, "sweep", dof=s.dof))
        lims = Table(["N", "delta_n", "waist", "n_min", "n_min_se", "argmin_gain"],
                     ["1", "1", "nm", "1", "1", "s/m^2"], _metadata(cfg, "sweep", dof=s.dof))
        for N in s.N:
            for dn in s.delta_n:
                try:
                    w0 = waist_for_delta_n(particle, b.wavelength_nm * 1e-9, b.power_mW * 1e-3, dn)
                except ValueError as err:
                    raise ConfigError("sweep.delta_n", str(err)) from None
                system = _system(cfg, characterize_focus(particle, _focus(cfg, w0)), (s.dof,))
                points = sweep_gain(system, s.eta, MeasurementModel(N, vel), integ, s.dof, _size_r(cfg),
                                    **_sweep_kwargs(cfg))
                for p in points:
                    pts.add(N, dn, w0 * 1e9, p.value, p.mean, p.se, p.converged, p.status)
                    statuses.append(p.status)
                good = [p for p in points if p.status == "ok"]
                best = min(good, key=lambda p: p.mean) if good else None
                row = (best.mean, best.se, best.value) if best else (math.nan, math.nan, math.nan)
                lims.add(N, dn, w0 * 1e9, *row)
                print(f"N={N:<4g} delta_n={dn:<8.3g} min <n>={row[0]:9.4g} +- {row[1]:<8.2g} at gain {row[2]:.3g}")
        _write(cfg, pts, "sweep_points")
        _write(cfg, lims, "limits")
    if statuses and all(st == "unstable" for st in statuses):
        return EXIT_INSTABILITY
    if "ok" not in statuses:
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_analytic(cfg: RunConfig) -> int:
    dof = cfg.analytic.dof
    if cfg.feedback.schedule:
        raise ConfigError("feedback.schedule", "analytic curves need a constant gain")
    char = characterize_focus(_particle(cfg), _focus(cfg))
    system = _system(cfg, char, (dof,))
    fb = _feedback(cfg)
    try:
        gain = float(fb.gain_vector(system)[0])
    except ValueError as err:
        raise ConfigError("feedback.r_nm", str(err)) from None
    if gain <= 0:
        raise ConfigError("feedback.eta" if dof in "xyz" else "feedback.zeta", f"need a positive gain on {dof}")
    edot, m, w = float(system.heating[0]), float(system.mass[0]), float(system.omega[0])
    sol = analytics.cooling_limit(edot, gain, m, w)
    t_i = _temperature(cfg, 0.1)
    e_i = KB * t_i
    duration = cfg.integrator.duration_s
    interval = cfg.integrator.record_interval_s or duration / 100 or 1.0
    t = np.arange(0.0, duration + 0.5 * interval, interval) if duration > 0 else np.zeros(1)
    e = analytics.energy_trajectory(e_i, t, edot, gain, m)
    e = np.atleast_1d(e)
    tab = Table(["t", "E", "n", "T", "E_limit", "n_limit"], ["s", "J", "1", "K", "J", "1"],
                _metadata(cfg, "analytic", dof=dof))
    for ti, ei in zip(t, e):
        tab.add(ti, ei, ei / (system.hbar * w), ei / KB, sol.E_limit, sol.n_limit)
    _write(cfg, tab, "analytic")
    print(f"{dof}: E_limit={sol.E_limit:.6g} J  n_limit={sol.n_limit:.6g}  rate={sol.relaxation_rate:.6g} 1/s")
    if cfg.analytic.overlay:
        integ = _integrator(cfg, 30)
        series = run_ensemble(system, duration, fb, _measurement(cfg), integ, Thermal(temperature=t_i))
        ref = np.atleast_1d(analytics.energy_trajectory(e_i, series.t, edot, gain, m))
        mean, se = series.mean_energy[:, 0], series.se_energy[:, 0]
        ov = Table(["t", "E_sim", "E_sim_se", "E_analytic", "residual", "residual_over_se"],
                   ["s", "J", "J", "J", "J", "1"], _metadata(cfg, "analytic", dof=dof))
        z = (mean - ref) / se
        for row in zip(series.t, mean, se, ref, mean - ref, z):
            ov.add(*row)
        _write(cfg, ov, "overlay")
        print(f"overlay: max |residual|/se = {np.nanmax(np.abs(z)):.3g}")
    return EXIT_OK


COMMANDS = {"table": cmd_table, "heat": cmd_heat, "cool": cmd_cool, "sweep": cmd_sweep, "analytic": cmd_analytic}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--trajectories", type=int, metavar="K")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; repeatable")
    parser = argparse.ArgumentParser(prog="levicool", description="Shot-noise heating and feedback cooling "
                                     "of levitated ellipsoidal nanoparticles.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "table": "trap frequencies, heating rates and ratios per particle",
        "heat": "zero-feedback heating ensemble",
        "cool": "parametric feedback cooling ensemble",
        "sweep": "steady-state occupation vs gain or delta_n",
        "analytic": "closed-form cooling curve, optionally overlaid on a simulation",
    }
    for name, h in helps.items():
        sub.add_parser(name, parents=[common], help=h, description=h)
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load(args.config) if args.config else RunConfig()
    values = {}
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(None, f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip()] = raw
    flags = {"integrator.master_seed": args.seed, "output.dir": args.out,
             "integrator.trajectories": args.trajectories, "output.format": args.format}
    values.update({k: str(v) for k, v in flags.items() if v is not None})
    return cfg.with_values(values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        _save_config(cfg, args.command)
        return COMMANDS[args.command](cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except InstabilityError as err:
        print(f"numerical instability: {err}", file=sys.stderr)
        return EXIT_INSTABILITY
    except NonConvergenceError as err:
        print(f"no convergence: {err}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
