"""Flat ``section.key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment.  Lists are
comma-separated, schedules are ``time:multiplier`` pairs separated by
commas.  Unknown keys are rejected.  ``to_text`` writes every key so a
written file re-parses to an identical config.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field, fields

from ..material import PRESETS


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


def _f(kind, default, help_=""):
    return field(default=default, metadata={"kind": kind, "help": help_})


@dataclass(frozen=True)
class ParticleSection:
    material: str = _f("str", "diamond", "preset name: diamond or silica")
    epsilon: float | None = _f("optfloat", None, "relative dielectric constant, overrides the preset")
    density: float | None = _f("optfloat", None, "kg/m^3, overrides the preset")
    a_nm: tuple = _f("floats", (48.0,), "short half-axes; several values give several particles")
    b_nm: tuple = _f("floats", (53.0,), "long half-axes, paired with a_nm")


@dataclass(frozen=True)
class BeamSection:
    wavelength_nm: float = _f("float", 1064.0)
    power_mW: float = _f("float", 70.0)
    NA: float = _f("float", 0.9)
    waist_nm: float | None = _f("optfloat", None, "explicit waist, overrides NA")


@dataclass(frozen=True)
class FeedbackSection:
    eta: tuple = _f("floats", (0.0, 0.0, 0.0), "s/m^2 for x, y, z")
    zeta: tuple = _f("floats", (0.0, 0.0), "s/m^2 for beta1, beta2")
    r_nm: float | None = _f("optfloat", None, "libration length scale; default sqrt(a^2 + b^2)")
    schedule: tuple = _f("schedule", (), "time_s:multiplier pairs")
    coupling: str = _f("str", "shared", "shared or independent modulation")


@dataclass(frozen=True)
class MeasurementSection:
    N: float = _f("float", 0.0)
    velocity_noise: str = _f("str", "omega", "omega, none or finite_difference")


@dataclass(frozen=True)
class IntegratorSection:
    steps_per_period: int = _f("int", 100)
    trajectories: int | None = _f("optint", None, "default: 100 for heat, 30 otherwise")
    master_seed: int = _f("int", 0)
    duration_s: float = _f("float", 0.01)
    record_interval_s: float | None = _f("optfloat", None, "default: 100 records per run")
    scheme: str = _f("str", "gauss4", "gauss4 or rk4")
    workers: int | None = _f("optint", None)
    delta_limit: float = _f("float", 1.0)


@dataclass(frozen=True)
class InitialSection:
    temperature_K: float | None = _f("optfloat", None, "default: 1e-6 for heat, 0.1 otherwise")


@dataclass(frozen=True)
class SimulationSection:
    dofs: tuple = _f("strs", ("x", "y", "z", "beta1", "beta2"))


@dataclass(frozen=True)
class SweepSection:
    parameter: str = _f("str", "eta", "eta or delta_n")
    dof: str = _f("str", "x")
    eta: tuple = _f("floats", (1e11, 3e11, 1e12, 3e12, 1e13), "gains in s/m^2")
    delta_n: tuple = _f("floats", (0.026, 0.083, 0.2, 0.41), "targets for delta_n scans")
    N: tuple = _f("floats", (0.0, 2.0))
    window_relaxations: float = _f("float", 50.0)
    rtol: float = _f("float", 0.01)
    max_windows: int = _f("int", 20)


@dataclass(frozen=True)
class AnalyticSection:
    dof: str = _f("str", "x")
    overlay: bool = _f("bool", False, "also simulate and write residuals")


@dataclass(frozen=True)
class OutputSection:
    dir: str = _f("str", "levicool-out")
    format: str = _f("str", "csv", "csv (with JSON mirror) or json")


@dataclass(frozen=True)
class RunConfig:
    particle: ParticleSection = field(default_factory=ParticleSection)
    beam: BeamSection = field(default_factory=BeamSection)
    feedback: FeedbackSection = field(default_factory=FeedbackSection)
    measurement: MeasurementSection = field(default_factory=MeasurementSection)
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    initial: InitialSection = field(default_factory=InitialSection)
    simulation: SimulationSection = field(default_factory=SimulationSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    analytic: AnalyticSection = field(default_factory=AnalyticSection)
    output: OutputSection = field(default_factory=OutputSection)

    def with_values(self, values: dict) -> "RunConfig":
        """Copy with ``{"section.key": raw_string}`` overrides applied."""
        sections = {f.name: getattr(self, f.name) for f in fields(self)}
        for key, raw in values.items():
            sec, name, spec = _lookup(key)
            parsed = _parse_value(key, spec.metadata["kind"], raw)
            sections[sec] = dataclasses.replace(sections[sec], **{name: parsed})
        cfg = RunConfig(**sections)
        cfg.validate()
        return cfg

    def replace(self, key: str, value) -> "RunConfig":
        sec, name, _ = _lookup(key)
        return dataclasses.replace(self, **{sec: dataclasses.replace(getattr(self, sec), **{name: value})})

    def validate(self):
        p = self.particle
        if p.material not in PRESETS and (p.epsilon is None or p.density is None):
            raise ConfigError("particle.material", f"unknown preset {p.material!r}; give epsilon and density")
        if len(p.a_nm) != len(p.b_nm) or not p.a_nm:
            raise ConfigError("particle.b_nm", "a_nm and b_nm need the same, non-zero length")
        if len(self.feedback.eta) != 3:
            raise ConfigError("feedback.eta", "need three values")
        if len(self.feedback.zeta) != 2:
            raise ConfigError("feedback.zeta", "need two values")
        if self.sweep.parameter not in ("eta", "delta_n"):
            raise ConfigError("sweep.parameter", "must be eta or delta_n")
        if self.output.format not in ("csv", "json"):
            raise ConfigError("output.format", "must be csv or json")
        if not 0 <= self.integrator.master_seed < 2 ** 64:
            raise ConfigError("integrator.master_seed", "must be an unsigned 64-bit integer")
        for key in ("sweep.dof", "analytic.dof"):
            if _get(self, key) not in ("x", "y", "z", "beta1", "beta2"):
                raise ConfigError(key, "must be one of x, y, z, beta1, beta2")
        for d in self.simulation.dofs:
            if d not in ("x", "y", "z", "beta1", "beta2"):
                raise ConfigError("simulation.dofs", f"unknown DOF {d!r}")

    def to_text(self) -> str:
        lines = []
        for sec in fields(self):
            obj = getattr(self, sec.name)
            for f in fields(obj):
                lines.append(f"{sec.name}.{f.name} = {_format_value(f.metadata['kind'], getattr(obj, f.name))}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Hash of everything except output settings."""
        text = "".join(l + "\n" for l in self.to_text().splitlines() if not l.startswith("output."))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _get(cfg, key):
    sec, name = key.split(".")
    return getattr(getattr(cfg, sec), name)


def _lookup(key):
    parts = key.strip().split(".")
    if len(parts) != 2:
        raise ConfigError(key, "keys look like section.name")
    sec, name = parts
    sec_fields = {f.name: f for f in fields(RunConfig)}
    if sec not in sec_fields:
        raise ConfigError(key, f"unknown section {sec!r}")
    inner = {f.name: f for f in fields(sec_fields[sec].default_factory)}
    if name not in inner:
        raise ConfigError(key, f"unknown key; {sec} has {', '.join(inner)}")
    return sec, name, inner[name]


def _num(key, s, conv=float):
    try:
        v = conv(s.strip())
    except ValueError:
        raise ConfigError(key, f"cannot parse {s.strip()!r} as {conv.__name__}") from None
    if conv is float and not math.isfinite(v):
        raise ConfigError(key, "value must be finite")
    return v


def _parse_value(key, kind, raw: str):
    raw = raw.strip()
    none = raw.lower() in ("", "none")
    if kind == "str":
        return raw
    if kind == "float":
        return _num(key, raw)
    if kind == "int":
        return _num(key, raw, int)
    if kind == "optfloat":
        return None if none else _num(key, raw)
    if kind == "optint":
        return None if none else _num(key, raw, int)
    if kind == "bool":
        if raw.lower() in ("true", "yes", "1", "on"):
            return True
        if raw.lower() in ("false", "no", "0", "off"):
            return False
        raise ConfigError(key, f"cannot parse {raw!r} as a boolean")
    if kind == "floats":
        return () if none else tuple(_num(key, s) for s in raw.split(","))
    if kind == "strs":
        return () if none else tuple(s.strip() for s in raw.split(","))
    if kind == "schedule":
        if none:
            return ()
        out = []
        for item in raw.split(","):
            t, sep, m = item.partition(":")
            if not sep:
                raise ConfigError(key, f"schedule entries look like time:multiplier, got {item.strip()!r}")
            out.append((_num(key, t), _num(key, m)))
        return tuple(out)
    raise AssertionError(kind)


def _format_value(kind, value) -> str:
    if value is None:
        return "none"
    if kind in ("float", "optfloat"):
        return repr(float(value))
    if kind == "bool":
        return "true" if value else "false"
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value) if value else "none"
    if kind == "strs":
        return ", ".join(value) if value else "none"
    if kind == "schedule":
        return ", ".join(f"{t!r}:{m!r}" for t, m in value) if value else "none"
    return str(value)


def parse_text(text: str, base: RunConfig | None = None) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise ConfigError(None, f"line {lineno}: expected key = value")
        key = key.strip()
        _lookup(key)
        if key in values:
            raise ConfigError(key, f"line {lineno}: duplicate key")
        values[key] = raw
    return (base or RunConfig()).with_values(values)


def load(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(None, f"cannot read config {path}: {err.strerror}") from None
    return parse_text(text)
