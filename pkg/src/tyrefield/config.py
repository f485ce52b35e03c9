"""Sectioned key=value run configuration.

The format is deliberately flat and diff-friendly: sections [vehicle],
[axle.front], [axle.rear], [scenario], [analysis], [output]; `#` starts a
comment; values are numbers, switches (0/1), or bare words. Unknown keys
are rejected with the offending line number. Defaults reproduce the
published baseline parameter set (vehicle/axle constants and the friction
law), with the sign regularisation defaulting to 1e-6.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields

import numpy as np

from . import friction as fr
from .simulate import SCENARIO_KINDS, Scenario, SimGrid, build_scenario
from .vehicle import FLEXIBLE, RIGID, AxleConfig, VehicleConfig


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass
class AxleSection:
    L: float = 0.11
    F_z: float = 3924.0
    sigma_0: float = 163.0
    sigma_1: float = 0.1
    sigma_2: float = 0.0
    w: float = 2.5e6
    pressure: str = "constant"
    a: float = 0.1
    mu_d: float = 0.8
    mu_s: float = 1.2
    v_s: float = 0.6
    sigma_3: float = 0.0018
    eps: float = 1e-6
    constant_mu: float | None = None


REAR_AXLE_DEFAULTS = dict(L=0.09, F_z=2453.0, sigma_0=408.0)


@dataclass
class VehicleSection:
    m: float = 1300.0
    I_z: float = 2000.0
    l1: float = 1.0
    l2: float = 1.6
    v_x: float = 20.0
    chi_1: int = 0
    chi_2: int = 0
    chi_3: int = 0
    variant: str = RIGID


@dataclass
class ScenarioSection:
    kind: str = "constant_steer"
    delta1_deg: float = 2.0
    delta2_deg: float = 0.0
    omega: float = 2.0
    t_end: float = 2.0
    vy0: float = 0.01
    r0: float = 0.0
    d_xi: float = 0.02
    dt: float = 1e-4
    substeps: int | None = None


@dataclass
class AnalysisSection:
    # steady-force sweep
    v_min: float = -10.0
    v_max: float = 10.0
    v_steps: int = 200
    # equilibrium / linearisation input
    delta1_deg: float = 2.0
    delta2_deg: float = 0.0
    # stability chart
    chi_min: float = 0.5
    chi_max: float = 1.5
    chi_steps: int = 60
    vx_min: float = 0.015
    vx_max: float = 0.6
    vx_steps: int = 40
    lambda1: float = 0.195
    lambda2: float = 0.225
    sigma_max: float = 50.0
    omega_max: float = 0.0  # 0 = speed-scaled default
    workers: int = 4
    # Bode sweep
    omega_lo: float = 0.1
    omega_hi: float = 1000.0
    omega_steps: int = 200


@dataclass
class OutputSection:
    dir: str = "out"
    csv: int = 1
    svg: int = 0


@dataclass
class RunConfig:
    vehicle: VehicleSection = field(default_factory=VehicleSection)
    front: AxleSection = field(default_factory=AxleSection)
    rear: AxleSection = field(default_factory=lambda: AxleSection(**REAR_AXLE_DEFAULTS))
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    output: OutputSection = field(default_factory=OutputSection)
    text: str = ""

    def config_hash(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()[:16]

    def axle_config(self, section: AxleSection, lever: float) -> AxleConfig:
        law = fr.FrictionLaw(mu_d=section.mu_d, mu_s=section.mu_s, v_s=section.v_s,
                             sigma_3=section.sigma_3, eps=section.eps,
                             constant_mu=section.constant_mu)
        pressure = fr.PressureProfile(kind=section.pressure, a=section.a)
        return AxleConfig(L=section.L, F_z=section.F_z, sigma_0=section.sigma_0,
                          sigma_1=section.sigma_1, sigma_2=section.sigma_2,
                          w=section.w, pressure=pressure, friction=law, l=lever)

    def vehicle_config(self) -> VehicleConfig:
        v = self.vehicle
        return VehicleConfig(
            m=v.m, I_z=v.I_z, l1=v.l1, l2=v.l2, v_x=v.v_x,
            chi_1=v.chi_1, chi_2=v.chi_2, chi_3=v.chi_3, variant=v.variant,
            front=self.axle_config(self.front, v.l1),
            rear=self.axle_config(self.rear, -v.l2),
        )

    def scenario_obj(self) -> Scenario:
        s = self.scenario
        if s.kind == "free_response":
            return build_scenario("free_response", T=s.t_end, x0=np.array([s.vy0, s.r0]))
        return build_scenario(s.kind,
                              delta1_amp=np.deg2rad(s.delta1_deg),
                              delta2_amp=np.deg2rad(s.delta2_deg),
                              omega=s.omega, T=s.t_end)

    def sim_grid(self) -> SimGrid:
        s = self.scenario
        return SimGrid(d_xi=s.d_xi, dt=s.dt, substeps=s.substeps)


_SECTION_TYPES = {
    "vehicle": VehicleSection,
    "axle.front": AxleSection,
    "axle.rear": AxleSection,
    "scenario": ScenarioSection,
    "analysis": AnalysisSection,
    "output": OutputSection,
}

_INT_KEYS = {"chi_1", "chi_2", "chi_3", "substeps", "csv", "svg", "v_steps",
             "chi_steps", "vx_steps", "omega_steps", "workers"}
_WORD_KEYS = {"variant", "kind", "pressure", "dir"}
_FLAG_KEYS = {"chi_1", "chi_2", "chi_3", "csv", "svg"}


def _parse_value(key: str, raw: str, line: int):
    if key in _WORD_KEYS:
        return raw
    if key in _INT_KEYS:
        try:
            val = int(raw)
        except ValueError:
            raise ConfigError(f"key {key!r} expects an integer, got {raw!r}", line)
        if key in _FLAG_KEYS and val not in (0, 1):
            raise ConfigError(f"key {key!r} is a 0/1 switch, got {val}", line)
        return val
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key {key!r} expects a number, got {raw!r}", line)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration.

    Parse errors carry line numbers; the assembled physical configurations
    are validated by the owning types before anything runs.
    """
    cfg = RunConfig(text=text)
    sections = {
        "vehicle": cfg.vehicle, "axle.front": cfg.front, "axle.rear": cfg.rear,
        "scenario": cfg.scenario, "analysis": cfg.analysis, "output": cfg.output,
    }
    current: str | None = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw_line.strip()!r}", lineno)
            name = line[1:-1].strip()
            if name not in sections:
                raise ConfigError(
                    f"unknown section [{name}]; expected one of {sorted(sections)}", lineno)
            current = name
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw_line.strip()!r}", lineno)
        if current is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, raw_val = (part.strip() for part in line.split("=", 1))
        target = sections[current]
        known = {f.name for f in fields(target)}
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in section [{current}]", lineno)
        if key == "constant_mu" and raw_val.lower() in ("none", ""):
            setattr(target, key, None)
            continue
        setattr(target, key, _parse_value(key, raw_val, lineno))

    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.vehicle.variant not in (RIGID, FLEXIBLE):
        raise ConfigError(f"variant must be {RIGID!r} or {FLEXIBLE!r}, got {cfg.vehicle.variant!r}")
    if cfg.scenario.kind not in SCENARIO_KINDS:
        raise ConfigError(f"scenario kind must be one of {SCENARIO_KINDS}, got {cfg.scenario.kind!r}")
    try:
        cfg.vehicle_config()
        cfg.sim_grid()
        cfg.scenario_obj()
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    a = cfg.analysis
    if a.chi_steps < 1 or a.vx_steps < 1 or a.v_steps < 2 or a.omega_steps < 2:
        raise ConfigError("analysis step counts must be positive")
    if not (a.vx_min > 0 and a.vx_max > a.vx_min):
        raise ConfigError("analysis requires 0 < vx_min < vx_max")
    if not (a.omega_hi > a.omega_lo > 0):
        raise ConfigError("analysis requires 0 < omega_lo < omega_hi")
