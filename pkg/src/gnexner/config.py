"""Run configuration: the dataclass, the INI grammar, parsing and serialization.

Configurations are INI text (configparser dialect) with the sections
[run], [mesh], [physics], [stepping], [sediment], [gauges], [soliton], and
[wavemaker].  A minimal file names a scenario and inherits that scenario's
reference values; every key is optional except run.scenario.  Unknown
sections or keys are rejected, and semantic validation reports all
violations at once.
"""

from __future__ import annotations

import configparser
import io
import math
import os
from dataclasses import dataclass, fields, replace

from .errors import ConfigError

MODEL_ALIASES = {
    "nswe": "NSWE",
    "gn": "GN",
    "coupled": "CoupledGN",
    "coupledgn": "CoupledGN",
    "coupled_gn": "CoupledGN",
    "couplednswe": "CoupledNSWE",
    "coupled_nswe": "CoupledNSWE",
    "decoupled": "DecoupledGN",
    "decoupledgn": "DecoupledGN",
    "decoupled_gn": "DecoupledGN",
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one run."""

    scenario: str
    model: str = "GN"
    # mesh
    x_min: float = 0.0
    x_max: float = 1.0
    n_elements: int = 100
    # physics
    g: float = 9.81
    H0: float = 1.0
    alpha: float = 1.0
    Cf: float = 0.0
    friction_on: bool = False
    # stepping
    dt: float | None = None
    cfl: float | None = None
    h0_min: float | None = None           # None: 1e-4 * H0
    breaking_threshold: float = 1.0
    breaking_relax_steps: int = 10
    limiter_M: float = 0.0
    bed_limiter_M: float = 0.0
    tau_hdg: float = 1.0
    bed_update_every: int = 1
    dispersive_min_depth: float | None = None
    # sediment
    law_name: str = "grass"
    law_A: float = 4.75e-3
    law_m: float = 3.0
    # initial solitary wave (where the scenario uses one)
    a0: float = 0.1
    x0: float = 0.0
    # wavemaker (where the scenario uses one)
    wavemaker_amplitude: float = 0.01
    wavemaker_period: float = 2.2
    wavemaker_ramp_periods: float = 2.0
    wavemaker_file: str | None = None
    # run plan
    gauges: tuple = ()
    out_dir: str | None = None
    output_every: int = 1
    end_time: float = 1.0
    waves: int = 1
    seed: int = 0                          # reserved; physics is deterministic

    @property
    def effective_h0_min(self) -> float:
        return self.h0_min if self.h0_min is not None else 1e-4 * self.H0


# section -> {key: (field name, type tag)}
_SCHEMA = {
    "run": {
        "scenario": ("scenario", "str"),
        "model": ("model", "model"),
        "end_time": ("end_time", "float"),
        "waves": ("waves", "int"),
        "out_dir": ("out_dir", "str"),
        "output_every": ("output_every", "int"),
        "seed": ("seed", "int"),
    },
    "mesh": {
        "x_min": ("x_min", "float"),
        "x_max": ("x_max", "float"),
        "n_elements": ("n_elements", "int"),
    },
    "physics": {
        "g": ("g", "float"),
        "h0": ("H0", "float"),
        "alpha": ("alpha", "float"),
        "cf": ("Cf", "float"),
        "friction": ("friction_on", "bool"),
    },
    "stepping": {
        "dt": ("dt", "float"),
        "cfl": ("cfl", "float"),
        "h0_min": ("h0_min", "float"),
        "breaking_threshold": ("breaking_threshold", "float"),
        "breaking_relax_steps": ("breaking_relax_steps", "int"),
        "limiter_m": ("limiter_M", "float"),
        "bed_limiter_m": ("bed_limiter_M", "float"),
        "tau_hdg": ("tau_hdg", "float"),
        "bed_update_every": ("bed_update_every", "int"),
        "dispersive_min_depth": ("dispersive_min_depth", "float"),
    },
    "sediment": {
        "law": ("law_name", "str"),
        "a": ("law_A", "float"),
        "m": ("law_m", "float"),
    },
    "gauges": {
        "positions": ("gauges", "floats"),
    },
    "soliton": {
        "a0": ("a0", "float"),
        "x0": ("x0", "float"),
    },
    "wavemaker": {
        "amplitude": ("wavemaker_amplitude", "float"),
        "period": ("wavemaker_period", "float"),
        "ramp_periods": ("wavemaker_ramp_periods", "float"),
        "file": ("wavemaker_file", "str"),
    },
}


def _convert(raw: str, kind: str, where: str, errors: list):
    raw = raw.strip()
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "floats":
            if not raw:
                return ()
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
        if kind == "model":
            canon = MODEL_ALIASES.get(raw.lower(), raw)
            return canon
        return raw
    except ValueError:
        errors.append(f"{where}: cannot parse {raw!r} as {kind}")
        return None


def normalize_model(name: str) -> str:
    return MODEL_ALIASES.get(name.lower(), name)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate configuration text into a ScenarioConfig.

    Raises ConfigError listing every syntax or semantic violation found.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        loc = f" (line {line})" if line else ""
        raise ConfigError([f"syntax error{loc}: {exc.message.splitlines()[0]}"]) from exc

    errors: list[str] = []
    values: dict[str, object] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            errors.append(f"unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                errors.append(f"unknown key {key!r} in section [{section}]")
                continue
            target, kind = _SCHEMA[section][key]
            val = _convert(raw, kind, f"[{section}] {key}", errors)
            if val is not None:
                values[target] = val

    if "scenario" not in values:
        errors.append("[run] scenario is required")
    if errors:
        raise ConfigError(errors)

    from .scenarios import default_config  # local import: scenarios depends on this module
    try:
        config = default_config(values.pop("scenario"))
    except KeyError as exc:
        raise ConfigError([str(exc.args[0])]) from exc

    # an explicit step policy replaces the scenario's, not augments it
    if "cfl" in values and "dt" not in values:
        config = replace(config, dt=None)
    if "dt" in values and "cfl" not in values:
        config = replace(config, cfl=None)
    config = replace(config, **values)
    validate_config(config)
    return config


def validate_config(config: ScenarioConfig):
    """Semantic validation; raises ConfigError listing all violations."""
    errors = []
    if config.model not in ("NSWE", "GN", "CoupledNSWE", "CoupledGN", "DecoupledGN"):
        errors.append(f"unknown model {config.model!r}")
    if (config.dt is None) == (config.cfl is None):
        errors.append("exactly one of stepping.dt and stepping.cfl must be set")
    if config.dt is not None and not config.dt > 0:
        errors.append("stepping.dt must be positive")
    if config.cfl is not None and not 0 < config.cfl <= 1:
        errors.append("stepping.cfl must lie in (0, 1]")
    if not config.end_time > 0:
        errors.append("run.end_time must be positive")
    if config.output_every < 1:
        errors.append("run.output_every must be >= 1")
    if config.waves < 1:
        errors.append("run.waves must be >= 1")
    if not config.x_min < config.x_max:
        errors.append("mesh.x_min must be < mesh.x_max")
    if config.n_elements < 1:
        errors.append("mesh.n_elements must be >= 1")
    if not config.g > 0:
        errors.append("physics.g must be positive")
    if not config.H0 > 0:
        errors.append("physics.h0 must be positive")
    if not 1.0 <= config.alpha <= 1.5:
        errors.append("physics.alpha must lie in [1.0, 1.5]")
    if config.h0_min is not None and not config.h0_min > 0:
        errors.append("stepping.h0_min must be positive")
    if config.law_name not in ("grass",):
        errors.append(f"unknown sediment law {config.law_name!r}")
    if config.law_A < 0:
        errors.append("sediment.a must be >= 0")
    if not 1.0 <= config.law_m <= 3.0:
        errors.append("sediment.m must lie in [1, 3]")
    if config.bed_update_every < 1:
        errors.append("stepping.bed_update_every must be >= 1")
    for x in config.gauges:
        if not config.x_min <= x <= config.x_max:
            errors.append(f"gauge position {x} outside the mesh")
    if config.wavemaker_file is not None and not os.path.exists(config.wavemaker_file):
        errors.append(f"wavemaker.file does not exist: {config.wavemaker_file}")
    if errors:
        raise ConfigError(errors)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def serialize_config(config: ScenarioConfig) -> str:
    """Emit INI text that parses back to an equal configuration."""
    out = io.StringIO()
    for section, keys in _SCHEMA.items():
        lines = []
        for key, (target, _kind) in keys.items():
            value = getattr(config, target)
            if value is None:
                continue
            if target == "gauges" and not value:
                continue
            lines.append(f"{key} = {_format_value(value)}")
        if lines:
            out.write(f"[{section}]\n")
            out.write("\n".join(lines))
            out.write("\n\n")
    return out.getvalue()
