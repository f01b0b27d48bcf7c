"""JSON experiment configuration.

Sections mirror the data types; every physical quantity carries its unit in
the key name.  Unknown keys are rejected with the line they appear on.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .radio import DeploymentConfig, Disk, RadioConfig, Torus

COMMANDS = ("map-curve", "density-curve", "pcf-estimate", "pcf-solve", "pcf-fit",
            "coverage-curve", "validate")

_SCHEMA = {
    "radio": {"tx_power_dbm", "sense_threshold_dbm", "path_loss_exponent", "bandwidth_hz",
              "noise_figure_db", "noiseless"},
    "deployment": {"ap_density_per_m2", "torus_side_m", "disk_radius_m", "master_seed"},
    "sweep": {"lambda_a_per_m2", "beta_db", "t", "coverage"},
    "monte_carlo": {"replications", "conditioning", "raw_dump_path"},
    "pcf": {"bin_width_dinh", "r_max_dinh", "patterns", "torus_side_dinh", "solver_r_max_dinh",
            "solver_n_r", "solver_n_rho_steps", "table_csv", "fits_csv", "fit_r_cut_dinh"},
}
_TOP = set(_SCHEMA) | {"command", "output_path"}


class ConfigError(ValueError):
    def __init__(self, msg, line=None):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


@dataclass
class ExperimentSpec:
    command: str
    radio: RadioConfig
    deployment: DeploymentConfig | None
    sweep: dict = field(default_factory=dict)
    monte_carlo: dict = field(default_factory=dict)
    pcf: dict = field(default_factory=dict)
    output_path: str | None = None
    raw: dict = field(default_factory=dict)


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def parse_config(text: str, command: str | None = None) -> ExperimentSpec:
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object", 1)
    for key, val in raw.items():
        if key not in _TOP:
            raise ConfigError(f"unknown key '{key}'", _line_of(text, key))
        if key in _SCHEMA:
            if not isinstance(val, dict):
                raise ConfigError(f"section '{key}' must be an object", _line_of(text, key))
            for sub in val:
                if sub not in _SCHEMA[key]:
                    raise ConfigError(f"unknown key '{key}.{sub}'", _line_of(text, sub))
    command = command or raw.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"unknown or missing command {command!r}",
                          _line_of(text, "command"))
    try:
        radio = RadioConfig(**raw.get("radio", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), _line_of(text, "radio")) from None
    dep = raw.get("deployment", {})
    deployment = None
    if dep:
        if "torus_side_m" in dep and "disk_radius_m" in dep:
            raise ConfigError("give torus_side_m or disk_radius_m, not both",
                              _line_of(text, "disk_radius_m"))
        window = Torus(dep["torus_side_m"]) if "torus_side_m" in dep else \
            Disk(dep.get("disk_radius_m", 1500.0))
        try:
            deployment = DeploymentConfig(dep.get("ap_density_per_m2", 1e-4), window,
                                          int(dep.get("master_seed", 0)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), _line_of(text, "deployment")) from None
    sweep = raw.get("sweep", {})
    for key, grid in sweep.items():
        if not isinstance(grid, list) or not grid:
            raise ConfigError(f"sweep '{key}' must be a non-empty list", _line_of(text, key))
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"sweep '{key}' must be strictly ascending", _line_of(text, key))
    return ExperimentSpec(command, radio, deployment, sweep, raw.get("monte_carlo", {}),
                          raw.get("pcf", {}), raw.get("output_path"), raw)


def load_config(path, command=None) -> ExperimentSpec:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, command)
