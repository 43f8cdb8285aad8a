"""Scenario configuration: TOML parsing, validation and serialization.

Defaults reproduce the reference setup: N = 8 molecules, collective coupling
g_c√N = 0.5 eV at resonance ω_c = ω_eg = 4.3 eV, three-level parameters
ω_tg = 3.9 eV and c_et = 0.05 eV, decay rates κ = 1/50 fs⁻¹ and
Γ = 1/1000 fs⁻¹, 1 ps horizon sampled every 5 fs.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .basis import MoleculeLevel
from .operators import ModelParameters


class ConfigError(ValueError):
    """Invalid scenario configuration; message names the offending field."""


_MODELS = ("two_level", "three_level")
_INITIALS = ("pure", "mixed")
_TARGETS = ("E", "T")
_METHODS = ("rk45", "adams")
_OUTPUT_KINDS = ("ladder", "trajectory", "counting")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    model: str = "two_level"
    n_molecules: int = 8
    n_exc_initial: int = 3
    initial: str = "pure"
    initial_target: str = "E"

    omega_eg: float = 4.3
    omega_c: float = 4.3
    collective_coupling: float | None = 0.5
    g_c: float | None = None
    omega_tg: float | None = 3.9
    c_et: float | None = 0.05

    kappa: float = 1.0 / 50.0
    gamma: float = 1.0 / 1000.0
    t_end: float = 1000.0
    sample_dt: float = 5.0
    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "adams"
    group_by_s: bool = False

    outputs: tuple[str, ...] = ("trajectory",)
    output_dir: str = "out"

    def validate(self) -> "ScenarioConfig":
        def fail(field_name, message):
            raise ConfigError(f"{field_name}: {message}")

        if self.model not in _MODELS:
            fail("scenario.model", f"expected one of {_MODELS}, got {self.model!r}")
        if self.n_molecules < 1:
            fail("scenario.molecules", f"must be >= 1, got {self.n_molecules}")
        if not 0 <= self.n_exc_initial <= self.n_molecules:
            fail(
                "scenario.initial_excitations",
                f"must lie in [0, N={self.n_molecules}], got {self.n_exc_initial}",
            )
        if self.initial not in _INITIALS:
            fail("scenario.initial", f"expected one of {_INITIALS}, got {self.initial!r}")
        if self.initial_target not in _TARGETS:
            fail(
                "scenario.initial_target",
                f"expected one of {_TARGETS}, got {self.initial_target!r}",
            )
        if self.initial_target == "T" and self.model != "three_level":
            fail("scenario.initial_target", "T excitations require model = 'three_level'")
        if (self.collective_coupling is None) == (self.g_c is None):
            fail(
                "parameters.collective_coupling",
                "give exactly one of collective_coupling or g_c",
            )
        if self.model == "three_level" and (self.omega_tg is None or self.c_et is None):
            fail("parameters.omega_tg", "three-level model needs omega_tg and c_et")
        for name in ("omega_eg", "omega_c", "kappa", "gamma", "t_end", "sample_dt",
                     "rtol", "atol"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                fail(f"dynamics.{name}", f"must be a finite number, got {value!r}")
        if self.kappa < 0 or self.gamma < 0:
            fail("dynamics.kappa", "decay rates must be non-negative")
        if self.t_end <= 0:
            fail("dynamics.t_end", f"must be positive, got {self.t_end}")
        if not 0 < self.sample_dt <= self.t_end:
            fail("dynamics.sample_dt", f"must lie in (0, t_end], got {self.sample_dt}")
        if self.method not in _METHODS:
            fail("dynamics.method", f"expected one of {_METHODS}, got {self.method!r}")
        unknown = [k for k in self.outputs if k not in _OUTPUT_KINDS]
        if unknown:
            fail("outputs.kinds", f"unknown output kinds {unknown}; pick from {_OUTPUT_KINDS}")
        return self

    @property
    def levels(self) -> int:
        return 3 if self.model == "three_level" else 2

    @property
    def initial_level(self) -> MoleculeLevel:
        return MoleculeLevel[self.initial_target]

    def model_parameters(self) -> ModelParameters:
        three = self.model == "three_level"
        g_c = self.g_c
        if g_c is None:
            g_c = self.collective_coupling / math.sqrt(self.n_molecules)
        return ModelParameters(
            n_molecules=self.n_molecules,
            omega_eg=self.omega_eg,
            omega_c=self.omega_c,
            g_c=g_c,
            omega_tg=self.omega_tg if three else None,
            c_et=self.c_et if three else None,
        )


_SECTIONS = {
    "scenario": {
        "name": "name",
        "model": "model",
        "molecules": "n_molecules",
        "initial_excitations": "n_exc_initial",
        "initial": "initial",
        "initial_target": "initial_target",
    },
    "parameters": {
        "omega_eg": "omega_eg",
        "omega_c": "omega_c",
        "collective_coupling": "collective_coupling",
        "g_c": "g_c",
        "omega_tg": "omega_tg",
        "c_et": "c_et",
    },
    "dynamics": {
        "kappa": "kappa",
        "gamma": "gamma",
        "t_end": "t_end",
        "sample_dt": "sample_dt",
        "rtol": "rtol",
        "atol": "atol",
        "method": "method",
        "group_by_s": "group_by_s",
    },
    "outputs": {
        "kinds": "outputs",
        "directory": "output_dir",
    },
}

_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def parse_config(data: dict, source: str = "<config>") -> ScenarioConfig:
    """Build a validated ScenarioConfig from parsed TOML data.

    Unknown sections or keys are rejected with the offending name, so typos
    never silently fall back to defaults.
    """
    kwargs = {}
    # explicit g_c disables the default collective coupling (and vice versa)
    params = data.get("parameters", {})
    if isinstance(params, dict) and "g_c" in params and "collective_coupling" not in params:
        kwargs["collective_coupling"] = None
    for section, content in data.items():
        if section not in _SECTIONS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"{source}: section [{section}] must be a table")
        mapping = _SECTIONS[section]
        for key, value in content.items():
            if key not in mapping:
                raise ConfigError(f"{source}: unknown key {section}.{key}")
            field_name = mapping[key]
            if field_name == "outputs":
                if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                    raise ConfigError(f"{source}: outputs.kinds must be a list of strings")
                value = tuple(value)
            if isinstance(value, int) and not isinstance(value, bool) and \
                    "float" in str(_FIELD_TYPES[field_name]):
                value = float(value)
            kwargs[field_name] = value
    try:
        config = ScenarioConfig(**kwargs).validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return config


def load_config(path) -> ScenarioConfig:
    with open(path, "rb") as handle:
        try:
            data = tomllib.load(handle)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: TOML syntax error: {exc}") from None
    return parse_config(data, source=str(path))


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        text = repr(value)
        return text if any(c in text for c in ".eE") else text + ".0"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def serialize_config(config: ScenarioConfig) -> str:
    """Render a config as TOML; parse(serialize(c)) == c."""
    lines = []
    for section, mapping in _SECTIONS.items():
        lines.append(f"[{section}]")
        for key, field_name in mapping.items():
            value = getattr(config, field_name)
            if value is None:
                continue
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def config_hash(config: ScenarioConfig) -> str:
    """Stable hash of the fully resolved configuration."""
    payload = json.dumps(asdict(config), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def with_overrides(config: ScenarioConfig, **changes) -> ScenarioConfig:
    """Copy with replaced fields, re-validated."""
    return replace(config, **changes).validate()
