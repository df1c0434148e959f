"""JSON run configuration.

Schema (every section optional)::

    {
      "preset": "reference",
      "params": {"gm0": 1, "r0": 1, "r_cap": 2, "a_const": 0.2857, "gamma": 1.4,
                 "omega": 0.1414 | "omega_sq": 0.02},
      "profile": {"kind": "zero" | "polynomial", "coefficients": [c0, c1, ...]},
      "discretization": {"m": 0, "n_s": 8, "n_zeta": 8, "order": 8,
                         "family": "mixed", "grading_levels": 3},
      "tolerances": {"zero_cluster": 1e-8, "reality": 1e-8, "phase": 1e-8,
                     "resolvent": 1e-10, "inverse_flow": 1e-10},
      "evolution": {"t_final": 10.0, "dt": 0.01},
      "oracle": {"l": 0, "n_r": 256, "n_eig": 6}
    }

Values in ``params`` override the preset.  Without a preset the five
constants other than the rotation rate are required; a missing rotation rate
means no rotation.  A polynomial profile is ``omega(varpi) = sum c_k varpi^k``.
"""
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .atmosphere import PhysicalParams, RotationProfile
from .basis import FAMILIES
from .errors import ConfigError, DomainError

PRESETS = {
    "reference": {"gm0": 1.0, "r0": 1.0, "r_cap": 2.0, "a_const": 2.0 / 7.0, "gamma": 1.4, "omega_sq": 0.02},
}

PARAM_KEYS = ("gm0", "r0", "r_cap", "a_const", "gamma")
SECTIONS = ("preset", "params", "profile", "discretization", "tolerances", "evolution", "oracle")


@dataclass
class Discretization:
    m: int = 0
    n_s: int = 8
    n_zeta: int = 8
    order: int = 8
    family: str = "mixed"
    grading_levels: int = 3


@dataclass
class Tolerances:
    zero_cluster: float = 1e-8
    reality: float = 1e-8
    phase: float = 1e-8
    resolvent: float = 1e-10
    inverse_flow: float = 1e-10


@dataclass
class EvolutionOptions:
    t_final: float = 10.0
    dt: float = 0.01


@dataclass
class OracleOptions:
    l: int = 0
    n_r: int = 256
    n_eig: int = 6


@dataclass
class RunConfig:
    params: PhysicalParams
    profile: RotationProfile = None
    profile_spec: dict = field(default_factory=lambda: {"kind": "zero"})
    discretization: Discretization = field(default_factory=Discretization)
    tolerances: Tolerances = field(default_factory=Tolerances)
    evolution: EvolutionOptions = field(default_factory=EvolutionOptions)
    oracle: OracleOptions = field(default_factory=OracleOptions)
    preset: str = None

    def snapshot(self):
        """Plain dictionary that parses back to the same configuration."""
        params = self.params.as_dict()
        return {
            "params": params,
            "profile": dict(self.profile_spec),
            "discretization": asdict(self.discretization),
            "tolerances": asdict(self.tolerances),
            "evolution": asdict(self.evolution),
            "oracle": asdict(self.oracle),
        }


def _number(section, key, value, kind=float):
    name = f"{section}.{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number", field=name, value=value)
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(f"{name} must be an integer", field=name, value=value)
        return int(value)
    if not np.isfinite(value):
        raise ConfigError(f"{name} must be finite", field=name, value=value)
    return float(value)


def _fill(section, raw, target_cls):
    if raw is None:
        return target_cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{section} must be an object", field=section)
    defaults = target_cls()
    out = {}
    for key, value in raw.items():
        if not hasattr(defaults, key):
            raise ConfigError(f"unknown key {section}.{key}", field=f"{section}.{key}")
        ref = getattr(defaults, key)
        if isinstance(ref, str):
            if not isinstance(value, str):
                raise ConfigError(f"{section}.{key} must be a string", field=f"{section}.{key}")
            out[key] = value
        else:
            out[key] = _number(section, key, value, int if isinstance(ref, int) else float)
    return target_cls(**{**asdict(defaults), **out})


def _params(raw, preset):
    values = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}", field="preset", known=", ".join(PRESETS))
        values.update(PRESETS[preset])
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("params must be an object", field="params")
    for key, value in raw.items():
        if key not in PARAM_KEYS + ("omega", "omega_sq"):
            raise ConfigError(f"unknown key params.{key}", field=f"params.{key}")
        values[key] = _number("params", key, value)
    if "omega" in raw and "omega_sq" in raw:
        raise ConfigError("give either params.omega or params.omega_sq", field="params.omega")
    if "omega" in raw:
        values.pop("omega_sq", None)
    if "omega_sq" in raw:
        values.pop("omega", None)
    for key in PARAM_KEYS:
        if key not in values:
            raise ConfigError(f"missing params.{key}", field=f"params.{key}")
    if "omega_sq" in values:
        if values["omega_sq"] < 0:
            raise ConfigError("params.omega_sq must be nonnegative", field="params.omega_sq")
        omega = float(np.sqrt(values.pop("omega_sq")))
    else:
        omega = values.pop("omega", 0.0)
    gamma = values["gamma"]
    if not 1.0 < gamma < 2.0:
        raise ConfigError("adiabatic exponent must satisfy 1 < gamma < 2", field="params.gamma", value=gamma)
    if not values["r_cap"] > values["r0"]:
        raise ConfigError("params.r_cap must exceed params.r0", field="params.r_cap")
    try:
        return PhysicalParams(omega=omega, **values)
    except DomainError as exc:
        raise ConfigError(str(exc), field="params." + str(exc.details.get("field", "?"))) from exc


def _profile(raw):
    if raw is None:
        return None, {"kind": "zero"}
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError("profile needs a kind", field="profile.kind")
    kind = raw["kind"]
    extra = set(raw) - {"kind", "coefficients"}
    if extra:
        key = sorted(extra)[0]
        raise ConfigError(f"unknown key profile.{key}", field=f"profile.{key}")
    if kind == "zero":
        return None, {"kind": "zero"}
    if kind != "polynomial":
        raise ConfigError(f"unknown profile kind {kind!r}", field="profile.kind")
    coefs = raw.get("coefficients")
    if not isinstance(coefs, list) or not coefs:
        raise ConfigError("profile.coefficients must be a nonempty list", field="profile.coefficients")
    coefs = [_number("profile", "coefficients", c) for c in coefs]
    poly = np.polynomial.Polynomial(coefs)
    return RotationProfile(lambda w: float(poly(w))), {"kind": "polynomial", "coefficients": coefs}


def config_from_dict(raw):
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object", field="<root>")
    for key in raw:
        if key not in SECTIONS:
            raise ConfigError(f"unknown section {key!r}", field=key)
    preset = raw.get("preset")
    if preset is not None and not isinstance(preset, str):
        raise ConfigError("preset must be a string", field="preset")
    params = _params(raw.get("params"), preset)
    profile, spec = _profile(raw.get("profile"))
    disc = _fill("discretization", raw.get("discretization"), Discretization)
    if disc.family not in FAMILIES:
        raise ConfigError(f"unknown basis family {disc.family!r}", field="discretization.family")
    return RunConfig(
        params, profile, spec, disc,
        _fill("tolerances", raw.get("tolerances"), Tolerances),
        _fill("evolution", raw.get("evolution"), EvolutionOptions),
        _fill("oracle", raw.get("oracle"), OracleOptions),
        preset,
    )


def parse_config(path):
    """Read and validate a JSON configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}", field="<file>")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", field="<file>", line=exc.lineno) from exc
    return config_from_dict(raw)


def preset_config(name="reference"):
    return config_from_dict({"preset": name})
