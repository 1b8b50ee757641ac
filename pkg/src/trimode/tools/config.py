"""Flat `key = value` scenario files with `#` comments.

Lines are tokenized by python-dotenv, which keeps the line number of every
binding, so a bad entry is reported where it sits in the file.
"""
from pathlib import Path
from typing import Any

from dotenv.parser import parse_stream
from pydantic import ValidationError

from trimode.errors import ConfigError
from trimode.models import FockDims, ScenarioConfig, SystemParams

PARAM_KEYS = {"omega": "omega", "lambda": "lam", "g": "g", "gamma": "gamma", "alpha": "alpha"}
SCENARIO_KEYS = {
    "t_max": "t_max",
    "steps": "steps",
    "engines": "engines",
    "dims": "dims",
    "tol": "series_tol",
    "leakage": "leakage_budget",
    "lindblad_step": "lindblad_step",
    "dissipator": "dissipator",
    "out": "out",
}
KEYS = {"preset", *PARAM_KEYS, *SCENARIO_KEYS}


def parse_dims(raw: str) -> FockDims:
    parts = [p for p in raw.replace("x", ",").split(",") if p.strip()]
    sizes = [int(p) for p in parts]
    if len(sizes) == 1:
        return FockDims.of(sizes[0])
    if len(sizes) == 3:
        return FockDims.of(*sizes)
    raise ValueError(f"dims needs one or three sizes, got {raw!r}")


def parse_value(key: str, raw: str, line: int | None = None) -> Any:
    try:
        if key in ("omega", "lambda", "g", "gamma", "t_max", "tol", "leakage", "lindblad_step"):
            return float(raw)
        if key == "steps":
            return int(raw)
        if key == "alpha":
            return complex(raw.replace(" ", ""))
        if key == "engines":
            return [e.strip() for e in raw.split(",") if e.strip()]
        if key == "dims":
            return parse_dims(raw)
        if key == "out":
            return Path(raw)
        if key in ("preset", "dissipator"):
            return raw.strip()
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {raw!r} ({e})", line) from e
    raise ConfigError(f"unknown key {key!r}", line)


def _binding_line(binding) -> int:
    # a binding starts at the blank lines before it
    text = binding.original.string
    leading = text[: len(text) - len(text.lstrip())]
    return binding.original.line + leading.count("\n")


def load_config(path: Path) -> dict[str, Any]:
    values = {}
    with open(path, encoding="utf-8") as stream:
        for binding in parse_stream(stream):
            line = _binding_line(binding)
            if binding.error:
                raise ConfigError(f"cannot parse {binding.original.string.strip()!r}", line)
            if binding.key is None:
                continue
            key = binding.key.strip().lower()
            if key not in KEYS:
                raise ConfigError(f"unknown key {key!r}", line)
            if binding.value is None:
                raise ConfigError(f"missing value for {key}", line)
            values[key] = parse_value(key, binding.value, line)
    return values


def build_scenario(overrides: dict[str, Any], base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Merge typed overrides onto a base scenario (or onto defaults when there is none)."""
    params = base.params.model_dump() if base is not None else {}
    scenario = base.model_dump(exclude={"params"}) if base is not None else {}
    for key, value in overrides.items():
        if key in PARAM_KEYS:
            params[PARAM_KEYS[key]] = value
        elif key in SCENARIO_KEYS:
            scenario[SCENARIO_KEYS[key]] = value
    if base is None and not {"omega", "gamma"} <= params.keys():
        raise ConfigError("omega and gamma are required when no preset is given")
    try:
        return ScenarioConfig(**scenario, params=SystemParams(**params))
    except ValidationError as e:
        raise ConfigError(str(e)) from e
