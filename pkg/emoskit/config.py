"""TOML experiment configuration.

Relative data and output paths resolve against the file's directory. A
``[synth]`` section (synthetic data for ``simulate``) travels in the same
file and is validated separately. ``scenario.preset`` names one of the
built-in cost-equivalent scenarios and fills mixtures, cost ratio and budget.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10
    import tomli as tomllib

from pydantic import ValidationError

from .errors import ConfigError
from .schemas.experiment import ExperimentConfig, Mixture
from .schemas.synth import SynthConfig
from .services.synthgen import SCENARIOS

logger = logging.getLogger(__name__)


def read_toml(path: Path | str) -> dict[str, Any]:
    path = Path(path)
    try:
        with path.open("rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found", path=str(path)) from None
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}", path=str(path)) from exc


def _format_errors(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err.get("loc", ()))
        parts.append(f"{where}: {err.get('msg')}" if where else str(err.get("msg")))
    return "; ".join(parts)


def _expand_scenario(scenario: dict[str, Any]) -> dict[str, Any]:
    scenario = dict(scenario)
    preset = scenario.pop("preset", None)
    if preset is not None:
        if preset not in SCENARIOS:
            raise ConfigError(f"unknown scenario preset {preset!r}", known=sorted(SCENARIOS))
        ratio, budget, pairs = SCENARIOS[preset]
        scenario.setdefault("cost_ratio", ratio)
        scenario.setdefault("budget", budget)
        scenario.setdefault("mixtures", [{"low": low, "high": high} for low, high in pairs])
    mixtures = scenario.get("mixtures")
    if mixtures is not None:
        try:
            scenario["mixtures"] = [Mixture.parse(m) if isinstance(m, str) else m for m in mixtures]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return scenario


def _resolve(base: Path, value: Any) -> Any:
    if value is None:
        return None
    path = Path(value)
    return path if path.is_absolute() else base / path


def config_from_dict(raw: dict[str, Any], base_dir: Path | None = None) -> ExperimentConfig:
    raw = dict(raw)
    raw.pop("synth", None)
    if "scenario" in raw:
        raw["scenario"] = _expand_scenario(raw["scenario"])
    if base_dir is not None:
        data = dict(raw.get("data", {}))
        for key in ("directory", "observations", "forecasts", "stations"):
            if key in data:
                data[key] = _resolve(base_dir, data[key])
        if data:
            raw["data"] = data
        output = dict(raw.get("output", {}))
        if "directory" in output:
            output["directory"] = _resolve(base_dir, output["directory"])
            raw["output"] = output
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {_format_errors(exc)}") from exc


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    config = config_from_dict(read_toml(path), base_dir=path.resolve().parent)
    logger.debug("Loaded configuration from %s", path)
    return config


def load_synth_config(path: Path | str) -> SynthConfig | None:
    """The ``[synth]`` section of a config file, or None if it has none."""
    section = read_toml(path).get("synth")
    if section is None:
        return None
    try:
        return SynthConfig.model_validate(section)
    except ValidationError as exc:
        raise ConfigError(f"invalid [synth] section: {_format_errors(exc)}", path=str(path)) from exc


__all__ = ["read_toml", "config_from_dict", "load_config", "load_synth_config"]
