"""Loader for training configuration files (JSON or TOML)"""

import dataclasses
import json
import tomllib
import typing
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar

from ..errors import ConfigError
from ..models.configs import TrainConfig

T = TypeVar('T')


class ConfigLoadError(ConfigError):
    """Exception raised when a configuration file cannot be loaded"""
    pass


def build_dataclass(cls: Type[T], data: Dict[str, Any]) -> T:
    """
    Build a (possibly nested) config dataclass from a plain dict.

    Unknown keys are rejected so typos do not silently fall back to defaults.

    Raises:
        ConfigError: On unknown keys, bad types or failed validation
    """
    if not isinstance(data, dict):
        raise ConfigError(f"{cls.__name__} expects a table/object, got {type(data).__name__}")

    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"Unknown {cls.__name__} keys: {', '.join(unknown)}")

    kwargs = {}
    for name, value in data.items():
        hint = hints.get(name)
        if dataclasses.is_dataclass(hint) and isinstance(value, dict):
            value = build_dataclass(hint, value)
        kwargs[name] = value

    try:
        obj = cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid {cls.__name__}: {str(e)}") from e

    validate = getattr(obj, 'validate', None)
    if callable(validate):
        validate()
    return obj


def dataclass_to_dict(obj: Any) -> Any:
    """JSON-friendly dict of a config dataclass (enums become their values)"""
    if dataclasses.is_dataclass(obj):
        return {f.name: dataclass_to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (list, tuple)):
        return [dataclass_to_dict(v) for v in obj]
    return obj


class ConfigLoader:
    """
    Load and validate a TrainConfig from a JSON or TOML file.

    The format is chosen by file extension (.json / .toml).
    """

    def __init__(self, config_path: Optional[Path] = None):
        self.config_path = Path(config_path) if config_path else None
        self._config: Optional[TrainConfig] = None

    def load(self) -> TrainConfig:
        """
        Load the configuration file.

        Returns:
            Validated TrainConfig

        Raises:
            ConfigLoadError: If the file is missing or cannot be decoded
            ConfigError: If the configuration is invalid
        """
        if self.config_path is None:
            self._config = build_dataclass(TrainConfig, {})
            return self._config

        if not self.config_path.exists():
            raise ConfigLoadError(f"Config file not found: {self.config_path}")

        suffix = self.config_path.suffix.lower()
        try:
            if suffix == '.toml':
                with open(self.config_path, 'rb') as f:
                    data = tomllib.load(f)
            elif suffix == '.json':
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    data = json.load(f)
            else:
                raise ConfigLoadError(
                    f"Unsupported config format '{suffix}'. Use .json or .toml"
                )
        except json.JSONDecodeError as e:
            raise ConfigLoadError(f"Invalid JSON in config file: {str(e)}") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigLoadError(f"Invalid TOML in config file: {str(e)}") from e

        self._config = self.from_dict(data)
        return self._config

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> TrainConfig:
        """Build a validated TrainConfig from a plain dict"""
        return build_dataclass(TrainConfig, data)

    def get_config(self) -> Optional[TrainConfig]:
        """Loaded configuration, or None if load() has not run"""
        return self._config
