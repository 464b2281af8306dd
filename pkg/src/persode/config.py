"""Service configuration: key=value file plus environment overrides.

Config files are flat `key = value` lines with '#' comments. Environment
variables named PERSODE_<KEY> override file values; credentials are only
ever referenced by env var name (see providers).
"""

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ValidationError
from .providers import CHAT_KEY_ENV, IMAGE_KEY_ENV, ProviderConfig
from .store import DATA_DIR_ENV, DEFAULT_DATA_DIR

ENV_PREFIX = "PERSODE_"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8600
    data_dir: str = DEFAULT_DATA_DIR
    mock_providers: bool = True
    chat_endpoint: str = ""
    image_endpoint: str = ""
    timeout_s: float = 30.0
    max_retries: int = 2

    def chat_provider_config(self) -> ProviderConfig:
        return ProviderConfig(
            endpoint=self.chat_endpoint,
            credential_env=CHAT_KEY_ENV,
            timeout_s=self.timeout_s,
            max_retries=self.max_retries,
        )

    def image_provider_config(self) -> ProviderConfig:
        return ProviderConfig(
            endpoint=self.image_endpoint,
            credential_env=IMAGE_KEY_ENV,
            timeout_s=self.timeout_s,
            max_retries=self.max_retries,
        )


def parse_config_file(path: Path | str) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValidationError(f"config line {lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip().strip("\"'")
    return values


def _coerce(name: str, value: str, target_type: type):
    try:
        if target_type is bool:
            lowered = value.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        return target_type(value)
    except ValueError:
        raise ValidationError(f"config value for {name} is not a valid {target_type.__name__}", field=name)


def load_service_config(path: Path | str | None = None, overrides: dict | None = None) -> ServiceConfig:
    """Merge defaults <- config file <- PERSODE_* env <- explicit overrides."""
    config = ServiceConfig()
    if os.environ.get(DATA_DIR_ENV):
        config.data_dir = os.environ[DATA_DIR_ENV]
    layers = []
    if path is not None:
        layers.append(parse_config_file(path))
    env_layer = {}
    for spec in fields(ServiceConfig):
        env_name = ENV_PREFIX + spec.name.upper()
        if env_name in os.environ:
            env_layer[spec.name] = os.environ[env_name]
    layers.append(env_layer)
    if overrides:
        layers.append({k: v for k, v in overrides.items() if v is not None})

    known = {spec.name: spec.type for spec in fields(ServiceConfig)}
    for layer in layers:
        for key, value in layer.items():
            if key not in known:
                raise ValidationError(f"unknown config key: {key}", field=key)
            target = getattr(ServiceConfig, "__dataclass_fields__")[key].default.__class__
            if isinstance(value, str) and target is not str:
                value = _coerce(key, value, target)
            setattr(config, key, value)
    return config
