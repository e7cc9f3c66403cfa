from __future__ import annotations

import json
import tomllib
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigError
from .schemas.experiment import ExperimentConfig


class Settings(BaseSettings):
    debug: bool = Field(default=False, alias="FEDECL_DEBUG")
    output_dir: Optional[Path] = Field(default=None, alias="FEDECL_OUTPUT_DIR")
    log_format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        alias="FEDECL_LOG_FORMAT",
    )

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )


@lru_cache
def get_settings() -> Settings:
    return Settings()


def _read_file(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigError(str(path), "config file not found")
    try:
        with path.open("rb") as handle:
            return tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"malformed config file ({exc})") from None


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _apply_override(data: Dict[str, Any], assignment: str) -> None:
    """Apply one ``section.key=value`` flag onto the raw config mapping."""

    key, sep, raw = assignment.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(assignment, "override must look like section.key=value")
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(key, "cannot override inside a scalar value")
        node = child
    node[parts[-1]] = _parse_value(raw.strip())


def _error_key(error: Dict[str, Any]) -> str:
    loc = ".".join(str(part) for part in error.get("loc", ()))
    return loc or "<root>"


def parse_config(
    path: Optional[Path] = None,
    overrides: Iterable[str] = (),
    settings: Optional[Settings] = None,
) -> ExperimentConfig:
    """Build an experiment config from a TOML file, env settings and flags.

    Precedence, lowest first: field defaults, the file, ``FEDECL_OUTPUT_DIR``,
    then ``section.key=value`` overrides.
    """

    data: Dict[str, Any] = _read_file(path) if path is not None else {}
    settings = settings or get_settings()
    if settings.output_dir is not None:
        data["output_dir"] = str(settings.output_dir)
    for assignment in overrides:
        _apply_override(data, assignment)

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        if first.get("type") == "extra_forbidden":
            raise ConfigError(_error_key(first), "unknown config key") from None
        raise ConfigError(_error_key(first), first.get("msg", "invalid value")) from None
