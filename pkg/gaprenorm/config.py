import json
import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import MalformedInputError

logger = logging.getLogger(__name__)


class Settings(BaseModel):
    app_name: str = "Gap Map Renormalization Engine"
    environment: str = os.getenv("GAPRENORM_ENV", "development")
    log_level: str = os.getenv("GAPRENORM_LOG_LEVEL", "INFO")
    config_path: str | None = os.getenv("GAPRENORM_CONFIG")
    port: int = int(os.getenv("PORT", "4000"))


@lru_cache
def get_settings() -> Settings:
    return Settings()


class Tolerances(BaseModel):
    fit: float = Field(default=1e-9, gt=0)
    quadrature_tail: float = Field(default=1e-13, gt=0)
    zoom_min_width: float = Field(default=1e-13, gt=0)
    gap_min_width: float = Field(default=1e-14, gt=0)
    margin_rel: float = Field(default=1e-12, gt=0)
    discontinuity: float = Field(default=1e-14, gt=0)


class RunConfig(BaseModel):
    m: int = Field(default=16, ge=4, le=64)
    h: float = Field(default=1e-6, gt=0)
    seed: int = 0
    r: float = Field(default=0.4, gt=0, lt=1)
    delta: float = Field(default=0.1, gt=0)
    samples: int = Field(default=1000, ge=1)
    k_cap: int = Field(default=10**6, ge=1)
    iterations: int = Field(default=10**5, ge=1000)
    tol: float = Field(default=1e-12, ge=1e-14)
    lookahead: int = Field(default=3, ge=1)
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @field_validator("tolerances", mode="before")
    @classmethod
    def _merge_tolerances(cls, value: Any) -> Any:
        if isinstance(value, dict):
            return {**Tolerances().model_dump(), **value}
        return value


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Build the effective run config.

    Baked defaults are overridden by the JSON file at ``path`` (or at
    ``GAPRENORM_CONFIG`` when no path is given), which is in turn overridden
    by ``overrides``. Keys whose override value is None are ignored.
    """
    data: Dict[str, Any] = {}
    source = path or get_settings().config_path
    if source:
        file_path = Path(source)
        if not file_path.is_file():
            raise MalformedInputError(f"config file not found: {source}", path=source)
        try:
            data = json.loads(file_path.read_text())
        except json.JSONDecodeError as e:
            raise MalformedInputError(
                f"config file {source}: line {e.lineno}: {e.msg}", path=source, line=e.lineno
            )
        if not isinstance(data, dict):
            raise MalformedInputError(f"config file {source}: top level must be an object", path=source)
        logger.info(f"[CONFIG] Loaded run config from {source}")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    try:
        return RunConfig(**data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise MalformedInputError(f"invalid run config: {field}: {first['msg']}", field=field)
