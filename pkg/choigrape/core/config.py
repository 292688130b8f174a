"""
Configuration management for choi-grape

Environment-driven runtime settings (logging, output location, worker
count) and the logging setup used by the command line entry point.
Physics and optimizer parameters live in the JSON run configuration,
see ``choigrape.core.models.RunConfig``.
"""

import logging
from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings with ``CHOIGRAPE_`` environment variable support."""

    model_config = SettingsConfigDict(
        env_prefix="CHOIGRAPE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    APP_NAME: str = "choi-grape"
    APP_VERSION: str = "0.3.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Overrides the output_dir of the run configuration, but not --out
    OUTPUT_DIR: Optional[Path] = None
    LOGS_DIR: Path = Path("logs")

    # Thread pool size for DVR fitting and per-pixel derivatives; 1 = serial
    WORKERS: int = Field(default=1, ge=1)


LOG_FORMAT = "%(asctime)s | %(name)s | %(levelname)s | %(message)s"


def _file_handler(path: Path, level: int, formatter: logging.Formatter) -> logging.Handler:
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return handler


def setup_logging(settings: Settings) -> None:
    """
    Install console and file handlers on the root logger.

    Warnings and errors go to ``LOGS_DIR/choigrape.log``; DEBUG mode adds a
    full ``choigrape-debug.log``. File logging is skipped when LOGS_DIR
    cannot be created.
    """
    level = getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    detailed = logging.Formatter(fmt=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")

    root = logging.getLogger()
    root.setLevel(logging.DEBUG if settings.DEBUG else level)
    for existing in list(root.handlers):
        root.removeHandler(existing)

    console = logging.StreamHandler()
    console.setLevel(level)
    console.setFormatter(detailed if settings.DEBUG else logging.Formatter("%(levelname)s: %(message)s"))
    root.addHandler(console)

    try:
        settings.LOGS_DIR.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        root.warning("Cannot create logs directory %s (%s); file logging disabled", settings.LOGS_DIR, e)
    else:
        root.addHandler(_file_handler(settings.LOGS_DIR / "choigrape.log", logging.WARNING, detailed))
        if settings.DEBUG:
            root.addHandler(_file_handler(settings.LOGS_DIR / "choigrape-debug.log", logging.DEBUG, detailed))

    # scipy's optimizer warnings are reported through our own termination status
    logging.getLogger("scipy").setLevel(logging.ERROR)


settings = Settings()
