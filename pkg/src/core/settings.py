"""
Settings Module
Resolves configuration from flags, the environment and a dotenv-format config file
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values

logger = logging.getLogger(__name__)

ENV_PREFIX = "ONION_BINDING_"
DEFAULT_SIMNET_URL = "http://127.0.0.1:8470"


def config_dir() -> Path:
    """Per-user configuration directory"""
    base = os.getenv("XDG_CONFIG_HOME") or os.path.join(os.path.expanduser("~"), ".config")
    return Path(base) / "onion-binding"


@dataclass
class Settings:
    """Resolved runtime configuration"""
    store_path: Path
    keys_dir: Path
    simnet_url: str = DEFAULT_SIMNET_URL
    output_format: str = "text"
    log_level: str = "WARNING"
    notary_log: Optional[Path] = None
    notary_key: Optional[Path] = None
    lifetime_days: int = 90
    skew_seconds: int = 300


def _read_config_file(path: Path) -> Dict[str, Optional[str]]:
    if not path.is_file():
        return {}
    logger.debug(f"Reading config file {path}")
    return dict(dotenv_values(path))


def load_settings(overrides: Optional[Mapping[str, Any]] = None,
                  environ: Optional[Mapping[str, str]] = None) -> Settings:
    """
    Build settings with precedence flags > environment > config file

    Args:
        overrides (dict): Values from command-line flags; None entries are ignored
        environ (dict): Environment mapping (default os.environ)

    Returns:
        Settings: Resolved configuration
    """
    environ = os.environ if environ is None else environ
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    cfg_path = Path(environ.get(f"{ENV_PREFIX}CONFIG") or config_dir() / "config.env")
    file_values = _read_config_file(cfg_path)

    def lookup(name: str, default: Any = None) -> Any:
        if name in overrides:
            return overrides[name]
        env_name = f"{ENV_PREFIX}{name.upper()}"
        if environ.get(env_name):
            return environ[env_name]
        if file_values.get(env_name):
            return file_values[env_name]
        return default

    base = config_dir()
    notary_log = lookup("notary_log")
    notary_key = lookup("notary_key")
    settings = Settings(
        store_path=Path(lookup("store", base / "truststore.txt")),
        keys_dir=Path(lookup("keys_dir", base / "keys")),
        simnet_url=str(lookup("simnet_url", DEFAULT_SIMNET_URL)).rstrip("/"),
        output_format=str(lookup("format", "text")),
        log_level=str(lookup("log_level", "WARNING")).upper(),
        notary_log=Path(notary_log) if notary_log else None,
        notary_key=Path(notary_key) if notary_key else None,
        lifetime_days=int(lookup("lifetime_days", 90)),
        skew_seconds=int(lookup("skew_seconds", 300)),
    )
    if settings.output_format not in ("text", "machine"):
        raise ValueError(f"Invalid output format: {settings.output_format}")
    return settings
