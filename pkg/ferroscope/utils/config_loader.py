"""
Ferroscope Configuration Loader.

Loads and exposes the pipeline configuration. Sources, lowest precedence
first:
- config/pipeline.yaml: every default the pipeline knows about
- .env file / process environment: FERROSCOPE_SEED, FERROSCOPE_LOG_LEVEL,
  FERROSCOPE_LOG_FILE
- an optional user YAML file, deep-merged over the defaults
- explicit overrides (CLI flags) applied with set()

Keys absent from the defaults are rejected, so a typo in a user file fails
before any stage runs.
"""

import copy
import os
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import yaml
from dotenv import load_dotenv

from ferroscope.utils.errors import ConfigError

DEFAULT_CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"

# Mappings whose keys are data (class names), not schema.
OPEN_SECTIONS = frozenset({"synth.counts"})

# Keys holding filesystem paths; resolved to absolute paths by resolve_paths().
PATH_KEYS = ("paths.workdir", "paths.corpus", "paths.raw_images", "logging.dir")


class ConfigLoader:
    """Central configuration manager for ferroscope.

    Usage:
        from ferroscope.utils.config_loader import config
        nu = config.get("ocsvm.nu", 0.1)
        seed = config.seed()
    """

    def __init__(
        self,
        config_dir: Optional[os.PathLike] = None,
        env_file: str = ".env",
        yaml_file: str = "pipeline.yaml",
        user_file: Optional[os.PathLike] = None,
    ) -> None:
        """Initialize the loader and load all sources.

        Args:
            config_dir: Directory holding the defaults YAML
            env_file: Path to the .env file (relative to the working directory)
            yaml_file: Name of the defaults YAML file
            user_file: Optional YAML file merged over the defaults
        """
        self.config_dir = Path(config_dir) if config_dir else DEFAULT_CONFIG_DIR
        self.env_file = Path(env_file)
        self.yaml_file = self.config_dir / yaml_file

        self._config: Dict[str, Any] = {}
        self._defaults: Dict[str, Any] = {}
        self._env_loaded = False

        self._load_environment()
        self._load_yaml_config()
        self._apply_environment()
        if user_file is not None:
            self.merge_file(user_file)

    def _load_environment(self) -> None:
        """Load variables from .env file if it exists."""
        if self.env_file.exists():
            load_dotenv(self.env_file)
            self._env_loaded = True

    def _load_yaml_config(self) -> None:
        """Load the defaults YAML; a missing file leaves an empty configuration."""
        if self.yaml_file.exists():
            with open(self.yaml_file, "r", encoding="utf-8") as f:
                self._defaults = yaml.safe_load(f) or {}
        else:
            print(f"{self.yaml_file} not found - starting with empty configuration", file=sys.stderr)
            self._defaults = {}
        self._config = copy.deepcopy(self._defaults)

    def _apply_environment(self) -> None:
        """Environment fallbacks sit between the defaults and user overrides."""
        seed = os.environ.get("FERROSCOPE_SEED")
        if seed:
            try:
                self._config["seed"] = int(seed)
            except ValueError as e:
                raise ConfigError(f"FERROSCOPE_SEED must be an integer, got {seed!r}") from e
        level = os.environ.get("FERROSCOPE_LOG_LEVEL")
        if level:
            self._config.setdefault("logging", {})["level"] = level
        log_file = os.environ.get("FERROSCOPE_LOG_FILE")
        if log_file:
            enabled = log_file.strip().lower() not in ("0", "false", "no", "off")
            self._config.setdefault("logging", {})["file_enabled"] = enabled

    def merge_file(self, path: os.PathLike) -> None:
        """Deep-merge a user YAML file over the current configuration."""
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Configuration file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            try:
                overrides = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Invalid YAML in {path}: {e}") from e
        if not isinstance(overrides, dict):
            raise ConfigError(f"Top level of {path} must be a mapping")
        self._merge(self._config, overrides, prefix="")

    def _merge(self, target: Dict[str, Any], overrides: Dict[str, Any], prefix: str) -> None:
        for key, value in overrides.items():
            dotted = f"{prefix}{key}"
            self._check_known(dotted)
            if isinstance(value, dict) and isinstance(target.get(key), dict) and dotted not in OPEN_SECTIONS:
                self._merge(target[key], value, prefix=f"{dotted}.")
            else:
                target[key] = copy.deepcopy(value)

    def _check_known(self, dotted: str) -> None:
        """Reject keys the defaults do not declare (open sections excepted)."""
        node: Any = self._defaults
        parts = dotted.split(".")
        for i, part in enumerate(parts):
            if ".".join(parts[:i]) in OPEN_SECTIONS:
                return
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"Unknown configuration key: {dotted}")
            node = node[part]

    def set(self, key: str, value: Any) -> None:
        """Override a single dotted key (used for CLI flags)."""
        self._check_known(key)
        keys = key.split(".")
        node = self._config
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value

    def set_from_string(self, assignment: str) -> None:
        """Apply a ``dotted.key=value`` override; the value is parsed as YAML."""
        if "=" not in assignment:
            raise ConfigError(f"Override must look like key=value, got {assignment!r}")
        key, raw = assignment.split("=", 1)
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse value for {key}: {e}") from e
        self.set(key.strip(), value)

    def get(self, key: str, default: Any = None) -> Any:
        """Retrieve a configuration value using dot notation.

        Args:
            key: Dot-separated key path, e.g. 'train.gan.epochs'
            default: Value to return if key is not found

        Returns:
            The configuration value or default
        """
        value: Any = self._config
        for k in key.split("."):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def seed(self, default: int = 0) -> int:
        value = self.get("seed")
        return int(value) if value is not None else default

    def resolve_paths(self, base: Optional[os.PathLike] = None, keys: Iterable[str] = PATH_KEYS) -> None:
        """Turn every path-valued key into an absolute path."""
        base_dir = Path(base) if base else Path.cwd()
        for key in keys:
            value = self.get(key)
            if value is None:
                continue
            path = Path(value).expanduser()
            if not path.is_absolute():
                path = base_dir / path
            self.set(key, str(path.resolve()))

    def get_all(self) -> Dict[str, Any]:
        """Return the complete loaded configuration dictionary."""
        return self._config

    def dump(self) -> str:
        """Render the resolved configuration as YAML."""
        return yaml.safe_dump(self._config, sort_keys=True, default_flow_style=False)


# Singleton instance - import and use directly
config = ConfigLoader()
