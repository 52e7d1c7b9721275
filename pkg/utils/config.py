"""Module providing the ConfigLoader class for loading experiment configuration from JSON files."""

import json
import os
import threading
from functools import cached_property
from pathlib import Path

from utils.errors import InputError


class ConfigLoader:
    """
    One loader per configuration file; repeated construction with the same path returns
    the same instance so every consumer sees one parsed copy.

    The path defaults to the DPOPT_CONFIG_PATH environment variable (fallback "config.json").
    The JSON file has top-level sections keyed by consumer, e.g.:

        {"experiment": {...}, "grid": {...}}

    Public Properties:
      - config: The entire configuration dictionary.
    """
    _instances: dict[str, "ConfigLoader"] = {}
    _lock = threading.Lock()

    def __new__(cls, path: str | os.PathLike | None = None):
        """Create or return the instance bound to path."""
        key = str(Path(path or os.environ.get("DPOPT_CONFIG_PATH", "config.json")).resolve())
        with cls._lock:
            if key not in cls._instances:
                instance = super(ConfigLoader, cls).__new__(cls)
                instance.path = Path(key)
                cls._instances[key] = instance
            return cls._instances[key]

    def __init__(self, path: str | os.PathLike | None = None):
        """Instances are initialised in __new__; path is accepted for signature symmetry."""
        _ = path

    @cached_property
    def config(self) -> dict:
        """Retrieve the entire configuration dictionary, loading it from disk on first access."""
        try:
            with open(self.path, "r", encoding="utf-8") as handle:
                loaded = json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"Failed to load configuration from '{self.path}': {e}") from e
        if not isinstance(loaded, dict):
            raise InputError(f"Configuration in '{self.path}' must be a JSON object")
        return loaded

    def get_config(self, section: str) -> dict:
        """Retrieve one configuration section.

        Args:
            section (str): The section name, e.g. "experiment".

        Returns:
            dict: The section content.

        Raises:
            KeyError: If the section is not present.
        """
        if section in self.config:
            return self.config[section]
        raise KeyError(f"Configuration for '{section}' not found.")

    def get_optional(self, section: str) -> dict:
        """Return a section, or an empty dict when absent."""
        try:
            return self.get_config(section)
        except KeyError:
            return {}

    @classmethod
    def reset(cls) -> None:
        """Drop all cached instances (used between CLI invocations and in tests)."""
        with cls._lock:
            cls._instances.clear()
