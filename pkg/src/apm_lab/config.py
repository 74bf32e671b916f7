"""Configuration management for apm-lab.

Handles stored preferences (default seed, worker threads, enumeration cap,
report format) and the resolved configuration of a single run.
"""

from __future__ import annotations

import json
import os
import stat
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from apm_lab.errors import get_error

# Environment variable holding the default seed
SEED_ENV_VAR = "APM_LAB_SEED"

VALID_FORMATS = ["csv", "json"]

SUBCOMMANDS = [
    "extract",
    "count",
    "sample-matching",
    "fourier",
    "kkl-check",
    "tvd",
    "tvd-sweep",
    "protocol",
    "qsim",
    "stream-sim",
    "adversary",
]

DEFAULT_ENUMERATION_CAP = 10**7
MAX_SEED = 2**64 - 1

PREFERENCE_DEFAULTS = {
    "seed": 0,
    "threads": None,
    "enumeration_cap": DEFAULT_ENUMERATION_CAP,
    "format": "json",
}


def get_config_dir() -> Path:
    """Directory holding apm-lab preferences (%APPDATA% on Windows, ~/.config elsewhere)."""
    if os.name == "nt":
        return Path(os.environ.get("APPDATA", Path.home())) / "apm-lab"
    return Path.home() / ".config" / "apm-lab"


def get_config_file() -> Path:
    return get_config_dir() / "config.json"


def read_config() -> dict:
    """Load the stored config; a missing or corrupt file reads as empty."""
    path = get_config_file()
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        return {}
    return data if isinstance(data, dict) else {}


def write_config(config: dict) -> None:
    """Persist config as sorted JSON readable by the owner only.

    Args:
        config: Full config document, preferences included
    """
    path = get_config_file()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config, indent=2, sort_keys=True))
    if os.name != "nt":
        os.chmod(path, stat.S_IRUSR | stat.S_IWUSR)


def get_preference(key: str, default=None):
    """Stored preference for key, or default when unset."""
    return read_config().get("preferences", {}).get(key, default)


def set_preference(key: str, value) -> None:
    """Store one preference.

    Args:
        key: One of PREFERENCE_DEFAULTS
        value: New value, saved as given

    Raises:
        DomainError: If key is not a known preference
    """
    if key not in PREFERENCE_DEFAULTS:
        raise get_error(
            "out_of_range", what="preference", value=key, allowed=sorted(PREFERENCE_DEFAULTS)
        )
    config = read_config()
    config.setdefault("preferences", {})[key] = value
    write_config(config)


def validate_seed(seed: int) -> int:
    """Check that a seed fits in 64 unsigned bits."""
    if not 0 <= int(seed) <= MAX_SEED:
        raise get_error("out_of_range", what="seed", value=seed, allowed="[0, 2^64 - 1]")
    return int(seed)


def get_default_seed() -> int:
    """Resolve the default seed.

    Priority:
    1. APM_LAB_SEED environment variable
    2. Stored preference
    3. 0

    Returns:
        Seed value
    """
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed:
        try:
            return validate_seed(int(env_seed, 0))
        except ValueError:
            raise get_error(
                "bad_syntax",
                what=SEED_ENV_VAR,
                text=env_seed,
                hint="Set it to a non-negative integer.",
            ) from None
    return validate_seed(get_preference("seed", PREFERENCE_DEFAULTS["seed"]))


def get_enumeration_cap() -> int:
    """Get the maximum number of matchings an exact oracle may enumerate."""
    return int(get_preference("enumeration_cap", DEFAULT_ENUMERATION_CAP))


def get_default_threads() -> int:
    """Get the default worker count (stored preference, else min(4, cpus))."""
    threads = get_preference("threads")
    if threads:
        return max(1, int(threads))
    return max(1, min(4, os.cpu_count() or 1))


def get_default_format() -> str:
    """Get the default report format."""
    fmt = get_preference("format", PREFERENCE_DEFAULTS["format"])
    return fmt if fmt in VALID_FORMATS else "json"


@dataclass
class ExperimentConfig:
    """Fully resolved configuration of one CLI run."""

    subcommand: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    format: str = "json"
    output: Optional[str] = None
    threads: int = 1
    timing: bool = False

    def validate(self) -> "ExperimentConfig":
        """Check the configuration before dispatch.

        Returns:
            self, for chaining

        Raises:
            ValidationError: If any field is invalid
        """
        if self.subcommand not in SUBCOMMANDS:
            raise get_error(
                "out_of_range", what="subcommand", value=self.subcommand, allowed=SUBCOMMANDS
            )
        if self.format not in VALID_FORMATS:
            raise get_error("out_of_range", what="format", value=self.format, allowed=VALID_FORMATS)
        validate_seed(self.seed)
        if self.threads < 1:
            raise get_error("out_of_range", what="threads", value=self.threads, allowed=">= 1")
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Config echo embedded in reports.

        The output path and thread count are left out: neither may change the
        report bytes.
        """
        return {
            "subcommand": self.subcommand,
            "seed": self.seed,
            "format": self.format,
            **{key: self.params[key] for key in sorted(self.params)},
        }
