import logging
import os
from copy import deepcopy
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .application.schemas import RunConfig
from .domain.models import GOLDEN_COST

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "TVSELECT_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "./tvs-output"

DEFAULT_CONFIG = {
    "mode": "offline",  # offline | online
    "horizon": 500,
    "cost": GOLDEN_COST,  # golden cost: the oracle is the median probability model
    "arm_costs": None,
    "prior": {"a": 1.0, "b": 1.0},
    "q_star": None,
    "stop_window": 100,
    "early_stop": True,
    "first_play_cap": None,
    "seed": 0,
    # Online runs
    "batch_size": None,
    "rounds": 1,
    "max_trajectory_entries": 10_000_000,
    # Feedback rule
    "feedback": {
        "kind": "bernoulli",  # bernoulli | forest | lasso
        "forest": {
            "num_trees": 10,
            "max_depth": None,  # 2 offline, 6 online
            "min_leaf": 5,
            "mtry": "all",
            "split_candidates": 32,
            "bootstrap": True,
            "importance_threshold": 1.0,
            "min_gain": 0.01,
            "backfit": None,  # on offline, off online
        },
        "lasso": {"lam": "auto", "bootstrap": True},
    },
    # Data: a synthetic setup, a gen-data file, or bare synthetic arms
    "data": {
        "setup": "arms",  # friedman | linear | liang | forest | file | arms
        "n": None,
        "p": None,
        "sigma2": None,
        "correlated": False,
        "num_gen_trees": 200,
        "path": None,
        "arms": {
            "num_signals": 5,
            "signal_theta": 0.7,
            "noise_theta": 0.3,
            "margin": None,
            "interaction_scale": None,
        },
    },
    "output": {"directory": None},
}


def deep_merge(default: Dict[str, Any], user: Dict[str, Any]) -> Dict[str, Any]:
    """Deep merge user config with defaults."""
    result = deepcopy(default)

    for key, value in user.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = deep_merge(result[key], value)
        else:
            result[key] = value

    return result


class ConfigManager:
    """Loads a YAML run configuration, applies overrides and validates it."""

    def __init__(self, config_path: Optional[Path] = None):
        self.config_path = Path(config_path) if config_path else None
        self._config = deepcopy(DEFAULT_CONFIG)
        self._load_config()

    def _load_config(self):
        if self.config_path is None:
            return
        if not self.config_path.exists():
            raise FileNotFoundError(f"Config file not found: {self.config_path}")
        with open(self.config_path, "r") as f:
            user_config = yaml.safe_load(f) or {}
        if not isinstance(user_config, dict):
            raise yaml.YAMLError(f"{self.config_path}: top level must be a mapping")
        self._config = deep_merge(DEFAULT_CONFIG, user_config)
        logger.info(f"Loaded configuration from {self.config_path}")

    def get(self, key: str = None, default: Any = None) -> Any:
        """Get configuration value(s); dotted keys reach into sections."""
        if key is None:
            return self._config

        value = self._config
        for k in key.split("."):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def set(self, key: str, value: Any) -> None:
        keys = key.split(".")
        config = self._config
        for k in keys[:-1]:
            config = config.setdefault(k, {})
        config[keys[-1]] = value

    def apply_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None) -> "ConfigManager":
        """CLI seed beats the file; --output-dir beats the env var, which beats the file."""
        if seed is not None:
            self.set("seed", seed)
        directory = output_dir or os.environ.get(OUTPUT_DIR_ENV) or self.get("output.directory")
        self.set("output.directory", directory or DEFAULT_OUTPUT_DIR)
        return self

    def run_config(self) -> RunConfig:
        """Validate strictly; unknown keys raise a pydantic ValidationError naming them."""
        return RunConfig.model_validate(self._config)

    def export_config(self, filepath: Path, config: Optional[RunConfig] = None):
        """Write the effective configuration (defaults filled in) as YAML."""
        payload = (config or self.run_config()).model_dump(mode="json")
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, "w") as f:
            yaml.safe_dump(payload, f, default_flow_style=False, sort_keys=False)


def load_run_config(
    config_path: Optional[Path] = None,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
) -> RunConfig:
    return ConfigManager(config_path).apply_overrides(seed, output_dir).run_config()
