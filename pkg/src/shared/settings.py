"""
Centralized configuration module for environment-based settings.

This module provides a unified way to access run-wide configuration across the
laboratory. Only two values can be overridden from the environment: the
artifact output directory and the worker thread count. Everything else about
an experiment lives in its JSON config file.
"""

import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Load environment variables from .env file
# Locate .env file from the project root (src/shared -> project root)
_current_dir = Path(__file__).resolve().parent  # src/shared
_project_root = _current_dir.parent.parent
_env_file = _project_root / '.env'

if _env_file.exists():
    load_dotenv(_env_file, override=True)
else:
    # Fallback to current working directory
    load_dotenv(override=True)

CONFIGS_DIR = _current_dir / 'configs'
SCHEMA_DIR = _current_dir / 'schema'


class Settings:
    """
    Centralized settings manager for laboratory-wide configuration.

    Attributes:
        output_dir: Root directory where run artifacts are written
        threads: Number of worker threads used by parallel stages
    """

    OUTPUT_DIR_ENV = 'MIALAB_OUTPUT_DIR'
    THREADS_ENV = 'MIALAB_THREADS'
    DEFAULT_OUTPUT_DIR = 'runs'

    def __init__(self):
        """Initialize settings from environment variables."""
        self.output_dir = Path(
            os.environ.get(self.OUTPUT_DIR_ENV, self.DEFAULT_OUTPUT_DIR)
        )

        threads_str = os.environ.get(self.THREADS_ENV, '1')
        try:
            self.threads = int(threads_str)
        except ValueError:
            raise ValueError(
                f"Invalid {self.THREADS_ENV}: '{threads_str}'. Must be a positive integer"
            )

        # Validate threads
        if self.threads < 1:
            raise ValueError(
                f"Invalid {self.THREADS_ENV}: '{threads_str}'. Must be a positive integer"
            )

    @property
    def configs_dir(self) -> Path:
        """Directory holding the shipped experiment configs."""
        return CONFIGS_DIR

    def config_path(self, name: str) -> Path:
        """
        Resolve a shipped config by name.

        Args:
            name: Config name with or without the '.json' suffix

        Returns:
            Path to the config file

        Raises:
            ValueError: If no shipped config has that name
        """
        file_name = name if name.endswith('.json') else f'{name}.json'
        path = CONFIGS_DIR / file_name
        if not path.exists():
            available = sorted(p.stem for p in CONFIGS_DIR.glob('*.json'))
            raise ValueError(
                f"Unknown config: '{name}'. Available configs: {available}"
            )
        return path

    # Helper Methods
    def get_run_dir(
        self,
        experiment: str,
        seed: int,
        arm: Optional[str] = None,
        output_dir: Optional[Path] = None,
    ) -> Path:
        """
        Generate the directory of one experiment arm.

        Args:
            experiment: Experiment name from the config
            seed: Master seed of the run
            arm: Defense arm ('none', 'dualmd', 'distillmd')
            output_dir: Override of the artifact root (config value wins over env)

        Returns:
            Path formatted as {output_dir}/{experiment}/seed-{seed}[/{arm}]
        """
        root = Path(output_dir) if output_dir else self.output_dir
        base = root / experiment / f'seed-{seed}'
        if arm:
            return base / arm
        return base

    def __repr__(self) -> str:
        """String representation of settings."""
        return f"Settings(output_dir='{self.output_dir}', threads={self.threads})"


# Global settings instance for easy import
settings = Settings()
