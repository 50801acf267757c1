import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator


@dataclass(frozen=True)
class NumericsConfig:
    points_per_unit: int
    refine_candidates: int
    golden_tolerance: float
    super_depth: int
    envelope_x_max: float
    mc_block_size: int


@dataclass(frozen=True)
class OutputConfig:
    format: str
    float_format: str
    log_level: str


class ConfigurationError(Exception):
    """Raised when there's an error loading configuration"""
    pass


class ConfigLoader:
    def __init__(self, config_path: Optional[Path] = None):
        """
        Initialize the config loader using project root-relative paths
        """
        # Project root is 2 levels up from this package directory
        self.project_root = Path(__file__).parent.parent.parent

        self.config_path = Path(config_path) if config_path else self.project_root / "config" / "config.yml"
        self.env_path = self.project_root / ".env"
        self.golden_path = self.project_root / "config" / "golden" / "table2.json"

        load_dotenv(self.env_path)

    def _load_yaml(self) -> Dict[str, Any]:
        try:
            with open(self.config_path, 'r') as f:
                config = yaml.safe_load(f) or {}
        except FileNotFoundError:
            raise ConfigurationError(f"Configuration file not found: {self.config_path}")
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Error parsing YAML configuration: {str(e)}")
        if not isinstance(config, dict):
            raise ConfigurationError(f"Configuration root must be a mapping: {self.config_path}")
        return config

    def load_numerics_config(self) -> NumericsConfig:
        """Load numeric defaults from the config file"""
        numerics = self._load_yaml().get('numerics', {})

        required_fields = {
            'points_per_unit': numerics.get('points_per_unit'),
            'refine_candidates': numerics.get('refine_candidates'),
            'golden_tolerance': numerics.get('golden_tolerance'),
            'super_depth': numerics.get('super_depth'),
            'envelope_x_max': numerics.get('envelope_x_max'),
            'mc_block_size': numerics.get('mc_block_size'),
        }
        missing_fields = [k for k, v in required_fields.items() if v is None]
        if missing_fields:
            raise ConfigurationError(
                f"Missing required configuration fields: {', '.join(missing_fields)}"
            )

        try:
            return NumericsConfig(
                points_per_unit=int(numerics['points_per_unit']),
                refine_candidates=int(numerics['refine_candidates']),
                golden_tolerance=float(numerics['golden_tolerance']),
                super_depth=int(numerics['super_depth']),
                envelope_x_max=float(numerics['envelope_x_max']),
                mc_block_size=int(numerics['mc_block_size']),
            )
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid numerics configuration: {e}")

    def load_output_config(self) -> OutputConfig:
        """Load output and logging settings; RODEO_LOG_LEVEL overrides the file"""
        config = self._load_yaml()
        output = config.get('output', {})
        logging_config = config.get('logging', {})

        log_level = os.getenv('RODEO_LOG_LEVEL') or logging_config.get('level', 'WARNING')
        return OutputConfig(
            format=output.get('format', 'csv'),
            float_format=output.get('float_format', '%.17g'),
            log_level=str(log_level).upper(),
        )

    def default_seed(self) -> int:
        seed = os.getenv('RODEO_SEED')
        if seed is None:
            return 0
        try:
            return int(seed)
        except ValueError:
            raise ConfigurationError(f"RODEO_SEED must be an integer, got {seed!r}")

    def load_run_file(self, path: Path) -> Dict[str, Any]:
        """Read a --config file (JSON or YAML) whose keys mirror the CLI flags"""
        path = Path(path)
        try:
            with open(path, 'r') as f:
                if path.suffix.lower() == '.json':
                    data = json.load(f)
                else:
                    data = yaml.safe_load(f)
        except FileNotFoundError:
            raise ConfigurationError(f"Run configuration file not found: {path}")
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigurationError(f"Error parsing run configuration {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigurationError(f"Run configuration must be a mapping: {path}")
        return {k.replace('-', '_'): v for k, v in data.items()}


class RunConfig(BaseModel):
    """Resolved parameters of one CLI invocation."""
    model_config = ConfigDict(extra='forbid')

    command: Literal['wam', 'rra', 'super', 'bound', 'simulate', 'verify']
    out: Optional[Path] = None
    format: Literal['csv', 'json'] = 'csv'
    float_format: str = "%.17g"
    seed: int = Field(default=0, ge=0)
    progress: bool = False

    # wam / bound
    cycles: int = 8
    depth: int = 32
    points_per_unit: int = Field(default=20_000, ge=100)
    refine_candidates: int = Field(default=5, ge=1)

    # rra
    zeta: Optional[str] = None
    n: List[int] = Field(default_factory=lambda: [6])
    trials: int = 0
    workers: int = Field(default=1, ge=1)
    block_size: int = Field(default=65536, ge=1)
    separatrix: bool = False
    single_run: bool = False

    # super
    x_max: float = Field(default=20.0, gt=1.0)
    emax: Optional[int] = None

    # bound
    f: Optional[float] = None
    x0: Optional[float] = None
    envelope_x_max: float = Field(default=64.0, gt=1.0)
    spectrum: Optional[Path] = None
    threshold: Optional[float] = None

    # simulate
    state: Optional[Path] = None
    schedule: Optional[List[float]] = None

    # verify
    only: Optional[str] = None
    golden: Optional[Path] = None
    golden_tolerance: float = Field(default=0.05, gt=0.0)

    @field_validator('cycles')
    @classmethod
    def check_cycles(cls, v: int) -> int:
        if not 1 <= v <= 12:
            raise ValueError('cycles must lie in 1..12')
        return v

    @field_validator('depth')
    @classmethod
    def check_depth(cls, v: int) -> int:
        if not 1 <= v <= 64:
            raise ValueError('depth must lie in 1..64')
        return v

    @field_validator('trials')
    @classmethod
    def check_trials(cls, v: int) -> int:
        if v < 0:
            raise ValueError('trials must be nonnegative')
        return v

    @field_validator('n')
    @classmethod
    def check_n(cls, v: List[int]) -> List[int]:
        if not v or any(k < 1 for k in v):
            raise ValueError('iteration counts must be positive')
        return v

    @field_validator('f')
    @classmethod
    def check_f(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not 0.0 <= v <= 1.0:
            raise ValueError('f must lie in [0, 1]')
        return v

    @field_validator('only')
    @classmethod
    def check_only(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in ('qsim', 'wam', 'rra', 'super', 'bounds'):
            raise ValueError('only must be one of qsim, wam, rra, super, bounds')
        return v
