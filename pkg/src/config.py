import os
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field

from src.bench import ParameterGrid, FloatRange
from src.engine import EngineConfig
from src.market import GbmParams
from src.qubo import BucketMap, PenaltyConfig
from src.solvers.exact import DEFAULT_EXACT_CAP
from src.solvers.genetic import GaConfig
from src.utils import load_yaml_file

load_dotenv()


class Config(BaseModel):
    """Application settings from the environment (and .env)"""
    config_file: str = "config.yaml"
    otlp_endpoint: Optional[str] = None
    log_file: str = "run.log"

    @classmethod
    def from_env(cls) -> "Config":
        return cls(
            config_file=os.getenv("PQA_CONFIG", "config.yaml"),
            otlp_endpoint=os.getenv("PQA_OTLP_ENDPOINT") or None,
            log_file=os.getenv("PQA_LOG_FILE", "run.log"),
        )


class EnsembleConfig(BaseModel):
    sizes: List[int] = Field(default_factory=lambda: [24])
    per_size: int = Field(default=30, ge=1)


class AnnealConfig(BaseModel):
    """Single-point annealing parameters used by `solve`"""
    chain_strength: float = Field(default=5.0, gt=0.0)
    tau_us: float = Field(default=1.0, gt=0.0)
    rho_us: float = Field(default=1.0, ge=0.0)
    s_pause: float = Field(default=0.4, ge=0.0, le=1.0)
    budget: int = Field(default=1500, ge=0, description="reads for the hybrid solver")


def default_grid() -> ParameterGrid:
    return ParameterGrid(
        chain_strength=FloatRange(min=5.0, max=8.0, step=0.5),
        s_pause=FloatRange(min=0.32, max=0.5, step=0.02),
        rho_us=[1.0, 8.0, 15.0],
    )


class RunConfig(BaseModel):
    """Everything a command needs; persisted next to its outputs so the run can be repeated"""
    seed: int = 0
    jobs: int = Field(default=-1, description="-1 uses every core")
    exact_cap: int = Field(default=DEFAULT_EXACT_CAP, ge=1)
    registry_dir: str = "./registry"
    results_dir: str = "./results"

    market: GbmParams = GbmParams()
    buckets: BucketMap = BucketMap()
    penalty: Optional[PenaltyConfig] = None
    ensemble: EnsembleConfig = EnsembleConfig()
    engine: EngineConfig = EngineConfig()
    ga: GaConfig = GaConfig()
    anneal: AnnealConfig = AnnealConfig()
    grid: ParameterGrid = Field(default_factory=default_grid)

    def override(self, **sections: Dict[str, Any]) -> "RunConfig":
        """Apply flag values on top of this config; None means the flag was not given."""
        data = self.model_dump()
        for key, value in sections.items():
            if isinstance(value, dict):
                data[key].update({k: v for k, v in value.items() if v is not None})
            elif value is not None:
                data[key] = value
        return RunConfig.model_validate(data)

    def dump_yaml(self, path: str | Path) -> None:
        with open(path, 'w', encoding='utf-8') as f:
            yaml.safe_dump(self.model_dump(mode="json"), f, sort_keys=True)


def load_run_config(path: Optional[str | Path]) -> RunConfig:
    """Read a YAML run config; a missing file gives the defaults"""
    if path is None or not Path(path).exists():
        return RunConfig()
    return RunConfig.model_validate(load_yaml_file(path))
