#!/usr/bin/env python3

"""This module defines the schema of experiment documents."""

import json
from pathlib import Path
from typing import Annotated, List, Literal, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)

from maskfk.core.config import settings
from maskfk.core.schedule import SCHEDULE_NAMES
from maskfk.exceptions import ConfigError
from maskfk.services.correctors import BETA_SUM_TOLERANCE
from maskfk.services.data import (
    TabularDataDistribution,
    from_probs,
    load_data,
    product_data,
)
from maskfk.services.smc import ResamplingPolicy


class ConfigModel(BaseModel):
    """Base for every section: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class InlineData(ConfigModel):
    kind: Literal["inline"] = "inline"
    V: PositiveInt = Field(description="Number of non-mask tokens")
    d: PositiveInt = Field(description="Sequence length")
    probs: List[NonNegativeFloat] = Field(
        description="V**d probabilities in lexicographic order"
    )

    def load(self) -> TabularDataDistribution:
        return from_probs(self.probs, self.V, self.d)


class FileData(ConfigModel):
    kind: Literal["file"] = "file"
    path: Path = Field(description="JSON document with V, d and probs")

    def load(self) -> TabularDataDistribution:
        return load_data(self.path)


class IsingData(ConfigModel):
    kind: Literal["ising"] = "ising"
    L: int = Field(ge=2, description="Lattice side")
    beta: NonNegativeFloat
    J: float = 1.0
    h: float = 0.0

    def load(self) -> TabularDataDistribution:
        return load_data(
            {"type": "ising", "L": self.L, "beta": self.beta, "J": self.J, "h": self.h}
        )


class ProductData(ConfigModel):
    kind: Literal["product"] = "product"
    marginals: List[List[NonNegativeFloat]] = Field(
        min_length=1, description="One marginal per position"
    )

    def load(self) -> TabularDataDistribution:
        return product_data(self.marginals)


DataConfig = Annotated[
    Union[InlineData, FileData, IsingData, ProductData], Field(discriminator="kind")
]


class DenoiserConfig(ConfigModel):
    noise_scale: NonNegativeFloat = Field(
        default=0.0, description="Log-normal perturbation of the exact posterior"
    )
    noise_seed: int = Field(default=0, ge=0)


class BaseTarget(ConfigModel):
    variant: Literal["base"] = "base"


class AnnealTarget(ConfigModel):
    variant: Literal["anneal"] = "anneal"
    beta: PositiveFloat


class ProductTarget(ConfigModel):
    variant: Literal["product"] = "product"
    factors: List[DataConfig] = Field(min_length=2)


class GeoAvgTarget(ConfigModel):
    variant: Literal["geo_avg"] = "geo_avg"
    factors: List[DataConfig] = Field(min_length=1)
    betas: List[float] = Field(min_length=1)

    @model_validator(mode="after")
    def check_betas(self):
        if len(self.betas) != len(self.factors):
            raise ValueError("geo_avg needs one beta per factor")
        if abs(sum(self.betas) - 1.0) > BETA_SUM_TOLERANCE:
            raise ValueError(f"geo_avg betas must sum to 1, got {sum(self.betas)}")
        return self


class RewardTarget(ConfigModel):
    variant: Literal["reward"] = "reward"
    table: Union[List[float], List[List[float]]] = Field(
        description="Per-token reward, shape (V,) or (d, V); the mask scores 0"
    )
    beta_schedule: Literal["linear", "constant"] = "linear"
    beta: float = Field(default=1.0, description="Final (or constant) beta")
    scale: float = Field(default=1.0, description="Reward scale gamma")


TargetConfig = Annotated[
    Union[BaseTarget, AnnealTarget, ProductTarget, GeoAvgTarget, RewardTarget],
    Field(discriminator="variant"),
]


class ResamplingConfig(ConfigModel):
    scheme: Literal["multinomial", "systematic"] = "multinomial"
    trigger: Literal["every_step", "ess_below", "never"] = "every_step"
    threshold: float = Field(default=0.5, gt=0.0, le=1.0)
    freeze_tail: float = Field(default=0.0, ge=0.0, lt=1.0)

    def to_policy(self) -> ResamplingPolicy:
        return ResamplingPolicy(**self.model_dump())


class TokenStatistic(ConfigModel):
    """SNIS estimate of P(x[position] = token)."""

    position: int = Field(ge=0)
    token: int = Field(ge=0)
    name: str | None = None

    @property
    def label(self) -> str:
        return self.name or f"P(x{self.position}={self.token})"


class OracleConfig(ConfigModel):
    n_grid: int = Field(default=settings.oracle_grid, ge=100)
    method: Literal["radau", "rk4"] = settings.oracle_method
    include_weights: bool = True
    tolerance: PositiveFloat | None = None


class IsingConfig(ConfigModel):
    L: int = Field(default=4, ge=2)
    beta_data: NonNegativeFloat = 0.3
    beta_mult: PositiveFloat = 4.0 / 3.0
    J: float = 1.0
    h: float = 0.0
    reference_samples: int = Field(default=0, ge=0)
    burn_in: int = Field(default=10_000, ge=0)
    thinning: PositiveInt = 5
    include_guidance: bool = False
    include_base: bool = False
    beta_sweep: List[PositiveFloat] = Field(default_factory=list)
    replicates: PositiveInt = 1


class ExperimentConfig(ConfigModel):
    """A complete experiment; every random draw is keyed by ``seed``."""

    task: Literal["sample", "oracle", "ising", "selfcheck"]
    data: DataConfig | None = None
    target: TargetConfig = Field(default_factory=BaseTarget)
    denoiser: DenoiserConfig = Field(default_factory=DenoiserConfig)
    schedule: str = settings.default_schedule
    t_min: float | None = Field(default=None, gt=0.0, lt=0.5)
    K: PositiveInt = 1024
    n_steps: PositiveInt = 200
    seed: int = Field(default=0, ge=0)
    threads: PositiveInt | None = None
    weighted: bool = True
    stepping: Literal["exponential", "euler"] = "exponential"
    resampling: ResamplingConfig = Field(default_factory=ResamplingConfig)
    statistics: List[TokenStatistic] = Field(default_factory=list)
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    ising: IsingConfig = Field(default_factory=IsingConfig)
    output_dir: Path = Path("results")

    @field_validator("schedule")
    @classmethod
    def known_schedule(cls, name: str) -> str:
        if name not in SCHEDULE_NAMES:
            raise ValueError(f"unknown schedule {name!r}")
        return name

    @model_validator(mode="after")
    def data_for_target(self):
        needs_data = self.target.variant in ("base", "anneal", "reward")
        if self.task in ("sample", "oracle") and needs_data and self.data is None:
            raise ValueError(f"a {self.target.variant} target needs a data section")
        return self


def load_config(path: Path) -> ExperimentConfig:
    """Reads and validates an experiment document.

    Raises:
        ConfigError: If the file is unreadable, not JSON or fails validation.
    """
    try:
        document = json.loads(Path(path).read_text())
        return ExperimentConfig.model_validate(document)
    except OSError as error:
        raise ConfigError(f"Cannot read config {path}: {error}") from error
    except json.JSONDecodeError as error:
        raise ConfigError(f"Config {path} is not valid JSON: {error}") from error
    except ValidationError as error:
        raise ConfigError(f"Invalid config {path}:\n{error}") from error
