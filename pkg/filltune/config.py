"""
Pipeline configuration: one JSON document validated by pydantic models.
Unknown keys are rejected; defaults are the published settings.
"""
import json
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .exceptions import ConfigError, FilltuneError
from .frustration import DEFAULT_DELTA, DEFAULT_LENGTHSCALE, DEFAULT_SIGMA, VarianceScaling
from .geometry import Bounds
from .ktn import ExploreConfig
from .latent_oracle import (
    DEFAULT_NEIGHBORS, DEFAULT_RADIUS, ConstantOracle, QuantizedDecoder,
)
from .optimizers import BasinHoppingConfig, MinimizerConfig
from .surfaces import AnalyticMixtureSurface, MixtureComponent, demo_mixture_surface
from .utils import short_hash

MAX_SEED = 2 ** 64 - 1


class StrictModel(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class BoundsSpec(StrictModel):
    lower: List[float]
    upper: List[float]

    @model_validator(mode='after')
    def check_box(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError('lower and upper must be non-empty and of equal length')
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError('every lower bound must be below its upper bound')
        return self

    def to_bounds(self):
        return Bounds(self.lower, self.upper)


class QuantizedOracleSpec(StrictModel):
    kind: Literal['quantized'] = 'quantized'
    bins: int = Field(default=4, ge=2)
    vocabulary: Optional[List[str]] = None
    ngram_n: int = Field(default=2, ge=1)

    @model_validator(mode='after')
    def check_vocabulary(self):
        if self.vocabulary is not None:
            if len(self.vocabulary) != self.bins:
                raise ValueError(f'{self.bins} bins need {self.bins} vocabulary symbols')
            if len(set(self.vocabulary)) != self.bins:
                raise ValueError('vocabulary symbols must be distinct')
        return self


class ConstantOracleSpec(StrictModel):
    kind: Literal['constant'] = 'constant'
    tokens: List[str] = Field(default_factory=lambda: ['[C]'], min_length=1)
    ngram_n: int = Field(default=2, ge=1)


class FieldCsvSpec(StrictModel):
    kind: Literal['field_csv'] = 'field_csv'
    path: str


class MixtureComponentSpec(StrictModel):
    weight: float
    mean: List[float]
    width: float = Field(gt=0)


class AnalyticOracleSpec(StrictModel):
    """A Gaussian mixture used directly as the fitted surface; no components means the demo surface"""
    kind: Literal['analytic'] = 'analytic'
    components: Optional[List[MixtureComponentSpec]] = None


OracleSpec = Annotated[
    Union[QuantizedOracleSpec, ConstantOracleSpec, FieldCsvSpec, AnalyticOracleSpec],
    Field(discriminator='kind'),
]


class PipelineConfig(StrictModel):
    dimension: int = Field(ge=1)
    bounds: Optional[BoundsSpec] = None
    oracle: OracleSpec = Field(default_factory=QuantizedOracleSpec)

    n_samples: int = Field(default=5000, ge=1)
    n_neighbors: int = Field(default=DEFAULT_NEIGHBORS, ge=1)
    perturbation_radius: float = Field(default=DEFAULT_RADIUS, gt=0)
    rbf_smoothing: float = Field(default=1e-5, ge=0)
    lengthscale: float = Field(default=DEFAULT_LENGTHSCALE, gt=0)
    sigma: float = Field(default=DEFAULT_SIGMA, gt=0)
    delta: float = Field(default=DEFAULT_DELTA, gt=0)
    variance_scaling: VarianceScaling = 'box'
    weight_floor: float = Field(default=0.0, ge=0)
    k_select: int = Field(default=100, ge=1)

    explore: ExploreConfig = Field(default_factory=ExploreConfig)
    basin_hopping: BasinHoppingConfig = Field(default_factory=BasinHoppingConfig)
    minimizer: MinimizerConfig = Field(default_factory=MinimizerConfig)

    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    output_dir: Optional[str] = None

    @model_validator(mode='after')
    def check_consistency(self):
        if self.bounds is not None and len(self.bounds.lower) != self.dimension:
            raise ValueError(f'bounds are {len(self.bounds.lower)}-D but dimension is {self.dimension}')
        oracle = self.oracle
        if isinstance(oracle, AnalyticOracleSpec):
            if oracle.components is None:
                if self.dimension != 2:
                    raise ValueError('the built-in analytic surface is 2-D')
            else:
                if any(len(c.mean) != self.dimension for c in oracle.components):
                    raise ValueError(f'every mixture mean must be {self.dimension}-D')
                if self.bounds is None:
                    raise ValueError('an analytic surface with explicit components needs bounds')
        elif isinstance(oracle, FieldCsvSpec) and self.bounds is None:
            raise ValueError('an external similarity field needs bounds')
        if not isinstance(oracle, (AnalyticOracleSpec, FieldCsvSpec)) and self.n_samples < self.dimension + 2:
            raise ValueError(f'n_samples must be at least dimension + 2 = {self.dimension + 2}')
        return self

    # ---- derived objects ----
    def resolved_bounds(self):
        if self.bounds is not None:
            return self.bounds.to_bounds()
        if isinstance(self.oracle, AnalyticOracleSpec):
            return demo_mixture_surface().bounds
        return Bounds.unit(self.dimension)

    def build_oracle(self):
        """The decoding oracle, or None when the field comes from a file or a formula"""
        oracle = self.oracle
        if isinstance(oracle, QuantizedOracleSpec):
            return QuantizedDecoder(self.resolved_bounds(), oracle.bins, oracle.vocabulary, oracle.ngram_n)
        if isinstance(oracle, ConstantOracleSpec):
            return ConstantOracle(self.dimension, oracle.tokens, oracle.ngram_n)
        return None

    def analytic_surface(self):
        oracle = self.oracle
        if not isinstance(oracle, AnalyticOracleSpec):
            return None
        if oracle.components is None:
            demo = demo_mixture_surface()
            if self.bounds is None:
                return demo
            return AnalyticMixtureSurface(demo.components, self.resolved_bounds())
        components = [MixtureComponent(c.weight, tuple(c.mean), c.width) for c in oracle.components]
        return AnalyticMixtureSurface(components, self.resolved_bounds())

    def config_hash(self):
        """Hash of every setting that shapes the results; the output directory is not one"""
        return short_hash(self.model_dump(mode='json', exclude={'output_dir'}))

    def with_overrides(self, seed=None, output_dir=None):
        update = {}
        if seed is not None:
            update['seed'] = seed
        if output_dir is not None:
            update['output_dir'] = output_dir
        if not update:
            return self
        return parse_config({**self.model_dump(mode='json'), **update})


def parse_config(document):
    try:
        return PipelineConfig.model_validate(document)
    except ValidationError as exc:
        raise ConfigError(f'invalid configuration:\n{exc}') from exc
    except FilltuneError as exc:
        raise ConfigError(f'invalid configuration: {exc}') from exc


def load_config(path, seed=None, output_dir=None):
    try:
        with open(path, encoding='utf-8') as handle:
            document = json.load(handle)
    except OSError as exc:
        raise ConfigError(f'cannot read config {path}: {exc}') from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f'config {path} is not valid JSON: {exc}') from exc
    if not isinstance(document, dict):
        raise ConfigError(f'config {path} must be a JSON object')
    return parse_config(document).with_overrides(seed, output_dir)
