"""
JSON run configuration shared by all commands.
"""
import dataclasses
import json
import logging
import os
import typing
from . import stat_models
from .power_engine import SamplerConfig
from .special_math import MAX_SEED, RngStream
from .surrogate import TrainConfig
from .util import hash_json


LOGGER = logging.getLogger(__name__)
SPLIT_FRACTIONS = (0.1, 0.2, 0.4, 0.6, 0.8)
BOUNDARIES = (0.8, 0.6)
# Substreams of the master seed used by the commands.
SAMPLE_STREAM, SIMULATE_STREAM, SPLIT_STREAM, TRAIN_STREAM, BASELINE_STREAM, EVAL_STREAM = \
    range(6)


class ConfigError(ValueError):
    """
    The run configuration is invalid. The message names the offending field.
    """


@dataclasses.dataclass
class ModelSection:
    family: str = "REG"
    design: typing.Union[str, dict, None] = None
    predictors: int = 3
    rmanova_layout: list[int] = dataclasses.field(default_factory=lambda: [2, 2])
    error: dict = dataclasses.field(default_factory=lambda: {"kind": "normal", "mu": 0,
                                                             "sigma": 1})


@dataclasses.dataclass
class HypothesisSection:
    tested_indices: list[int] = dataclasses.field(
        default_factory=lambda: list(stat_models.H_O_INDICES))
    test: typing.Optional[str] = None


@dataclasses.dataclass
class SimulationSection:
    alpha: float = 0.05
    sims: int = 1000
    num_workers: int = 1


@dataclasses.dataclass
class SamplerSection:
    num_points: int = 2000
    num_local: int = 4
    local_sigma: float = 0.1
    beta_domain: list = dataclasses.field(default_factory=lambda: [-0.3, 0.3])
    n_domain: list[float] = dataclasses.field(default_factory=lambda: [25, 200])
    local_sigma_n: typing.Optional[float] = None


@dataclasses.dataclass
class SplitSection:
    fraction: float = 0.1
    seed: typing.Optional[int] = None


@dataclasses.dataclass
class FeaturesSection:
    variance_target: float = 0.99
    boundary: float = 0.8
    task: str = "classify"


@dataclasses.dataclass
class TrainSection:
    epochs: int = 500
    learning_rate: float = 1e-3
    batch_size: int = 32
    sweep: bool = False
    patience: typing.Optional[int] = None
    validation_fraction: float = 0.2
    standardize: bool = True


@dataclasses.dataclass
class BaselinesSection:
    n_neighbors: int = 5
    gamma: float = 20
    max_iter: int = 1000
    tol: float = 1e-3
    standardize: bool = True
    num_clusters: int = 2
    cluster_axes: typing.Union[list[str], str] = dataclasses.field(
        default_factory=lambda: ["pc_1", "scaled_weight"])


SECTIONS = {
    "model": ModelSection,
    "hypothesis": HypothesisSection,
    "simulation": SimulationSection,
    "sampler": SamplerSection,
    "split": SplitSection,
    "features": FeaturesSection,
    "train": TrainSection,
    "baselines": BaselinesSection,
}


def _section_from_dict(name: str, data: typing.Any):
    cls = SECTIONS[name]
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected an object but got {data!r}")
    fields = {field.name for field in dataclasses.fields(cls)}
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}: unknown field")
    return cls(**data)


@dataclasses.dataclass
class RunConfig:
    """
    Configuration of an experiment: model, hypothesis, simulation, sampling, splitting,
    features, training, and baselines.
    """
    model: ModelSection = dataclasses.field(default_factory=ModelSection)
    hypothesis: HypothesisSection = dataclasses.field(default_factory=HypothesisSection)
    simulation: SimulationSection = dataclasses.field(default_factory=SimulationSection)
    sampler: SamplerSection = dataclasses.field(default_factory=SamplerSection)
    split: SplitSection = dataclasses.field(default_factory=SplitSection)
    features: FeaturesSection = dataclasses.field(default_factory=FeaturesSection)
    train: TrainSection = dataclasses.field(default_factory=TrainSection)
    baselines: BaselinesSection = dataclasses.field(default_factory=BaselinesSection)
    seed: int = 0
    output_dir: str = "workspace"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"expected a JSON object but got {type(data).__name__}")
        unknown = set(data) - {field.name for field in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown field")
        kwargs = {name: _section_from_dict(name, value) for name, value in data.items()
                  if name in SECTIONS}
        config = cls(**kwargs, **{key: data[key] for key in ["seed", "output_dir"]
                                  if key in data})
        config.validate()
        return config

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def hash(self) -> str:
        return hash_json(self.to_dict())

    def validate(self) -> None:
        """
        Construct every derived object so invalid settings surface before any work is done.
        """
        checks = [
            ("model", lambda: (self.model_family(), self.design_spec(), self.error_spec())),
            ("hypothesis",
             lambda: self.model_family().validate(self.design_spec(), self.hypothesis_spec())),
            ("sampler", self.sampler_config),
            ("train", self.train_config),
        ]
        for field, check in checks:
            try:
                check()
            except ConfigError:
                raise
            except (ValueError, TypeError, KeyError) as ex:
                raise ConfigError(f"{field}: {ex}") from ex

        if not isinstance(self.seed, int) or not 0 <= self.seed < MAX_SEED:
            raise ConfigError(f"seed: expected a 64-bit unsigned integer but got {self.seed!r}")
        if not 0 < self.simulation.alpha < 1:
            raise ConfigError(f"simulation.alpha: must be in (0, 1) but got "
                              f"{self.simulation.alpha}")
        if self.simulation.sims < 1:
            raise ConfigError(f"simulation.sims: must be positive but got {self.simulation.sims}")
        if self.simulation.num_workers == 0:
            raise ConfigError("simulation.num_workers: must be non-zero")
        if not 0 < self.split.fraction < 1:
            raise ConfigError(f"split.fraction: must be in (0, 1) but got {self.split.fraction}")
        if self.split.fraction not in SPLIT_FRACTIONS:
            LOGGER.warning("split fraction %g is not one of %s", self.split.fraction,
                           SPLIT_FRACTIONS)
        if not 0 < self.features.variance_target <= 1:
            raise ConfigError(f"features.variance_target: must be in (0, 1] but got "
                              f"{self.features.variance_target}")
        if not 0 < self.features.boundary < 1:
            raise ConfigError(f"features.boundary: must be in (0, 1) but got "
                              f"{self.features.boundary}")
        if self.baselines.n_neighbors < 1 or self.baselines.num_clusters < 1:
            raise ConfigError("baselines: n_neighbors and num_clusters must be positive")
        if not self.baselines.gamma > 0:
            raise ConfigError(f"baselines.gamma: must be positive but got "
                              f"{self.baselines.gamma}")

    def model_family(self) -> stat_models.ModelFamily:
        return stat_models.ModelFamily(self.model.family, tuple(self.model.rmanova_layout))

    def design_spec(self) -> stat_models.DesignSpec:
        if self.model.design is None:
            return stat_models.get_design_spec(self.model_family().default_design,
                                               self.model.predictors)
        if isinstance(self.model.design, str):
            return stat_models.get_design_spec(self.model.design, self.model.predictors)
        return stat_models.DesignSpec.from_dict(self.model.design).truncate(self.model.predictors)

    def error_spec(self) -> stat_models.ColumnSpec:
        return stat_models.ColumnSpec.from_dict(self.model.error)

    def hypothesis_spec(self) -> stat_models.Hypothesis:
        section = self.hypothesis
        return self.model_family().hypothesis(section.tested_indices, section.test)

    def sampler_config(self, num_points: int = None) -> SamplerConfig:
        k = self.model.predictors
        domain = self.sampler.beta_domain
        if len(domain) == 2 and all(isinstance(x, (int, float)) for x in domain):
            domain = [domain] * k
        if len(domain) != k:
            raise ConfigError(f"sampler.beta_domain: expected {k} bounds but got {len(domain)}")
        return SamplerConfig(self.sampler.num_points if num_points is None else num_points,
                             self.sampler.num_local, self.sampler.local_sigma, domain,
                             self.sampler.n_domain, self.sampler.local_sigma_n)

    def train_config(self, **overrides) -> TrainConfig:
        kwargs = dataclasses.asdict(self.train)
        kwargs.update(task=self.features.task, boundary=self.features.boundary)
        kwargs.update(overrides)
        return TrainConfig(**kwargs)

    def rng(self, *path: int) -> RngStream:
        return RngStream(self.seed, path)

    def split_rng(self) -> RngStream:
        if self.split.seed is None:
            return self.rng(SPLIT_STREAM)
        return RngStream(self.split.seed, (SPLIT_STREAM,))


def load_config(path: str = None, environ: typing.Mapping[str, str] = None) -> RunConfig:
    """
    Load a run configuration from JSON, applying :code:`SEED` and :code:`OUTPUT_DIR` environment
    overrides. Without a path, the defaults are used.
    """
    environ = os.environ if environ is None else environ
    data = {}
    if path is not None:
        try:
            with open(path) as fp:
                data = json.load(fp)
        except json.JSONDecodeError as ex:
            raise ConfigError(f"{path}:{ex.lineno}:{ex.colno}: {ex.msg}") from ex
        except OSError as ex:
            raise ConfigError(f"{path}: {ex.strerror}") from ex
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    data = dict(data)
    if "SEED" in environ:
        try:
            data["seed"] = int(environ["SEED"])
        except ValueError as ex:
            raise ConfigError(f"seed: invalid SEED environment variable {environ['SEED']!r}") \
                from ex
    if "OUTPUT_DIR" in environ:
        data["output_dir"] = environ["OUTPUT_DIR"]
    try:
        return RunConfig.from_dict(data)
    except TypeError as ex:
        raise ConfigError(str(ex)) from ex
