"""
Monte Carlo estimation of statistical power, collection of power records over many parameter
points, and local Gaussian sampling of the parameter space.
"""
import dataclasses
from joblib import delayed, Parallel
import logging
import numpy as np
import threading
from tqdm import tqdm
import typing
from . import stat_models
from .special_math import as_generator, Rng, RngStream


LOGGER = logging.getLogger(__name__)
MAX_REDRAWS = 5


class CallCounter:
    """
    Thread-safe count of power computations.
    """
    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def increment(self, n: int = 1) -> None:
        with self._lock:
            self._count += n

    def reset(self) -> None:
        with self._lock:
            self._count = 0

    @property
    def count(self) -> int:
        with self._lock:
            return self._count


_CALL_COUNTER = CallCounter()


def call_count() -> int:
    """
    Number of :func:`compute_power` invocations since the last reset.
    """
    return _CALL_COUNTER.count


def reset_call_count() -> None:
    _CALL_COUNTER.reset()


@dataclasses.dataclass(frozen=True)
class ParameterPoint:
    """
    Candidate model configuration.

    Args:
        beta: Model weights, one per predictor.
        N: Sample size.
    """
    beta: tuple[float, ...]
    N: int

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(x) for x in self.beta))
        if int(self.N) != self.N:
            raise ValueError(f"sample size must be integral but got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def num_predictors(self) -> int:
        return len(self.beta)

    def validate(self) -> None:
        k = self.num_predictors
        if self.N < k + 3:
            raise ValueError(f"sample size must be at least {k + 3} for {k} predictors but got "
                             f"{self.N}")


@dataclasses.dataclass(frozen=True)
class PowerRecord:
    """
    Monte Carlo power estimate at a parameter point.

    Args:
        point: Parameter point.
        power: Fraction of simulations that rejected the null hypothesis.
        sims: Number of simulations.
        alpha: Significance level.
        seed: Master seed of the simulation stream.
        metadata: Counts of singular fits, discarded and degenerate trials.
    """
    point: ParameterPoint
    power: float
    sims: int
    alpha: float
    seed: int
    metadata: dict = dataclasses.field(default_factory=dict, compare=False)

    @property
    def rejections(self) -> int:
        return round(self.power * self.sims)


@dataclasses.dataclass(frozen=True)
class SamplerConfig:
    """
    Configuration of local Gaussian sampling around uniform centroids.

    Args:
        num_points: Total number of points to emit.
        num_local: Number of Gaussian neighbors per centroid.
        local_sigma: Scale of the Gaussian neighbors.
        beta_domain: Lower and upper bound for each coefficient.
        n_domain: Lower and upper bound for the sample size.
        local_sigma_n: Scale of the Gaussian neighbors for the sample size (defaults to
            `local_sigma`).
    """
    num_points: int
    num_local: int
    local_sigma: float
    beta_domain: tuple[tuple[float, float], ...]
    n_domain: tuple[float, float]
    local_sigma_n: typing.Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "beta_domain", tuple(tuple(map(float, bounds))
                                                      for bounds in self.beta_domain))
        object.__setattr__(self, "n_domain", tuple(map(float, self.n_domain)))
        for bounds in self.beta_domain + (self.n_domain,):
            if len(bounds) != 2 or not bounds[0] < bounds[1]:
                raise ValueError(f"domain bounds must satisfy lo < hi but got {bounds}")
        if self.num_points < 0:
            raise ValueError(f"number of points must be non-negative but got {self.num_points}")
        if self.num_local < 0:
            raise ValueError(f"number of local points must be non-negative but got "
                             f"{self.num_local}")
        if not self.local_sigma > 0:
            raise ValueError(f"local sigma must be positive but got {self.local_sigma}")
        if self.local_sigma_n is not None and not self.local_sigma_n > 0:
            raise ValueError(f"local sigma for N must be positive but got {self.local_sigma_n}")
        k = len(self.beta_domain)
        if self.n_domain[1] < k + 3:
            raise ValueError(f"sample size domain {self.n_domain} admits no N >= {k + 3}")
        lower, upper = self.n_bounds
        if lower > upper:
            raise ValueError(f"sample size domain {self.n_domain} contains no integer N >= "
                             f"{k + 3}")

    @property
    def num_predictors(self) -> int:
        return len(self.beta_domain)

    @property
    def n_bounds(self) -> tuple[int, int]:
        """
        Integral sample size bounds, never below the minimum for the number of predictors.
        """
        lower = max(int(np.ceil(self.n_domain[0])), self.num_predictors + 3)
        return lower, int(np.floor(self.n_domain[1]))


def _simulate_trial(family: stat_models.ModelFamily, spec: stat_models.DesignSpec,
                    hypothesis: stat_models.Hypothesis, point: ParameterPoint, alpha: float,
                    error: stat_models.ColumnSpec, stream: RngStream, counts: dict) -> bool:
    beta = np.asarray(point.beta)
    for attempt in range(MAX_REDRAWS + 1):
        generator = stream.spawn(attempt).generator()
        design = stat_models.generate_design(spec, point.N, generator)
        response = stat_models.generate_response(family, design, beta, generator, error, spec)
        try:
            pvalue = stat_models.evaluate_p_value(family, spec, hypothesis, design, response)
        except stat_models.NonConvergenceError as ex:
            LOGGER.debug("discarding trial %s: %s", stream.path, ex)
            counts["discarded_trials"] += 1
            continue
        except stat_models.SingularFitError as ex:
            LOGGER.debug("counting singular fit as non-rejection for %s: %s", stream.path, ex)
            counts["singular_fits"] += 1
            return False
        except stat_models.DegenerateTestError as ex:
            LOGGER.debug("counting degenerate test as non-rejection for %s: %s", stream.path, ex)
            counts["degenerate_tests"] += 1
            return False
        return pvalue <= alpha
    counts["exhausted_trials"] += 1
    return False


def _estimate_power(family: stat_models.ModelFamily, spec: stat_models.DesignSpec,
                    hypothesis: stat_models.Hypothesis, point: ParameterPoint, alpha: float,
                    sims: int, error: typing.Optional[stat_models.ColumnSpec],
                    rng: RngStream) -> PowerRecord:
    if not 0 < alpha < 1:
        raise ValueError(f"significance level must be in (0, 1) but got {alpha}")
    if sims < 1:
        raise ValueError(f"number of simulations must be positive but got {sims}")
    if point.num_predictors != spec.num_predictors:
        raise stat_models.SpecificationError(
            f"point has {point.num_predictors} coefficients but design has "
            f"{spec.num_predictors} predictors"
        )
    point.validate()
    family.validate(spec, hypothesis)

    counts = {"singular_fits": 0, "discarded_trials": 0, "degenerate_tests": 0,
              "exhausted_trials": 0}
    rejections = sum(_simulate_trial(family, spec, hypothesis, point, alpha, error,
                                     rng.spawn(sim), counts) for sim in range(sims))
    if any(counts.values()):
        LOGGER.info("power at %s: %s", point, counts)
    return PowerRecord(point, rejections / sims, sims, alpha, rng.master_seed,
                       dict(counts, stream=list(rng.path)))


def compute_power(family: stat_models.ModelFamily, spec: stat_models.DesignSpec,
                  hypothesis: stat_models.Hypothesis, point: ParameterPoint,
                  alpha: float = 0.05, sims: int = 1000,
                  error: stat_models.ColumnSpec = None, rng: RngStream = None) -> PowerRecord:
    """
    Estimate power as the fraction of simulated datasets for which the test rejects the null
    hypothesis.

    Args:
        family: Model family.
        spec: Column distributions of the design.
        hypothesis: Tested coefficients and test.
        point: Coefficients and sample size.
        alpha: Significance level.
        sims: Number of simulated datasets.
        error: Distribution of the additive error (defaults to standard normal).
        rng: Stream for this point; simulation `i` uses the substream `i`.

    Returns:
        record: Power estimate with simulation metadata.
    """
    rng = rng or RngStream(0)
    record = _estimate_power(family, spec, hypothesis, point, alpha, sims, error, rng)
    _CALL_COUNTER.increment()
    return record


def generate_training_data(points: typing.Sequence[ParameterPoint],
                           family: stat_models.ModelFamily, spec: stat_models.DesignSpec,
                           hypothesis: stat_models.Hypothesis, alpha: float = 0.05,
                           sims: int = 1000, error: stat_models.ColumnSpec = None,
                           rng: RngStream = None, start_index: int = 0, num_workers: int = 1,
                           show_progress: bool = False) -> list[PowerRecord]:
    """
    Compute power records for a sequence of parameter points.

    Args:
        points: Parameter points.
        family: Model family.
        spec: Column distributions of the design.
        hypothesis: Tested coefficients and test.
        alpha: Significance level.
        sims: Number of simulated datasets per point.
        error: Distribution of the additive error.
        rng: Root stream; point `i` uses the substream `start_index + i`.
        start_index: Index of the first point, e.g., when resuming a partial run.
        num_workers: Number of parallel workers; results do not depend on it.
        show_progress: Show a progress bar.

    Returns:
        records: One record per point in the order of `points`.
    """
    rng = rng or RngStream(0)
    streams = [rng.spawn(start_index + i) for i in range(len(points))]
    if num_workers == 1:
        items = zip(points, streams)
        if show_progress:
            items = tqdm(items, total=len(points))
        return [compute_power(family, spec, hypothesis, point, alpha, sims, error, stream)
                for point, stream in items]

    records = Parallel(n_jobs=num_workers)(
        delayed(_estimate_power)(family, spec, hypothesis, point, alpha, sims, error, stream)
        for point, stream in zip(points, streams)
    )
    _CALL_COUNTER.increment(len(records))
    return records


def p_sampler(config: SamplerConfig, rng: Rng) -> list[ParameterPoint]:
    """
    Sample parameter points by drawing uniform centroids and Gaussian neighbors around them.
    Neighboring coefficients may leave the domain; sample sizes are rounded and clamped.

    Args:
        config: Sampler configuration.
        rng: Random number stream or generator.

    Returns:
        points: Exactly `config.num_points` points; each centroid precedes its neighbors.
    """
    generator = as_generator(rng)
    lower = np.asarray([lo for lo, _ in config.beta_domain] + [config.n_domain[0]])
    upper = np.asarray([hi for _, hi in config.beta_domain] + [config.n_domain[1]])
    sigma = np.full(lower.size, config.local_sigma)
    if config.local_sigma_n is not None:
        sigma[-1] = config.local_sigma_n
    n_lower, n_upper = config.n_bounds

    points = []
    while len(points) < config.num_points:
        centroid = generator.uniform(lower, upper)
        neighbors = generator.normal(centroid, sigma, size=(config.num_local, lower.size))
        for row in [centroid, *neighbors]:
            n = int(np.clip(np.rint(row[-1]), n_lower, n_upper))
            points.append(ParameterPoint(tuple(row[:-1]), n))
    return points[:config.num_points]
