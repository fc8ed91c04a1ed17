"""
Scores of surrogate and baseline predictions with bootstrap confidence intervals.
"""
import dataclasses
import logging
import numpy as np
from scipy import special, stats
from sklearn import metrics
import typing
from .special_math import as_generator, Rng, RngStream
from .util import dump_json


LOGGER = logging.getLogger(__name__)
EPSILON = 1e-12
NUM_RESAMPLES = 1000
CI_METHOD = f"percentile bootstrap with {NUM_RESAMPLES} resamples"


def _check_labels(predicted: np.ndarray, true: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    predicted = np.asarray(predicted, dtype=int)
    true = np.asarray(true, dtype=int)
    if predicted.shape != true.shape:
        raise ValueError(f"predicted labels with shape {predicted.shape} do not match true labels "
                         f"with shape {true.shape}")
    if predicted.size == 0:
        raise ValueError("expected at least one label")
    return predicted, true


def f1_score(predicted: np.ndarray, true: np.ndarray) -> float:
    """
    F1 score of the positive class, zero if there are no true or predicted positives.
    """
    predicted, true = _check_labels(predicted, true)
    return float(metrics.f1_score(true, predicted, zero_division=0))


def accuracy(predicted: np.ndarray, true: np.ndarray) -> float:
    predicted, true = _check_labels(predicted, true)
    return float(metrics.accuracy_score(true, predicted))


def power_vector_to_distribution(powers: np.ndarray, eps: float = EPSILON) -> np.ndarray:
    """
    Interpret a vector of powers as a probability distribution by smoothing and normalizing.
    """
    powers = np.asarray(powers, dtype=float)
    if powers.ndim != 1 or powers.size == 0:
        raise ValueError(f"expected a non-empty vector of powers but got shape {powers.shape}")
    if np.any(powers < 0) or np.any(powers > 1):
        raise ValueError("powers must be in [0, 1]")
    smoothed = powers + eps
    return smoothed / smoothed.sum()


def _smooth(a: np.ndarray, b: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"distributions with shapes {a.shape} and {b.shape} differ in length")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("probabilities must be non-negative")
    a = a + eps
    b = b + eps
    return a / a.sum(), b / b.sum()


def kl_divergence(a: np.ndarray, b: np.ndarray, eps: float = EPSILON) -> float:
    """
    Kullback-Leibler divergence in nats after adding `eps` to both distributions and normalizing.
    """
    a, b = _smooth(a, b, eps)
    return float(np.sum(special.rel_entr(a, b)))


def js_divergence(a: np.ndarray, b: np.ndarray, eps: float = EPSILON, mixture: bool = False) \
        -> float:
    """
    Symmetric divergence between two distributions.

    Args:
        a: First distribution.
        b: Second distribution.
        eps: Smoothing added to both distributions.
        mixture: Use the Jensen-Shannon divergence relative to the midpoint mixture, bounded by
            :math:`\\ln 2`, instead of the average of the two directed Kullback-Leibler
            divergences.
    """
    if mixture:
        a, b = _smooth(a, b, eps)
        m = (a + b) / 2
        return (kl_divergence(a, m, 0) + kl_divergence(b, m, 0)) / 2
    return (kl_divergence(a, b, eps) + kl_divergence(b, a, eps)) / 2


def confidence_interval_95(samples: np.ndarray, rng: Rng = None,
                           statistic: typing.Callable = np.mean,
                           num_resamples: int = NUM_RESAMPLES) -> tuple[float, float]:
    """
    Percentile bootstrap interval of a statistic, widened if necessary to contain the point
    estimate.

    Args:
        samples: Samples, e.g., per-row correctness indicators, or a tuple of paired sample
            vectors passed to `statistic` together.
        rng: Random number stream or generator for resampling.
        statistic: Function of the samples.
        num_resamples: Number of bootstrap resamples.

    Returns:
        interval: Lower and upper bound.
    """
    paired = isinstance(samples, tuple)
    data = tuple(np.asarray(x) for x in samples) if paired else (np.asarray(samples),)
    if len(data[0]) < 2:
        raise ValueError(f"need at least two samples for a confidence interval but got "
                         f"{len(data[0])}")
    estimate = statistic(*data)
    result = stats.bootstrap(data, statistic, n_resamples=num_resamples, vectorized=False,
                             paired=paired, confidence_level=0.95, method="percentile",
                             random_state=as_generator(rng or RngStream(0)))
    interval = result.confidence_interval
    lower, upper = interval.low, interval.high
    if not np.isfinite(lower) or not np.isfinite(upper):
        lower = upper = estimate
    return float(min(lower, estimate)), float(max(upper, estimate))


@dataclasses.dataclass
class EvalReport:
    """
    Scores of predictions on a test set.

    Args:
        task: :code:`classify` or :code:`regress`.
        metrics: Point estimates by metric name.
        intervals: 95% confidence intervals by metric name.
        num_rows: Number of evaluated rows.
        call_count: Number of power computations consumed for training.
        call_ratio: Ratio of consumed power computations to dataset rows.
        identifiers: Dataset, manifest, and checkpoint identifiers.
        config_hash: Hash of the run configuration.
        degenerate: Whether the evaluation set was empty.
    """
    task: str
    metrics: dict[str, float]
    intervals: dict[str, tuple[float, float]]
    num_rows: int
    call_count: typing.Optional[int] = None
    call_ratio: typing.Optional[float] = None
    identifiers: dict = dataclasses.field(default_factory=dict)
    config_hash: typing.Optional[str] = None
    degenerate: bool = False
    interval_method: str = CI_METHOD

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def save(self, path: str) -> None:
        dump_json(self.to_dict(), path)


def evaluate_classification(predicted: np.ndarray, true: np.ndarray, rng: Rng = None,
                            **kwargs) -> EvalReport:
    """
    F1 score and accuracy with bootstrap intervals; an empty test set is flagged degenerate.
    """
    predicted = np.asarray(predicted, dtype=int)
    true = np.asarray(true, dtype=int)
    if predicted.size == 0:
        return EvalReport("classify", {}, {}, 0, degenerate=True, **kwargs)
    scores = {"f1": f1_score(predicted, true), "accuracy": accuracy(predicted, true)}
    intervals = {}
    if predicted.size >= 2:
        intervals["f1"] = confidence_interval_95((predicted, true), rng,
                                                 lambda p, t: f1_score(p, t))
        intervals["accuracy"] = confidence_interval_95((predicted, true), rng,
                                                       lambda p, t: accuracy(p, t))
    return EvalReport("classify", scores, intervals, int(predicted.size), **kwargs)


def evaluate_regression(predicted: np.ndarray, true: np.ndarray, rng: RngStream = None,
                        **kwargs) -> EvalReport:
    """
    Divergences between predicted and true powers, interpreted as distributions, and pointwise
    errors. The random baseline predicts powers uniformly at random.
    """
    predicted = np.clip(np.asarray(predicted, dtype=float), 0, 1)
    true = np.asarray(true, dtype=float)
    if predicted.shape != true.shape:
        raise ValueError(f"predictions with shape {predicted.shape} do not match truth with shape "
                         f"{true.shape}")
    if predicted.size == 0:
        return EvalReport("regress", {}, {}, 0, degenerate=True, **kwargs)
    rng = rng or RngStream(0)

    def js(p, t):
        return js_divergence(power_vector_to_distribution(p), power_vector_to_distribution(t))

    random = rng.spawn(0).generator().uniform(0, 1, true.size)
    scores = {
        "js": js(predicted, true),
        "js_mixture": js_divergence(power_vector_to_distribution(predicted),
                                    power_vector_to_distribution(true), mixture=True),
        "kl": kl_divergence(power_vector_to_distribution(true),
                            power_vector_to_distribution(predicted)),
        "rmse": float(np.sqrt(metrics.mean_squared_error(true, predicted))),
        "mae": float(metrics.mean_absolute_error(true, predicted)),
        "js_random": js(random, true),
    }
    scores["js_improvement"] = scores["js_random"] / scores["js"] if scores["js"] > 0 else None
    intervals = {}
    if predicted.size >= 2:
        intervals["js"] = confidence_interval_95((predicted, true), rng.spawn(1), js)
        intervals["rmse"] = confidence_interval_95(
            (predicted, true), rng.spawn(1),
            lambda p, t: float(np.sqrt(np.mean((p - t) ** 2))))
    return EvalReport("regress", scores, intervals, int(predicted.size), **kwargs)


def cascade_evaluate(c1_predicted: np.ndarray, c2_predicted: np.ndarray, powers: np.ndarray,
                     boundaries: tuple[float, float] = (0.8, 0.6), rng: RngStream = None,
                     **kwargs) -> dict[str, EvalReport]:
    """
    Evaluate a two-boundary cascade: the first classifier finds points above the upper boundary
    and the second classifies the remaining points against the lower boundary.

    Args:
        c1_predicted: Labels of the upper-boundary classifier for all test rows.
        c2_predicted: Labels of the lower-boundary classifier for all test rows.
        powers: True powers of the test rows.
        boundaries: Upper and lower power boundary.
        rng: Random number stream for bootstrap intervals.
        **kwargs: Additional fields of the reports.

    Returns:
        reports: Separate reports for :code:`C1` on all rows and :code:`C2` on rows the first
            classifier did not predict to exceed the upper boundary.
    """
    c1_predicted = np.asarray(c1_predicted, dtype=int)
    c2_predicted = np.asarray(c2_predicted, dtype=int)
    powers = np.asarray(powers, dtype=float)
    if not c1_predicted.shape == c2_predicted.shape == powers.shape:
        raise ValueError("cascade predictions and powers must have the same shape")
    upper, lower = boundaries
    rng = rng or RngStream(0)
    remainder = c1_predicted == 0
    reports = {
        "C1": evaluate_classification(c1_predicted, powers > upper, rng, **kwargs),
        "C2": evaluate_classification(c2_predicted[remainder], powers[remainder] > lower,
                                      rng.spawn(1), **kwargs),
    }
    if reports["C2"].degenerate:
        LOGGER.warning("first classifier predicted all rows above %g; second classifier has no "
                       "rows to evaluate", upper)
    return reports
