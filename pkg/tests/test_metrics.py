import numpy as np
import os
from powersurrogate import metrics
from powersurrogate.special_math import RngStream
from powersurrogate.util import load_json
import pytest
from scipy.spatial import distance
import tempfile


def test_f1_and_accuracy():
    predicted = [1, 1, 0, 0, 1]
    true = [1, 0, 0, 1, 1]
    # Two true positives, one false positive, one false negative.
    assert metrics.f1_score(predicted, true) == pytest.approx(2 / 3)
    assert metrics.accuracy(predicted, true) == pytest.approx(3 / 5)
    assert metrics.f1_score([0, 0], [0, 0]) == 0
    with pytest.raises(ValueError):
        metrics.f1_score([0, 1], [0])
    with pytest.raises(ValueError):
        metrics.accuracy([], [])


def test_power_vector_to_distribution():
    distribution = metrics.power_vector_to_distribution([0, 0.5, 1])
    assert distribution.sum() == pytest.approx(1)
    assert np.all(distribution > 0)
    with pytest.raises(ValueError):
        metrics.power_vector_to_distribution([0.5, 1.5])
    with pytest.raises(ValueError):
        metrics.power_vector_to_distribution([])


def test_divergences_random_pairs():
    generator = np.random.default_rng(0)
    for _ in range(1000):
        size = generator.integers(1, 10)
        a = generator.dirichlet(np.ones(size))
        b = generator.dirichlet(np.ones(size))
        assert metrics.kl_divergence(a, b) >= -1e-12
        assert metrics.js_divergence(a, b) == pytest.approx(metrics.js_divergence(b, a))
        mixture = metrics.js_divergence(a, b, mixture=True)
        assert -1e-12 <= mixture <= np.log(2) + 1e-12


def test_divergences_identical():
    a = [0.2, 0.3, 0.5]
    assert metrics.kl_divergence(a, a) == pytest.approx(0, abs=1e-12)
    assert metrics.js_divergence(a, a) == pytest.approx(0, abs=1e-12)


def test_js_mixture_matches_scipy():
    a = np.asarray([0.1, 0.4, 0.5])
    b = np.asarray([0.3, 0.3, 0.4])
    expected = distance.jensenshannon(a, b) ** 2
    assert metrics.js_divergence(a, b, eps=0, mixture=True) == pytest.approx(expected)


def test_divergence_zero_entries_are_finite():
    assert np.isfinite(metrics.kl_divergence([1, 0], [0, 1]))
    with pytest.raises(ValueError):
        metrics.kl_divergence([0.5, 0.5], [1.0])
    with pytest.raises(ValueError):
        metrics.kl_divergence([-0.5, 1.5], [0.5, 0.5])


def test_confidence_interval_95():
    samples = np.random.default_rng(1).normal(3, 1, 400)
    lower, upper = metrics.confidence_interval_95(samples, RngStream(0))
    assert lower < samples.mean() < upper
    assert upper - lower == pytest.approx(2 * 1.96 / 20, rel=0.25)
    assert metrics.confidence_interval_95(samples, RngStream(0)) == (lower, upper)
    with pytest.raises(ValueError):
        metrics.confidence_interval_95([1.0], RngStream(0))


def test_confidence_interval_constant_samples():
    lower, upper = metrics.confidence_interval_95(np.ones(10), RngStream(0))
    assert lower <= 1 <= upper


def test_evaluate_classification():
    true = np.asarray([1, 0] * 50)
    predicted = true.copy()
    predicted[:10] = 1 - predicted[:10]
    report = metrics.evaluate_classification(predicted, true, RngStream(0), call_count=10,
                                             call_ratio=0.1)
    assert report.task == "classify"
    assert report.metrics["accuracy"] == pytest.approx(0.9)
    lower, upper = report.intervals["f1"]
    assert lower <= report.metrics["f1"] <= upper
    assert report.num_rows == 100
    assert report.call_count == 10
    assert not report.degenerate


def test_evaluate_classification_empty():
    report = metrics.evaluate_classification([], [])
    assert report.degenerate
    assert report.metrics == {} and report.num_rows == 0


def test_evaluate_regression():
    generator = np.random.default_rng(2)
    true = generator.uniform(0, 1, 200)
    predicted = np.clip(true + generator.normal(0, 0.05, 200), 0, 1)
    report = metrics.evaluate_regression(predicted, true, RngStream(0))
    assert report.metrics["rmse"] < 0.1
    assert report.metrics["js"] < report.metrics["js_random"]
    assert report.metrics["js_improvement"] > 1
    assert report.metrics["js_mixture"] <= np.log(2)
    lower, upper = report.intervals["js"]
    assert lower <= report.metrics["js"] <= upper
    assert metrics.evaluate_regression([], []).degenerate
    with pytest.raises(ValueError):
        metrics.evaluate_regression([0.1], [0.1, 0.2])


def test_cascade_evaluate():
    powers = np.asarray([0.9, 0.95, 0.7, 0.65, 0.3, 0.1])
    c1 = np.asarray([1, 1, 0, 0, 0, 0])
    c2 = np.asarray([1, 1, 1, 0, 0, 0])
    reports = metrics.cascade_evaluate(c1, c2, powers, (0.8, 0.6), RngStream(0))
    assert reports["C1"].metrics["f1"] == 1
    # The second classifier is only evaluated on the four remaining rows.
    assert reports["C2"].num_rows == 4
    assert reports["C2"].metrics["accuracy"] == pytest.approx(3 / 4)


def test_cascade_evaluate_all_above_upper_boundary():
    powers = np.asarray([0.9, 0.95])
    reports = metrics.cascade_evaluate([1, 1], [1, 1], powers, (0.8, 0.6))
    assert reports["C2"].degenerate
    with pytest.raises(ValueError):
        metrics.cascade_evaluate([1], [1, 1], powers)


def test_eval_report_save():
    report = metrics.evaluate_classification([1, 0, 1], [1, 0, 0], RngStream(0),
                                             identifiers={"method": "pnn"}, config_hash="abc")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'report.json')
        report.save(path)
        data = load_json(path)
    assert data["identifiers"] == {"method": "pnn"}
    assert data["interval_method"] == metrics.CI_METHOD
    assert set(data["metrics"]) == {"f1", "accuracy"}
