import numpy as np
import pandas as pd
from powersurrogate import baselines, features
from powersurrogate.special_math import RngStream
import pytest


@pytest.fixture
def dataset():
    generator = np.random.default_rng(7)
    n = 120
    betas = generator.uniform(-0.3, 0.3, (n, 3))
    frame = pd.DataFrame(betas, columns=features.beta_names(3))
    frame["N"] = generator.integers(25, 200, n)
    frame["power"] = np.clip(features.scaled_weight(betas, frame["N"]) / 50, 0, 1)
    return frame


@pytest.fixture
def split(dataset):
    return features.split_features(dataset, 0.4, RngStream(0))


def test_p_rand():
    labels = baselines.p_rand(10_000, RngStream(0))
    assert set(np.unique(labels)) == {0, 1}
    assert abs(labels.mean() - 0.5) < 0.02
    assert baselines.p_rand(np.zeros((3, 2)), RngStream(0)).shape == (3,)
    assert baselines.p_rand(0, RngStream(0)).shape == (0,)
    np.testing.assert_array_equal(baselines.p_rand(20, RngStream(1)),
                                  baselines.p_rand(20, RngStream(1)))


def test_kmeans_separated_blobs():
    generator = np.random.default_rng(0)
    centers = np.asarray([[0, 0], [10, 0], [0, 10]])
    points = np.concatenate([generator.normal(center, 0.1, (30, 2)) for center in centers])
    model = baselines.kmeans(points, 3, RngStream(0))
    assert model.num_clusters == 3
    for i in range(3):
        assert np.unique(model.assignments[30 * i:30 * (i + 1)]).size == 1
    assert np.unique(model.assignments).size == 3


def test_kmeans_inertia_decreases(dataset):
    points = features.assemble_features(dataset).features
    inertias = [baselines.kmeans(points, k, RngStream(1)).inertia for k in range(1, 6)]
    assert all(b <= a * 1.01 for a, b in zip(inertias, inertias[1:]))


@pytest.mark.parametrize('num_clusters', [0, 5])
def test_kmeans_invalid(num_clusters):
    with pytest.raises(ValueError):
        baselines.kmeans(np.zeros((4, 2)), num_clusters, RngStream(0))


@pytest.mark.parametrize('axes', [baselines.DEFAULT_CLUSTER_AXES, 'pca', ['N']])
def test_power_cluster(dataset, axes):
    model = baselines.power_cluster(dataset, 3, RngStream(2), axes)
    assert model.assignments.shape == (len(dataset),)
    assert model.num_clusters == 3
    if axes == 'pca':
        assert all(axis.startswith('pc_') for axis in model.feature_axes)
    assert model.means is not None


def test_power_cluster_edge_cases(dataset):
    model = baselines.power_cluster(dataset.iloc[:1], 1, RngStream(0))
    np.testing.assert_array_equal(model.assignments, [0])
    with pytest.raises(ValueError):
        baselines.power_cluster(dataset.iloc[:1], 2, RngStream(0))
    with pytest.raises(ValueError):
        baselines.power_cluster(dataset.iloc[:0], 1, RngStream(0))
    with pytest.raises(ValueError, match='unknown clustering axes'):
        baselines.power_cluster(dataset, 2, RngStream(0), ['power'])


def test_cluster_to_class_labels():
    assignments = [0, 0, 0, 1, 1, 2, 2]
    true_labels = [1, 1, 0, 0, 0, 1, 0]
    np.testing.assert_array_equal(baselines.cluster_to_class_labels(assignments, true_labels),
                                  [1, 1, 1, 0, 0, 0, 0])


def test_kneighbors_classify():
    train = np.asarray([[0.0], [1], [2], [10], [11], [12]])
    labels = np.asarray([0, 0, 0, 1, 1, 1])
    predicted = baselines.kneighbors_classify(train, labels, [[0.5], [11.5]], 3)
    np.testing.assert_array_equal(predicted, [0, 1])
    assert baselines.kneighbors_classify(train, labels, np.zeros((0, 1)), 3).shape == (0,)
    with pytest.raises(ValueError):
        baselines.kneighbors_classify(train, labels, [[0.5]], 7)


def test_kneighbors_breaks_ties_with_nearer_neighbors():
    train = np.asarray([[0.0], [1], [3], [4]])
    labels = np.asarray([1, 0, 0, 1])
    # Two neighbors tie; the single nearest neighbor decides.
    assert baselines.kneighbors_classify(train, labels, [[0.1]], 2, standardize=False)[0] == 1


def test_label_propagation():
    features_ = np.asarray([[0.0], [0.1], [0.2], [5], [5.1], [5.2]])
    labels = np.asarray([0, -1, -1, 1, -1, -1])
    model = baselines.label_propagation(features_, labels, gamma=1, standardize=False)
    np.testing.assert_array_equal(model.transduction, [0, 0, 0, 1, 1, 1])
    # Labeled rows are clamped.
    np.testing.assert_array_equal(model.transduction[model.labeled], [0, 1])
    np.testing.assert_allclose(model.label_distributions.sum(axis=1), 1)
    assert model.converged


def test_label_propagation_kernel_acts_on_standardized_rows():
    # Columns on the scale of sample sizes would drive every raw affinity to zero.
    features_ = np.column_stack([np.linspace(-0.3, 0.3, 12), np.linspace(25, 200, 12)])
    labels = np.asarray([0, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 1])
    standardized = (features_ - features_.mean(axis=0)) / features_.std(axis=0)
    model = baselines.label_propagation(features_, labels)
    expected = baselines.label_propagation(standardized, labels, standardize=False)
    np.testing.assert_allclose(model.label_distributions, expected.label_distributions)
    np.testing.assert_array_equal(model.transduction, expected.transduction)
    assert model.transduction[0] == 0 and model.transduction[-1] == 1

    baseline = baselines.LabelPropagationBaseline(standardize=False)
    assert not baseline.standardize


def test_label_propagation_invalid():
    with pytest.raises(ValueError):
        baselines.label_propagation(np.zeros((3, 1)), [-1, -1, -1])
    with pytest.raises(ValueError):
        baselines.label_propagation(np.zeros((3, 1)), [0, 1, -1], gamma=0)


@pytest.mark.parametrize('name', sorted(baselines.BASELINES))
def test_baselines(split, name):
    baseline = baselines.BASELINES[name]()
    train_labels = split.train.labels(0.8)
    test_labels = split.test.labels(0.8)
    predicted = baseline.fit_predict(split.train, train_labels, split.test, test_labels,
                                     RngStream(3))
    assert predicted.shape == test_labels.shape
    assert set(np.unique(predicted)) <= {0, 1}
    if name in {'cluster', 'kneighbors'}:
        assert (predicted == test_labels).mean() > 0.6
    if name == 'cluster':
        assert baseline.model.assignments.shape == test_labels.shape
