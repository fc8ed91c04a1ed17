"""
Baselines that label parameter points as well-powered without a neural surrogate.
"""
import dataclasses
import logging
import numbers
import numpy as np
import pandas as pd
from scipy import spatial
from sklearn import cluster, preprocessing, semi_supervised
import typing
from .features import assemble_features, FeatureSet
from .special_math import as_generator, Rng, RngStream


LOGGER = logging.getLogger(__name__)
DEFAULT_CLUSTER_AXES = ("pc_1", "scaled_weight")


def p_rand(test_rows: typing.Union[np.ndarray, int], rng: Rng) -> np.ndarray:
    """
    Label each row well-powered with probability one half.
    """
    n = test_rows if isinstance(test_rows, numbers.Integral) else len(test_rows)
    return as_generator(rng).integers(0, 2, size=n)


@dataclasses.dataclass
class ClusterModel:
    """
    Result of k-means clustering.

    Args:
        centroids: Cluster centers with shape `(num_clusters, d)` in standardized coordinates.
        feature_axes: Names of the clustered columns.
        inertia: Sum of squared distances between rows and their assigned centers.
        assignments: Cluster index of each clustered row.
        num_iterations: Number of Lloyd iterations of the best restart.
        means: Means subtracted before clustering.
        scales: Scales rows are divided by before clustering.
    """
    centroids: np.ndarray
    feature_axes: tuple[str, ...]
    inertia: float
    assignments: np.ndarray
    num_iterations: int = 0
    means: typing.Optional[np.ndarray] = None
    scales: typing.Optional[np.ndarray] = None

    @property
    def num_clusters(self) -> int:
        return self.centroids.shape[0]

    def to_dict(self) -> dict:
        return {
            "centroids": self.centroids,
            "feature_axes": list(self.feature_axes),
            "inertia": self.inertia,
            "num_iterations": self.num_iterations,
        }


def kmeans(points: np.ndarray, num_clusters: int, rng: Rng, num_init: int = 10,
           max_iter: int = 300, init: typing.Union[str, np.ndarray] = "k-means++",
           feature_axes: typing.Sequence[str] = ()) -> ClusterModel:
    """
    Cluster points with k-means++ seeding and Lloyd iterations, keeping the restart with the
    smallest inertia. Empty clusters are re-seeded at the points farthest from their centers.

    Args:
        points: Matrix with shape `(n, d)`.
        num_clusters: Number of clusters.
        rng: Random number stream or generator for seeding.
        num_init: Number of restarts.
        max_iter: Maximum number of Lloyd iterations per restart.
        init: Seeding method or initial centers with shape `(num_clusters, d)`.
        feature_axes: Names of the columns of `points`.

    Returns:
        model: Centers, assignments, and inertia.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError(f"expected a matrix but got shape {points.shape}")
    if not 1 <= num_clusters <= points.shape[0]:
        raise ValueError(f"number of clusters must be between 1 and {points.shape[0]} but got "
                         f"{num_clusters}")
    if not isinstance(init, str):
        num_init = 1
    seed = int(as_generator(rng).integers(2 ** 31 - 1))
    estimator = cluster.KMeans(num_clusters, init=init, n_init=num_init, max_iter=max_iter,
                               tol=0, algorithm="lloyd", random_state=seed)
    estimator.fit(points)
    return ClusterModel(estimator.cluster_centers_, tuple(feature_axes), float(estimator.inertia_),
                        estimator.labels_, int(estimator.n_iter_))


def cluster_axes(feature_set: FeatureSet, axes: typing.Union[typing.Sequence[str], str]) \
        -> list[str]:
    """
    Resolve clustering axes; :code:`pca` selects all principal components.
    """
    if axes == "pca":
        return [name for name in feature_set.names if name.startswith("pc_")]
    missing = set(axes) - set(feature_set.names)
    if missing:
        raise ValueError(f"unknown clustering axes {sorted(missing)}")
    return list(axes)


def power_cluster(dataset: typing.Union[pd.DataFrame, FeatureSet], num_clusters: int, rng: Rng,
                  axes: typing.Union[typing.Sequence[str], str] = DEFAULT_CLUSTER_AXES,
                  variance_target: float = 0.99, **kwargs) -> ClusterModel:
    """
    Cluster the power surface on engineered features without consuming power labels.

    Args:
        dataset: Frame with `beta_*` and `N` columns or assembled features.
        num_clusters: Number of clusters.
        rng: Random number stream or generator for seeding.
        axes: Feature names to cluster on after standardization, or :code:`pca` for all principal
            components.
        variance_target: Variance target when fitting principal components to a frame.
        **kwargs: Keyword arguments passed to :func:`kmeans`.

    Returns:
        model: Clusters with one assignment per row of the dataset.
    """
    if isinstance(dataset, pd.DataFrame):
        if len(dataset) == 0:
            raise ValueError("expected a non-empty dataset")
        if len(dataset) == 1:
            if num_clusters != 1:
                raise ValueError("a single row admits only one cluster")
            # A lone centered row sits at the origin of any standardized space.
            axes = list(DEFAULT_CLUSTER_AXES if axes == "pca" else axes)
            return ClusterModel(np.zeros((1, len(axes))), tuple(axes), 0.0, np.zeros(1, int))
        dataset = assemble_features(dataset.drop(columns="power", errors="ignore"),
                                    variance_target=variance_target)
    names = cluster_axes(dataset, axes)
    columns = [dataset.names.index(name) for name in names]
    scaler = preprocessing.StandardScaler()
    points = scaler.fit_transform(dataset.features[:, columns])
    model = kmeans(points, num_clusters, rng, feature_axes=names, **kwargs)
    model.means = scaler.mean_
    model.scales = scaler.scale_
    LOGGER.info("clustered %d rows on %s into %d clusters with inertia %.3f", len(points), names,
                num_clusters, model.inertia)
    return model


def cluster_to_class_labels(assignments: np.ndarray, true_labels: np.ndarray) -> np.ndarray:
    """
    Label each row with the majority true label of its cluster; ties favor zero. This mapping
    uses the labels it is evaluated on and is an optimistic bound.
    """
    assignments = np.asarray(assignments)
    true_labels = np.asarray(true_labels, dtype=int)
    predicted = np.zeros_like(true_labels)
    for value in np.unique(assignments):
        fltr = assignments == value
        predicted[fltr] = int(true_labels[fltr].mean() > 0.5)
    return predicted


def kneighbors_classify(train_features: np.ndarray, train_labels: np.ndarray,
                        test_features: np.ndarray, n_neighbors: int = 5,
                        standardize: bool = True) -> np.ndarray:
    """
    Majority vote among the nearest training rows by Euclidean distance. Ties are broken by
    voting among fewer, nearer neighbors.

    Args:
        train_features: Training features with shape `(n, p)`.
        train_labels: Binary training labels.
        test_features: Features to classify with shape `(m, p)`.
        n_neighbors: Number of neighbors.
        standardize: Standardize features using training statistics.

    Returns:
        labels: Predicted labels with length `m`.
    """
    train_features = np.asarray(train_features, dtype=float)
    train_labels = np.asarray(train_labels, dtype=int)
    test_features = np.asarray(test_features, dtype=float)
    if train_features.shape[0] == 0:
        raise ValueError("expected at least one training row")
    if not 1 <= n_neighbors <= train_features.shape[0]:
        raise ValueError(f"number of neighbors must be between 1 and {train_features.shape[0]} "
                         f"but got {n_neighbors}")
    if test_features.shape[0] == 0:
        return np.zeros(0, dtype=int)

    if standardize:
        scaler = preprocessing.StandardScaler()
        train_features = scaler.fit_transform(train_features)
        test_features = scaler.transform(test_features)
    reference = spatial.KDTree(train_features)
    _, indices = reference.query(test_features, k=n_neighbors)
    neighbor_labels = train_labels[np.reshape(indices, (test_features.shape[0], n_neighbors))]

    predicted = np.zeros(test_features.shape[0], dtype=int)
    for i, labels in enumerate(neighbor_labels):
        for k in range(n_neighbors, 0, -1):
            counts = np.bincount(labels[:k], minlength=2)
            if counts[0] != counts[1]:
                predicted[i] = int(counts[1] > counts[0])
                break
    return predicted


@dataclasses.dataclass
class PropagationModel:
    """
    Result of label propagation.

    Args:
        kernel_gamma: Width parameter of the RBF affinity.
        labeled: Mask of rows whose labels were clamped.
        label_distributions: Class probabilities per row with shape `(n, num_classes)`.
        transduction: Predicted label of each row.
        num_iterations: Number of propagation steps.
        converged: Whether the label change fell below the tolerance.
    """
    kernel_gamma: float
    labeled: np.ndarray
    label_distributions: np.ndarray
    transduction: np.ndarray
    num_iterations: int
    converged: bool


def label_propagation(features: np.ndarray, labels: np.ndarray, gamma: float = 20,
                      max_iter: int = 1000, tol: float = 1e-3, standardize: bool = True) \
        -> PropagationModel:
    """
    Propagate labels over a fully connected graph with RBF affinities, clamping labeled rows.

    Args:
        features: Features of labeled and unlabeled rows with shape `(n, p)`.
        labels: Labels with `-1` marking unlabeled rows.
        gamma: RBF kernel parameter.
        max_iter: Maximum number of propagation steps.
        tol: Convergence threshold of the label change.
        standardize: Standardize features to zero mean and unit variance before computing
            affinities; the kernel then acts on the standardized rows.

    Returns:
        model: Label distributions and transduced labels.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    labeled = labels != -1
    if not labeled.any():
        raise ValueError("label propagation requires at least one labeled row")
    if not gamma > 0:
        raise ValueError(f"kernel gamma must be positive but got {gamma}")
    if standardize:
        features = preprocessing.StandardScaler().fit_transform(features)
    estimator = semi_supervised.LabelPropagation(kernel="rbf", gamma=gamma, max_iter=max_iter,
                                                 tol=tol)
    estimator.fit(features, labels)
    num_iterations = int(estimator.n_iter_)
    return PropagationModel(gamma, labeled, estimator.label_distributions_,
                            estimator.transduction_, num_iterations, num_iterations < max_iter)


class Baseline:
    """
    Abstract interface for predicting well-powered labels of held-out rows.
    """
    name: str = None

    def fit_predict(self, train: FeatureSet, train_labels: np.ndarray, test: FeatureSet,
                    test_labels: np.ndarray, rng: RngStream) -> np.ndarray:
        """
        Predict labels of the test rows.

        Args:
            train: Features of the training rows.
            train_labels: Binary labels of the training rows.
            test: Features of the test rows, derived with the training principal components.
            test_labels: Binary labels of the test rows; only consumed by baselines that map
                unsupervised clusters to classes.
            rng: Random number stream.

        Returns:
            labels: Predicted labels of the test rows.
        """
        raise NotImplementedError

    @property
    def logger(self):
        return logging.getLogger(self.__class__.__name__)


class RandomBaseline(Baseline):
    name = "rand"

    def fit_predict(self, train, train_labels, test, test_labels, rng):
        return p_rand(test.features.shape[0], rng)


class ClusterBaseline(Baseline):
    """
    Cluster test rows and label each cluster with its majority true label.
    """
    name = "cluster"

    def __init__(self, num_clusters: int = 2, axes: typing.Union[typing.Sequence[str], str] =
                 DEFAULT_CLUSTER_AXES):
        self.num_clusters = num_clusters
        self.axes = axes
        self.model: typing.Optional[ClusterModel] = None

    def fit_predict(self, train, train_labels, test, test_labels, rng):
        num_clusters = min(self.num_clusters, test.features.shape[0])
        self.model = power_cluster(test, num_clusters, rng, self.axes)
        return cluster_to_class_labels(self.model.assignments, test_labels)


class KNeighborsBaseline(Baseline):
    name = "kneighbors"

    def __init__(self, n_neighbors: int = 5, standardize: bool = True):
        self.n_neighbors = n_neighbors
        self.standardize = standardize

    def fit_predict(self, train, train_labels, test, test_labels, rng):
        n_neighbors = min(self.n_neighbors, train.features.shape[0])
        if n_neighbors < self.n_neighbors:
            self.logger.warning("reducing neighbors from %d to %d for %d training rows",
                                self.n_neighbors, n_neighbors, n_neighbors)
        return kneighbors_classify(train.features, train_labels, test.features, n_neighbors,
                                   self.standardize)


class LabelPropagationBaseline(Baseline):
    """
    Transduce labels of the unlabeled test rows from the labeled training rows.
    """
    name = "labelprop"

    def __init__(self, gamma: float = 20, max_iter: int = 1000, tol: float = 1e-3,
                 standardize: bool = True):
        self.gamma = gamma
        self.max_iter = max_iter
        self.tol = tol
        self.standardize = standardize
        self.model: typing.Optional[PropagationModel] = None

    def fit_predict(self, train, train_labels, test, test_labels, rng):
        features = np.concatenate([train.features, test.features])
        labels = np.concatenate([train_labels, -np.ones(test.features.shape[0], dtype=int)])
        self.model = label_propagation(features, labels, self.gamma, self.max_iter, self.tol,
                                       self.standardize)
        if not self.model.converged:
            self.logger.warning("label propagation did not converge after %d iterations",
                                self.model.num_iterations)
        return self.model.transduction[train.features.shape[0]:]


BASELINES = {cls.name: cls for cls in [RandomBaseline, ClusterBaseline, KNeighborsBaseline,
                                        LabelPropagationBaseline]}
