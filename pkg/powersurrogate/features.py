"""
Engineered features for power surrogates: the scaled weight, principal components of the base
features, the assembled feature matrix, and persistence of points and datasets as CSV files with
JSON manifests.
"""
import dataclasses
import logging
import numpy as np
import os
import pandas as pd
from sklearn import preprocessing
import typing
from .power_engine import ParameterPoint, PowerRecord
from .special_math import as_generator, Rng
from .util import dump_json, load_json, sopen


LOGGER = logging.getLogger(__name__)
FLOAT_FORMAT = "%.10g"


class DegenerateSplitError(ValueError):
    """
    A training split contains a single class at the power boundary.
    """


def beta_names(num_predictors: int) -> list[str]:
    return [f"beta_{i}" for i in range(1, num_predictors + 1)]


def feature_names(num_predictors: int, num_components: int) -> list[str]:
    """
    Ordered names of the surrogate features.
    """
    return beta_names(num_predictors) + ["N", "scaled_weight"] + \
        [f"pc_{i}" for i in range(1, num_components + 1)]


def scaled_weight(beta: np.ndarray, N: np.ndarray) -> np.ndarray:
    """
    Sample size times the Euclidean norm of the coefficients.

    Args:
        beta: Coefficients with shape `(..., k)`.
        N: Sample sizes with shape `(...)`.

    Returns:
        weight: Scaled weight with shape `(...)`.
    """
    beta = np.asarray(beta, dtype=float)
    return np.asarray(N) * np.sqrt(np.sum(beta ** 2, axis=-1))


def base_features(betas: np.ndarray, Ns: np.ndarray) -> np.ndarray:
    """
    Stack coefficients, sample size, and scaled weight to a matrix with shape `(n, k + 2)`.
    """
    betas = np.asarray(betas, dtype=float)
    Ns = np.asarray(Ns, dtype=float)
    assert betas.ndim == 2 and Ns.shape == betas.shape[:1], \
        f"expected coefficients (n, k) and sizes (n,) but got {betas.shape} and {Ns.shape}"
    return np.column_stack([betas, Ns, scaled_weight(betas, Ns)])


@dataclasses.dataclass(frozen=True)
class PcaModel:
    """
    Principal components of standardized data.

    Args:
        means: Column means with length `p`.
        stds: Column standard deviations with length `p` (constant columns use one).
        components: Retained eigenvectors as columns of a `(p, r)` matrix.
        eigenvalues: All `p` eigenvalues of the covariance of the standardized data in
            descending order.
        variance_target: Fraction of variance the retained components explain.
    """
    means: np.ndarray
    stds: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    variance_target: float

    @property
    def num_components(self) -> int:
        return self.components.shape[1]

    @property
    def num_inputs(self) -> int:
        return self.components.shape[0]

    @property
    def all_explained_ratios(self) -> np.ndarray:
        total = self.eigenvalues.sum()
        if total == 0:
            return np.full(self.eigenvalues.size, 1 / self.eigenvalues.size)
        return self.eigenvalues / total

    @property
    def explained_ratios(self) -> np.ndarray:
        return self.all_explained_ratios[:self.num_components]

    def to_dict(self) -> dict:
        return {
            "means": self.means,
            "stds": self.stds,
            "components": self.components,
            "eigenvalues": self.eigenvalues,
            "explained_ratios": self.explained_ratios,
            "variance_target": self.variance_target,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PcaModel":
        components = np.asarray(data["components"], dtype=float)
        means = np.asarray(data["means"], dtype=float)
        return cls(means, np.asarray(data["stds"], dtype=float),
                   components.reshape(means.size, -1),
                   np.asarray(data["eigenvalues"], dtype=float), data["variance_target"])


def pca_fit(X: np.ndarray, variance_target: float = 0.99, standardize: bool = True) -> PcaModel:
    """
    Fit principal components to standardized data.

    Args:
        X: Data matrix with shape `(n, p)` and at least two rows.
        variance_target: Retain the fewest components whose cumulative explained variance reaches
            this fraction.
        standardize: Scale columns to unit variance in addition to centering them.

    Returns:
        model: Standardization statistics and retained components. The largest-magnitude entry of
            each component is positive.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.size == 0:
        raise ValueError(f"expected a non-empty matrix but got shape {X.shape}")
    n, p = X.shape
    if n < 2:
        raise ValueError(f"need at least two rows to fit principal components but got {n}")
    if not 0 < variance_target <= 1:
        raise ValueError(f"variance target must be in (0, 1] but got {variance_target}")

    scaler = preprocessing.StandardScaler(with_std=standardize).fit(X)
    stds = scaler.scale_ if standardize else np.ones(p)
    Z = (X - scaler.mean_) / stds
    eigenvalues, eigenvectors = np.linalg.eigh(Z.T @ Z / n)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0, None)
    eigenvectors = eigenvectors[:, order]
    signs = np.sign(eigenvectors[np.argmax(np.abs(eigenvectors), axis=0), np.arange(p)])
    eigenvectors = eigenvectors * np.where(signs == 0, 1, signs)

    model = PcaModel(scaler.mean_, stds, eigenvectors, eigenvalues, variance_target)
    cumulative = np.cumsum(model.all_explained_ratios)
    r = min(int(np.searchsorted(cumulative, variance_target - 1e-12)) + 1, p)
    return dataclasses.replace(model, components=eigenvectors[:, :r])


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """
    Project standardized data onto the retained components.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.num_inputs:
        raise ValueError(f"expected {model.num_inputs} columns but got shape {X.shape}")
    return (X - model.means) / model.stds @ model.components


@dataclasses.dataclass
class FeatureSet:
    """
    Surrogate features with the principal component model used to derive them.
    """
    features: np.ndarray
    names: list[str]
    pca: PcaModel
    powers: typing.Optional[np.ndarray] = None

    @property
    def num_predictors(self) -> int:
        return self.features.shape[1] - 2 - self.pca.num_components

    def labels(self, boundary: float) -> np.ndarray:
        return classification_labels(self.powers, boundary)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.features, columns=self.names)
        frame["N"] = frame["N"].round().astype(int)
        if self.powers is not None:
            frame["power"] = self.powers
        return frame


def classification_labels(powers: np.ndarray, boundary: float) -> np.ndarray:
    """
    Label well-powered points, i.e., points whose power strictly exceeds the boundary.
    """
    return (np.asarray(powers) > boundary).astype(int)


def records_to_frame(records: typing.Sequence[PowerRecord]) -> pd.DataFrame:
    if not records:
        raise ValueError("expected at least one power record")
    frame = points_to_frame([record.point for record in records])
    frame["power"] = [record.power for record in records]
    return frame


def points_to_frame(points: typing.Sequence[ParameterPoint], num_predictors: int = None) \
        -> pd.DataFrame:
    if num_predictors is None:
        num_predictors = points[0].num_predictors
    frame = pd.DataFrame([point.beta for point in points], columns=beta_names(num_predictors),
                         dtype=float)
    frame["N"] = pd.Series([point.N for point in points], dtype=int)
    return frame


def frame_betas(frame: pd.DataFrame) -> np.ndarray:
    columns = [column for column in frame.columns if column.startswith("beta_")]
    columns.sort(key=lambda column: int(column.split("_")[1]))
    return frame[columns].to_numpy(dtype=float)


def assemble_features(records: typing.Union[typing.Sequence[PowerRecord], pd.DataFrame],
                      pca: PcaModel = None, variance_target: float = 0.99) -> FeatureSet:
    """
    Assemble coefficients, sample size, scaled weight, and principal components.

    Args:
        records: Power records or a frame with `beta_*`, `N`, and optionally `power` columns.
        pca: Principal component model of the base features; fit to `records` if not given.
        variance_target: Variance target used when fitting a new principal component model.

    Returns:
        features: Feature matrix with width `k + 2 + r` and powers if available.
    """
    frame = records if isinstance(records, pd.DataFrame) else records_to_frame(records)
    if frame.empty:
        raise ValueError("expected at least one row to assemble features")
    betas = frame_betas(frame)
    base = base_features(betas, frame["N"].to_numpy())
    if pca is None:
        pca = pca_fit(base, variance_target)
    pcs = pca_transform(pca, base)
    names = feature_names(betas.shape[1], pca.num_components)
    powers = frame["power"].to_numpy(dtype=float) if "power" in frame else None
    return FeatureSet(np.column_stack([base, pcs]), names, pca, powers)


class Split(typing.NamedTuple):
    train: FeatureSet
    test: FeatureSet
    train_index: np.ndarray
    test_index: np.ndarray


def split_indices(n: int, fraction: float, rng: Rng) -> tuple[np.ndarray, np.ndarray]:
    """
    Shuffle rows into disjoint and exhaustive training and test indices.
    """
    if n < 2:
        raise ValueError(f"need at least two rows to split but got {n}")
    if not 0 < fraction < 1:
        raise ValueError(f"training fraction must be in (0, 1) but got {fraction}")
    num_train = min(max(int(round(n * fraction)), 1), n - 1)
    permutation = as_generator(rng).permutation(n)
    return np.sort(permutation[:num_train]), np.sort(permutation[num_train:])


def split_features(frame: pd.DataFrame, fraction: float, rng: Rng,
                   variance_target: float = 0.99) -> Split:
    """
    Split a dataset and assemble features, fitting principal components on the training rows only.
    """
    train_index, test_index = split_indices(len(frame), fraction, rng)
    train = assemble_features(frame.iloc[train_index], variance_target=variance_target)
    test = assemble_features(frame.iloc[test_index], pca=train.pca)
    return Split(train, test, train_index, test_index)


def training_targets(feature_set: FeatureSet, task: str, boundary: float) -> np.ndarray:
    """
    Powers for regression or labels for classification, which must contain both classes.
    """
    if task == "regress":
        return feature_set.powers
    labels = feature_set.labels(boundary)
    if labels.min() == labels.max():
        raise DegenerateSplitError(f"all {labels.size} training rows have label {labels[0]} at "
                                   f"power boundary {boundary}")
    return labels


def correlation_report(dataset: pd.DataFrame, target: str = "power") -> pd.DataFrame:
    """
    Pearson correlation of each feature column with the target column.

    Returns:
        report: Frame with `feature`, `correlation`, and `degenerate` columns; zero-variance
            features have correlation zero and are flagged as degenerate.
    """
    if len(dataset) < 3:
        raise ValueError(f"need at least three rows for correlations but got {len(dataset)}")
    y = dataset[target].to_numpy(dtype=float)
    rows = []
    for column in dataset.columns:
        if column == target:
            continue
        x = dataset[column].to_numpy(dtype=float)
        degenerate = bool(np.ptp(x) == 0 or np.ptp(y) == 0)
        correlation = 0.0 if degenerate else float(np.corrcoef(x, y)[0, 1])
        rows.append({"feature": column, "correlation": correlation, "degenerate": degenerate})
    return pd.DataFrame(rows, columns=["feature", "correlation", "degenerate"])


def manifest_path(path: str) -> str:
    """
    Path of the JSON manifest accompanying a CSV file.
    """
    return os.path.splitext(path)[0] + ".json"


def write_frame(frame: pd.DataFrame, path: str, manifest: dict = None) -> None:
    """
    Write a frame as CSV with ten significant digits and an optional manifest.
    """
    with sopen(path, "w") as fp:
        frame.to_csv(fp, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    LOGGER.info("wrote %d rows to %s", len(frame), path)
    if manifest is not None:
        dump_json(manifest, manifest_path(path))


def write_points(path: str, points: typing.Sequence[ParameterPoint], num_predictors: int,
                 manifest: dict = None) -> None:
    write_frame(points_to_frame(points, num_predictors), path, manifest)


def read_points(path: str) -> list[ParameterPoint]:
    frame = pd.read_csv(path)
    betas = frame_betas(frame)
    return [ParameterPoint(tuple(beta), n) for beta, n in zip(betas, frame["N"])]


def read_dataset(path: str) -> tuple[pd.DataFrame, dict]:
    """
    Read a dataset and its manifest if present.
    """
    frame = pd.read_csv(path)
    manifest = manifest_path(path)
    return frame, load_json(manifest) if os.path.exists(manifest) else {}
