import argparse
import numpy as np
import os
import pandas as pd
import typing
from .. import config as config_, features, metrics, surrogate
from ..util import hash_json


def make_parser(description: str) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--config", help="JSON run configuration (defaults are used if omitted)")
    return parser


def output_path(config: config_.RunConfig, path: typing.Optional[str], default: str) -> str:
    """
    Use the given path or fall back to a file in the configured output directory.
    """
    return path or os.path.join(config.output_dir, default)


def dataset_identifier(manifest: dict) -> typing.Optional[str]:
    return hash_json(manifest) if manifest else None


def load_split(config: config_.RunConfig, dataset: str, fraction: float = None) \
        -> tuple[pd.DataFrame, dict, features.Split]:
    """
    Read a dataset and split it with the configured split stream, fitting principal components
    on the training rows.
    """
    frame, manifest = features.read_dataset(dataset)
    fraction = config.split.fraction if fraction is None else fraction
    split = features.split_features(frame, fraction, config.split_rng(),
                                    config.features.variance_target)
    return frame, manifest, split


def evaluate_checkpoint(checkpoint: surrogate.NetworkCheckpoint, feature_set: features.FeatureSet,
                        rng, **kwargs) -> metrics.EvalReport:
    """
    Score a checkpoint on features with known powers using the task and boundary it was trained
    for.
    """
    meta = checkpoint.training_meta
    if meta.get("task", "classify") == "regress":
        return metrics.evaluate_regression(surrogate.predict(checkpoint, feature_set.features),
                                           feature_set.powers, rng, **kwargs)
    predicted = surrogate.predict_labels(checkpoint, feature_set.features)
    return metrics.evaluate_classification(predicted, feature_set.labels(meta["boundary"]), rng,
                                           **kwargs)


def split_meta(split: features.Split, fraction: float) -> dict:
    num_train = int(split.train_index.size)
    return {
        "fraction": fraction,
        "num_train": num_train,
        "num_rows": num_train + int(split.test_index.size),
    }


def train_call_counts(split: features.Split) -> dict:
    """
    Power computations consumed by training on the labeled rows of a split.
    """
    num_train = int(split.train_index.size)
    return {
        "call_count": num_train,
        "call_ratio": num_train / (num_train + int(np.size(split.test_index))),
    }
