import logging
import pandas as pd
from . import dataset_identifier, evaluate_checkpoint, make_parser, output_path
from .. import features, metrics, surrogate, util
from ..config import EVAL_STREAM, load_config, RunConfig


LOGGER = logging.getLogger(__name__)


def checkpoint_features(checkpoint: surrogate.NetworkCheckpoint, frame: pd.DataFrame) \
        -> features.FeatureSet:
    """
    Assemble features with the principal components the checkpoint was trained with.
    """
    pca = checkpoint.training_meta.get("pca")
    if pca is None:
        raise ValueError("checkpoint does not record the principal components of its features")
    return features.assemble_features(frame, pca=features.PcaModel.from_dict(pca))


def select_rows(config: RunConfig, frame: pd.DataFrame, checkpoint: surrogate.NetworkCheckpoint,
                which: str) -> pd.DataFrame:
    """
    Select all rows or reproduce the held-out rows of the split the checkpoint was trained on.
    """
    if which == "all":
        return frame
    fraction = checkpoint.training_meta.get("split", {}).get("fraction", config.split.fraction)
    _, test_index = features.split_indices(len(frame), fraction, config.split_rng())
    return frame.iloc[test_index]


def __main__(args: list[str] = None) -> None:
    util.setup_script()
    parser = make_parser("evaluate a surrogate, or a cascade of two surrogates, on a dataset")
    parser.add_argument("--checkpoint", help="checkpoint JSON (default: "
                        "<output_dir>/checkpoint.json); the upper-boundary classifier of a cascade")
    parser.add_argument("--checkpoint_low", help="checkpoint JSON of the lower-boundary classifier "
                        "evaluated on rows the first classifier labels as not well-powered")
    parser.add_argument("--dataset", help="dataset CSV (default: <output_dir>/dataset.csv)")
    parser.add_argument("--split", choices=["test", "all"], default="test",
                        help="evaluate on the held-out rows or all rows of the dataset")
    parser.add_argument("--report", help="report JSON (default: <output_dir>/eval_report.json)")
    args = parser.parse_args(args)

    config = load_config(args.config)
    frame, manifest = features.read_dataset(output_path(config, args.dataset, "dataset.csv"))
    checkpoint = surrogate.NetworkCheckpoint.load(
        output_path(config, args.checkpoint, "checkpoint.json"))
    rows = select_rows(config, frame, checkpoint, args.split)
    feature_set = checkpoint_features(checkpoint, rows)
    split = checkpoint.training_meta.get("split", {})
    kwargs = {
        "config_hash": config.hash,
        "call_count": split.get("num_train"),
        "call_ratio": split["num_train"] / split["num_rows"] if split else None,
    }
    identifiers = {
        "method": "pnn",
        "train_fraction": split.get("fraction"),
        "dataset": dataset_identifier(manifest),
        "checkpoint": checkpoint.identifier,
        "split": args.split,
    }
    rng = config.rng(EVAL_STREAM)

    if args.checkpoint_low is None:
        report = evaluate_checkpoint(checkpoint, feature_set, rng, identifiers=identifiers,
                                     **kwargs)
        LOGGER.info("metrics: %s", report.metrics)
        report.save(output_path(config, args.report, "eval_report.json"))
        return

    low = surrogate.NetworkCheckpoint.load(args.checkpoint_low)
    for candidate in [checkpoint, low]:
        if candidate.training_meta.get("task", "classify") != "classify":
            raise ValueError("cascades require two classifiers")
    boundaries = (checkpoint.training_meta["boundary"], low.training_meta["boundary"])
    if not boundaries[0] > boundaries[1]:
        raise ValueError(f"first classifier boundary {boundaries[0]} must exceed the second "
                         f"classifier boundary {boundaries[1]}")
    c1_predicted = surrogate.predict_labels(checkpoint, feature_set.features)
    c2_predicted = surrogate.predict_labels(low, checkpoint_features(low, rows).features)
    identifiers.update(method="pnn_cascade", checkpoint_low=low.identifier)
    reports = metrics.cascade_evaluate(c1_predicted, c2_predicted, feature_set.powers, boundaries,
                                       rng, identifiers=identifiers, **kwargs)
    for key, report in reports.items():
        LOGGER.info("%s metrics: %s", key, report.metrics)
    util.dump_json({key: report.to_dict() for key, report in reports.items()},
                   output_path(config, args.report, "eval_report.json"))


if __name__ == '__main__':
    __main__()
