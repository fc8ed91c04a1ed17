import dataclasses
import logging
from . import dataset_identifier, evaluate_checkpoint, load_split, make_parser, output_path, \
    split_meta, train_call_counts
from .. import features, surrogate, util
from ..config import EVAL_STREAM, load_config, TRAIN_STREAM


LOGGER = logging.getLogger(__name__)


def add_training_arguments(parser):
    parser.add_argument("--dataset", help="dataset CSV (default: <output_dir>/dataset.csv)")
    parser.add_argument("--fraction", type=float, help="override the training split fraction")
    parser.add_argument("--boundary", type=float, help="override the power boundary")
    parser.add_argument("--task", choices=["classify", "regress"], help="override the task")
    parser.add_argument("--epochs", type=int, help="override the number of epochs")
    parser.add_argument("--progress", action="store_true", help="show a progress bar")


def training_overrides(args) -> dict:
    return {key: value for key, value in [("boundary", args.boundary), ("task", args.task),
                                          ("epochs", args.epochs)] if value is not None}


def __main__(args: list[str] = None) -> None:
    util.setup_script()
    parser = make_parser("train a power surrogate on a fraction of a dataset and evaluate it on "
                         "the remaining rows")
    add_training_arguments(parser)
    parser.add_argument("--checkpoint", help="checkpoint JSON (default: "
                        "<output_dir>/checkpoint.json)")
    parser.add_argument("--report", help="report JSON (default: <output_dir>/report.json)")
    args = parser.parse_args(args)

    config = load_config(args.config)
    train_config = config.train_config(**training_overrides(args))
    dataset = output_path(config, args.dataset, "dataset.csv")
    fraction = args.fraction or config.split.fraction
    _, manifest, split = load_split(config, dataset, fraction)
    targets = features.training_targets(split.train, train_config.task, train_config.boundary)
    schema = surrogate.FeatureSchema(split.train.num_predictors, split.train.pca.num_components)

    rng = config.rng(TRAIN_STREAM)
    if train_config.sweep:
        learning_rate = surrogate.sweep_learning_rate(split.train.features, targets, train_config,
                                                      rng.spawn(1), schema)
        train_config = dataclasses.replace(train_config, learning_rate=learning_rate)
    checkpoint = surrogate.train_pnn(split.train.features, targets, train_config, rng.spawn(0),
                                     schema=schema, show_progress=args.progress)
    checkpoint.training_meta.update(pca=split.train.pca.to_dict(),
                                    split=split_meta(split, fraction))
    checkpoint.save(output_path(config, args.checkpoint, "checkpoint.json"))

    identifiers = {
        "method": "pnn",
        "train_fraction": fraction,
        "dataset": dataset_identifier(manifest),
        "checkpoint": checkpoint.identifier,
    }
    report = evaluate_checkpoint(checkpoint, split.test, config.rng(EVAL_STREAM),
                                 identifiers=identifiers, config_hash=config.hash,
                                 **train_call_counts(split))
    LOGGER.info("test metrics: %s", report.metrics)
    report.save(output_path(config, args.report, "report.json"))


if __name__ == '__main__':
    __main__()
