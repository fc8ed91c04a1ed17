import logging
import os
from . import dataset_identifier, evaluate_checkpoint, load_split, make_parser, output_path, \
    split_meta, train_call_counts
from .train import add_training_arguments, training_overrides
from .. import features, surrogate, util
from ..config import EVAL_STREAM, load_config, TRAIN_STREAM


LOGGER = logging.getLogger(__name__)


def __main__(args: list[str] = None) -> None:
    util.setup_script()
    parser = make_parser("fine-tune a surrogate initialized from a larger pretrained network and "
                         "compare it with a freshly trained control on the same split")
    parser.add_argument("parent", help="checkpoint JSON of the pretrained network")
    add_training_arguments(parser)
    parser.add_argument("--checkpoint", help="checkpoint JSON of the transferred network "
                        "(default: <output_dir>/transfer_checkpoint.json); the control is saved "
                        "next to it with a `_control` suffix")
    parser.add_argument("--report", help="report JSON (default: "
                        "<output_dir>/transfer_report.json)")
    args = parser.parse_args(args)

    config = load_config(args.config)
    train_config = config.train_config(**training_overrides(args))
    dataset = output_path(config, args.dataset, "dataset.csv")
    fraction = args.fraction or config.split.fraction
    _, manifest, split = load_split(config, dataset, fraction)
    targets = features.training_targets(split.train, train_config.task, train_config.boundary)
    schema = surrogate.FeatureSchema(split.train.num_predictors, split.train.pca.num_components)

    parent = surrogate.NetworkCheckpoint.load(args.parent)
    init = surrogate.transfer_init(parent, schema)
    rng = config.rng(TRAIN_STREAM)
    checkpoints = {
        "transfer": surrogate.train_pnn(split.train.features, targets, train_config, rng.spawn(0),
                                        init=init, show_progress=args.progress),
        "control": surrogate.train_pnn(split.train.features, targets, train_config, rng.spawn(0),
                                       schema=schema, show_progress=args.progress),
    }

    checkpoint_path = output_path(config, args.checkpoint, "transfer_checkpoint.json")
    stem, ext = os.path.splitext(checkpoint_path)
    paths = {"transfer": checkpoint_path, "control": f"{stem}_control{ext}"}
    reports = {}
    for key, checkpoint in checkpoints.items():
        checkpoint.training_meta.update(pca=split.train.pca.to_dict(),
                                        split=split_meta(split, fraction))
        checkpoint.save(paths[key])
        identifiers = {
            "method": "pnn",
            "variant": key,
            "train_fraction": fraction,
            "dataset": dataset_identifier(manifest),
            "checkpoint": checkpoint.identifier,
            "parent": parent.identifier,
        }
        report = evaluate_checkpoint(checkpoint, split.test, config.rng(EVAL_STREAM),
                                     identifiers=identifiers, config_hash=config.hash,
                                     **train_call_counts(split))
        LOGGER.info("%s test metrics: %s", key, report.metrics)
        reports[key] = report.to_dict()
    util.dump_json(reports, output_path(config, args.report, "transfer_report.json"))


if __name__ == '__main__':
    __main__()
