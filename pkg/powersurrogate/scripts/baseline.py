import logging
from . import dataset_identifier, load_split, make_parser, output_path, train_call_counts
from .. import baselines, features, metrics, util
from ..config import BASELINE_STREAM, BaselinesSection, EVAL_STREAM, load_config


LOGGER = logging.getLogger(__name__)


def make_baseline(which: str, section: BaselinesSection) -> baselines.Baseline:
    if which == "cluster":
        return baselines.ClusterBaseline(section.num_clusters, section.cluster_axes)
    if which == "kneighbors":
        return baselines.KNeighborsBaseline(section.n_neighbors, section.standardize)
    if which == "labelprop":
        return baselines.LabelPropagationBaseline(section.gamma, section.max_iter, section.tol,
                                                  section.standardize)
    return baselines.BASELINES[which]()


def __main__(args: list[str] = None) -> None:
    util.setup_script()
    parser = make_parser("predict well-powered points of a dataset with a baseline")
    parser.add_argument("which", choices=sorted(baselines.BASELINES), help="baseline to run")
    parser.add_argument("--dataset", help="dataset CSV (default: <output_dir>/dataset.csv)")
    parser.add_argument("--fraction", type=float, help="override the training split fraction")
    parser.add_argument("--boundary", type=float, help="override the power boundary")
    parser.add_argument("--report", help="report JSON (default: "
                        "<output_dir>/baseline_<which>.json)")
    parser.add_argument("--clusters", help="cluster assignments of the test rows (default: "
                        "<output_dir>/clusters.csv); only written by the cluster baseline")
    args = parser.parse_args(args)

    config = load_config(args.config)
    dataset = output_path(config, args.dataset, "dataset.csv")
    fraction = args.fraction or config.split.fraction
    boundary = args.boundary or config.features.boundary
    _, manifest, split = load_split(config, dataset, fraction)
    train_labels = split.train.labels(boundary)
    test_labels = split.test.labels(boundary)

    baseline = make_baseline(args.which, config.baselines)
    predicted = baseline.fit_predict(split.train, train_labels, split.test, test_labels,
                                     config.rng(BASELINE_STREAM))

    # Random guesses consume no powers and clusters consume the powers of the rows they label.
    if args.which == "rand":
        calls = {"call_count": 0, "call_ratio": 0.0}
    elif args.which == "cluster":
        num_test = int(split.test_index.size)
        calls = {"call_count": num_test,
                 "call_ratio": num_test / (num_test + int(split.train_index.size))}
    else:
        calls = train_call_counts(split)
    identifiers = {
        "method": args.which,
        "train_fraction": fraction,
        "boundary": boundary,
        "dataset": dataset_identifier(manifest),
    }
    report = metrics.evaluate_classification(predicted, test_labels, config.rng(EVAL_STREAM),
                                             identifiers=identifiers, config_hash=config.hash,
                                             **calls)
    LOGGER.info("%s test metrics: %s", args.which, report.metrics)
    report.save(output_path(config, args.report, f"baseline_{args.which}.json"))

    if args.which == "cluster":
        frame = split.test.to_frame().assign(cluster=baseline.model.assignments,
                                             label=predicted)
        features.write_frame(frame, output_path(config, args.clusters, "clusters.csv"))


if __name__ == '__main__':
    __main__()
