import logging
import pandas as pd
from . import make_parser, output_path
from .. import baselines, features, plotting, util
from ..config import BASELINE_STREAM, load_config


LOGGER = logging.getLogger(__name__)


def flatten_report(report: dict, label: str = None) -> list[dict]:
    """
    Turn a report, or a report of nested reports such as transfer comparisons and cascades,
    into one row per evaluation.
    """
    if "metrics" not in report:
        rows = []
        for key, value in sorted(report.items()):
            rows.extend(flatten_report(value, key if label is None else f"{label}/{key}"))
        return rows
    identifiers = report.get("identifiers", {})
    method = identifiers.get("method", "")
    return [{
        "label": method if label is None else f"{method}/{label}",
        "train_fraction": identifiers.get("train_fraction"),
        "call_count": report.get("call_count"),
        **report["metrics"],
    }]


def reports_frame(paths: list[str]) -> pd.DataFrame:
    rows = []
    for path in paths:
        rows.extend(flatten_report(util.load_json(path)))
    return pd.DataFrame(rows)


def __main__(args: list[str] = None) -> None:
    util.setup_script()
    parser = make_parser("plot the power manifold, clusters, or evaluation trends as SVG with the "
                         "plotted series as CSV")
    parser.add_argument("kind", choices=plotting.KINDS, help="kind of figure")
    parser.add_argument("inputs", nargs="+", help="dataset CSV for manifold and cluster figures; "
                        "report JSON files for trend and cost figures")
    parser.add_argument("--output", help="SVG file (default: <output_dir>/<kind>.svg)")
    parser.add_argument("--metric", default="f1", help="metric of trend and cost figures")
    args = parser.parse_args(args)

    config = load_config(args.config)
    output = output_path(config, args.output, f"{args.kind}.svg")
    assignments = None
    if args.kind in {"manifold", "cluster"}:
        if len(args.inputs) != 1:
            parser.error(f"{args.kind} figures take exactly one dataset")
        data, _ = features.read_dataset(args.inputs[0])
        if args.kind == "cluster":
            if "cluster" in data:
                assignments = data.pop("cluster").to_numpy()
            elif data.empty:
                assignments = []
            else:
                model = baselines.power_cluster(data, config.baselines.num_clusters,
                                                config.rng(BASELINE_STREAM),
                                                config.baselines.cluster_axes,
                                                config.features.variance_target)
                assignments = model.assignments
    else:
        data = reports_frame(args.inputs)
        if args.metric not in data:
            parser.error(f"reports have no metric {args.metric}")

    series = plotting.make_series(args.kind, data, args.metric, assignments)
    plotting.save_plot(series, args.kind, output)


if __name__ == '__main__':
    __main__()
