import logging
import os
import pandas as pd
from tqdm import tqdm
from . import make_parser, output_path
from .. import features, power_engine, util
from ..config import load_config, RunConfig, SIMULATE_STREAM


LOGGER = logging.getLogger(__name__)
TRIAL_COUNTS = ("singular_fits", "discarded_trials", "degenerate_tests", "exhausted_trials")


def partial_path(output: str) -> str:
    return output + ".partial"


def resume_partial(path: str, fingerprint: str) -> int:
    """
    Prepare a partially written simulation for resumption.

    Args:
        path: Partial CSV file with a header and one row per simulated point.
        fingerprint: Identifier of the configuration and points that produced the file.

    Returns:
        num_rows: Number of complete rows; a trailing incomplete row is discarded. Zero if there
            is nothing to resume or the file belongs to a different run.
    """
    state = features.manifest_path(path)
    if not os.path.exists(path) or not os.path.exists(state):
        return 0
    if util.load_json(state).get("fingerprint") != fingerprint:
        LOGGER.warning("ignoring %s because it was written by a different run", path)
        return 0
    with open(path) as fp:
        text = fp.read()
    complete = text[:text.rfind("\n") + 1]
    if complete != text:
        LOGGER.info("discarding incomplete trailing row of %s", path)
        with open(path, "w") as fp:
            fp.write(complete)
    return max(complete.count("\n") - 1, 0)


def records_frame(records: list[power_engine.PowerRecord], num_predictors: int) -> pd.DataFrame:
    frame = features.points_to_frame([record.point for record in records], num_predictors)
    frame["power"] = [record.power for record in records]
    for key in TRIAL_COUNTS:
        frame[key] = [record.metadata.get(key, 0) for record in records]
    return frame


def write_dataset(config: RunConfig, partial: pd.DataFrame, num_predictors: int, output: str,
                  call_count: int) -> None:
    """
    Assemble features for all simulated points and write the dataset, its manifest, and the
    correlation report. The call count covers all runs that contributed rows to the partial file.
    """
    dataset = partial[features.beta_names(num_predictors) + ["N", "power"]]
    pca = None
    if len(dataset) >= 2:
        feature_set = features.assemble_features(
            dataset, variance_target=config.features.variance_target)
        pca = feature_set.pca
        frame = feature_set.to_frame()
    else:
        frame = dataset.assign(scaled_weight=features.scaled_weight(
            features.frame_betas(dataset), dataset["N"].to_numpy()))
        frame = frame[features.beta_names(num_predictors) + ["N", "scaled_weight", "power"]]

    manifest = {
        "family": config.model_family().to_dict(),
        "design": config.design_spec().to_dict(),
        "hypothesis": config.hypothesis_spec().to_dict(),
        "error": config.error_spec().to_dict(),
        "alpha": config.simulation.alpha,
        "sims": config.simulation.sims,
        "seed": config.seed,
        "stream": [SIMULATE_STREAM],
        "pca": None if pca is None else pca.to_dict(),
        "num_features": frame.shape[1] - 1,
        "call_count": call_count,
        "trial_counts": {key: int(partial[key].sum()) for key in TRIAL_COUNTS},
        "config_hash": config.hash,
    }
    features.write_frame(frame, output, manifest)

    if len(frame) >= 3:
        correlations = features.correlation_report(frame)
        features.write_frame(correlations, os.path.join(os.path.dirname(output),
                                                        "correlation.csv"))


def __main__(args: list[str] = None) -> None:
    util.setup_script()
    parser = make_parser("compute the power of each parameter point by simulation")
    parser.add_argument("--points", help="points CSV (default: <output_dir>/points.csv)")
    parser.add_argument("--output", help="dataset CSV (default: <output_dir>/dataset.csv)")
    parser.add_argument("--chunk_size", type=int, default=100,
                        help="number of points simulated between writes to the partial file")
    parser.add_argument("--num_workers", type=int, help="override the number of workers")
    parser.add_argument("--progress", action="store_true", help="show a progress bar")
    args = parser.parse_args(args)

    config = load_config(args.config)
    family = config.model_family()
    spec = config.design_spec()
    hypothesis = config.hypothesis_spec()
    error = config.error_spec()
    num_workers = args.num_workers or config.simulation.num_workers
    assert args.chunk_size > 0, f"chunk size must be positive but got {args.chunk_size}"

    points_file = output_path(config, args.points, "points.csv")
    output = output_path(config, args.output, "dataset.csv")
    points = features.read_points(points_file)
    with open(points_file) as fp:
        fingerprint = util.hash_json({"config": config.hash, "points": fp.read()})
    num_predictors = spec.num_predictors
    if points and points[0].num_predictors != num_predictors:
        raise ValueError(f"points have {points[0].num_predictors} coefficients but the design "
                         f"has {num_predictors} predictors")

    partial = partial_path(output)
    start = resume_partial(partial, fingerprint)
    if start:
        LOGGER.info("resuming simulation at point %d of %d", start, len(points))
    else:
        columns = features.beta_names(num_predictors) + ["N", "power", *TRIAL_COUNTS]
        features.write_frame(pd.DataFrame(columns=columns), partial, {"fingerprint": fingerprint})

    rng = config.rng(SIMULATE_STREAM)
    calls_before = power_engine.call_count()
    offsets = range(start, len(points), args.chunk_size)
    for offset in tqdm(offsets) if args.progress else offsets:
        chunk = points[offset:offset + args.chunk_size]
        records = power_engine.generate_training_data(
            chunk, family, spec, hypothesis, config.simulation.alpha, config.simulation.sims,
            error, rng, start_index=offset, num_workers=num_workers,
        )
        with open(partial, "a") as fp:
            records_frame(records, num_predictors).to_csv(
                fp, header=False, index=False, float_format=features.FLOAT_FORMAT,
                lineterminator="\n")
        LOGGER.info("simulated %d of %d points", offset + len(chunk), len(points))

    calls = power_engine.call_count() - calls_before
    if calls != len(points) - start:
        LOGGER.warning("simulated %d points with %d compute calls", len(points) - start, calls)
    write_dataset(config, pd.read_csv(partial), num_predictors, output, start + calls)
    os.remove(partial)
    os.remove(features.manifest_path(partial))


if __name__ == '__main__':
    __main__()
