import logging
from . import make_parser, output_path
from .. import util
from ..config import load_config, SAMPLE_STREAM
from ..features import write_points
from ..power_engine import p_sampler


LOGGER = logging.getLogger(__name__)


def __main__(args: list[str] = None) -> None:
    util.setup_script()
    parser = make_parser("sample parameter points around uniform centroids")
    parser.add_argument("--output", help="points CSV (default: <output_dir>/points.csv)")
    parser.add_argument("--num_points", type=int, help="override the configured number of points")
    args = parser.parse_args(args)

    config = load_config(args.config)
    sampler = config.sampler_config(args.num_points)
    points = p_sampler(sampler, config.rng(SAMPLE_STREAM))
    LOGGER.info("sampled %d points with %d predictors", len(points), sampler.num_predictors)

    output = output_path(config, args.output, "points.csv")
    manifest = {
        "sampler": {
            "num_points": sampler.num_points,
            "num_local": sampler.num_local,
            "local_sigma": sampler.local_sigma,
            "local_sigma_n": sampler.local_sigma_n,
            "beta_domain": sampler.beta_domain,
            "n_domain": sampler.n_domain,
        },
        "seed": config.seed,
        "stream": [SAMPLE_STREAM],
        "config_hash": config.hash,
    }
    write_points(output, points, sampler.num_predictors, manifest)


if __name__ == '__main__':
    __main__()
