import os
from powersurrogate.scripts import sample, simulate
from powersurrogate.util import dump_json
import pytest
import tempfile


def small_config(output_dir: str, **sections) -> dict:
    """
    Configuration of a pipeline small enough to run in a few seconds.
    """
    config = {
        "model": {"family": "REG", "design": "D_O", "predictors": 3},
        "simulation": {"sims": 20},
        "sampler": {"num_points": 60, "beta_domain": [-0.5, 0.5], "n_domain": [25, 200]},
        "split": {"fraction": 0.5},
        "features": {"boundary": 0.5},
        "train": {"epochs": 5, "batch_size": 8},
        "seed": 17,
        "output_dir": output_dir,
    }
    for key, value in sections.items():
        config[key] = config.get(key, {}) | value
    return config


@pytest.fixture
def workspace():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'config.json')
        dump_json(small_config(tmp), path)
        yield tmp, path


@pytest.fixture
def simulated(workspace):
    tmp, config = workspace
    sample.__main__(['--config', config])
    simulate.__main__(['--config', config])
    return tmp, config
