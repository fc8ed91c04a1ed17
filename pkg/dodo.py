from doit.action import CmdAction
from doit.tools import run_once
import functools as ft
import os
import pathlib
import sys
from powersurrogate.stat_models import DEFAULT_DESIGNS
from powersurrogate.util import dump_json


# Standard environment variables to avoid interaction between different processes.
ENV = os.environ | {
    "NUMEXPR_NUM_THREADS": "1",
    "OPENBLAS_NUM_THREADS": "1",
    "OMP_NUM_THREADS": "1",
}
cmd_action = ft.partial(CmdAction, shell=False)
default_task = {
    "io": {
        "capture": False,
    }
}

# Interpreter for launching subtasks.
PYTHON = sys.executable
# Root directory for generating results.
ROOT = pathlib.Path("workspace")
FAMILIES = ["REG", "LOGIT", "RMANOVA"]
NUM_PREDICTORS = [3, 5, 10, 20]
SPLIT_FRACTIONS = [0.1, 0.2, 0.4, 0.6, 0.8]
BOUNDARIES = [0.8, 0.6]
BASELINES = ["rand", "cluster", "kneighbors", "labelprop"]
# Transfer scenarios from a pretrained REG-20 network: same design and hypothesis, different
# design, and different design and hypothesis.
PARENT = "REG-20"
TRANSFERS = {
    "TF1": [("REG", 3, "D_O", [1, 3]), ("REG", 5, "D_O", [1, 3]), ("REG", 10, "D_O", [1, 3]),
            ("RMANOVA", 3, "D_O", [1, 3])],
    "TF2": [("LOGIT", 3, "D_A", [1, 3]), ("REG", 10, "D_A", [1, 3])],
    "TF3": [("REG", 10, "D_A", [1, 7, 8]), ("RMANOVA", 20, "D_A", [1, 7, 8])],
}


def command(name: str, *args) -> list:
    return [PYTHON, "-m", "powersurrogate", name, *map(str, args)]


def experiment_config(family: str, k: int, design: str = None,
                      tested_indices: list[int] = None) -> dict:
    return {
        "model": {"family": family, "design": design or DEFAULT_DESIGNS[family],
                  "predictors": k},
        "hypothesis": {"tested_indices": tested_indices or [1, 3]},
    }


def setup_experiment(name: str, config: dict):
    """
    Yield tasks that write the configuration, sample points, and simulate their powers.
    """
    directory = ROOT / name
    config_target = directory / "config.json"
    points = directory / "points.csv"
    dataset = directory / "dataset.csv"
    config = config | {"output_dir": str(directory)}
    yield default_task | {
        "basename": name,
        "name": "config",
        "actions": [(dump_json, [config, config_target])],
        "targets": [config_target],
        "uptodate": [run_once],
    }
    yield default_task | {
        "basename": name,
        "name": "points",
        "actions": [cmd_action(command("sample", "--config", config_target), env=ENV)],
        "file_dep": [config_target],
        "targets": [points],
    }
    yield default_task | {
        "basename": name,
        "name": "dataset",
        "actions": [cmd_action(command("simulate", "--config", config_target, "--progress"),
                               env=ENV | {"LOGLEVEL": "INFO"})],
        "file_dep": [config_target, points],
        "targets": [dataset, directory / "correlation.csv"],
    }


def train(name: str, fraction: float, boundary: float, task: str = "classify"):
    directory = ROOT / name
    config = directory / "config.json"
    dataset = directory / "dataset.csv"
    output = directory / task / str(boundary) / str(fraction)
    args = command("train", "--config", config, "--fraction", fraction, "--boundary", boundary,
                   "--task", task, "--checkpoint", output / "checkpoint.json",
                   "--report", output / "report.json")
    return default_task | {
        "basename": f"{name}/{task}",
        "name": f"{boundary}/{fraction}",
        "actions": [cmd_action(args, env=ENV)],
        "file_dep": [config, dataset],
        "targets": [output / "checkpoint.json", output / "report.json"],
    }


def baseline(name: str, which: str, fraction: float, boundary: float):
    directory = ROOT / name
    config = directory / "config.json"
    dataset = directory / "dataset.csv"
    output = directory / "baselines" / which / str(boundary)
    args = command("baseline", which, "--config", config, "--fraction", fraction, "--boundary",
                   boundary, "--report", output / f"{fraction}.json", "--clusters",
                   output / f"{fraction}_clusters.csv")
    return default_task | {
        "basename": f"{name}/baselines",
        "name": f"{which}/{boundary}/{fraction}",
        "actions": [cmd_action(args, env=ENV)],
        "file_dep": [config, dataset],
        "targets": [output / f"{fraction}.json"],
    }


def task_experiments():
    """
    Simulate datasets, train surrogates, and run baselines for each family and number of
    predictors.
    """
    for family in FAMILIES:
        for k in NUM_PREDICTORS:
            name = f"{family}-{k}"
            yield from setup_experiment(name, experiment_config(family, k))
            for boundary in BOUNDARIES:
                for fraction in SPLIT_FRACTIONS:
                    yield train(name, fraction, boundary)
                    for which in BASELINES:
                        yield baseline(name, which, fraction, boundary)
            yield train(name, 0.1, BOUNDARIES[0], "regress")


def task_cascade():
    """
    Evaluate cascades of the upper- and lower-boundary classifiers.
    """
    for family in FAMILIES:
        for k in NUM_PREDICTORS:
            name = f"{family}-{k}"
            directory = ROOT / name
            for fraction in SPLIT_FRACTIONS:
                checkpoints = [directory / "classify" / str(boundary) / str(fraction) /
                               "checkpoint.json" for boundary in BOUNDARIES]
                target = directory / "cascade" / f"{fraction}.json"
                args = command("eval", "--config", directory / "config.json", "--dataset",
                               directory / "dataset.csv", "--checkpoint", checkpoints[0],
                               "--checkpoint_low", checkpoints[1], "--report", target)
                yield default_task | {
                    "basename": f"{name}/cascade",
                    "name": str(fraction),
                    "actions": [cmd_action(args, env=ENV)],
                    "file_dep": checkpoints,
                    "targets": [target],
                }


def task_transfer():
    """
    Fine-tune surrogates initialized from the pretrained parent network.
    """
    parent = ROOT / PARENT / "classify" / str(BOUNDARIES[0]) / str(SPLIT_FRACTIONS[-1]) / \
        "checkpoint.json"
    for scenario, experiments in TRANSFERS.items():
        for family, k, design, tested_indices in experiments:
            name = f"transfer/{scenario}-{family}-{k}"
            directory = ROOT / name
            yield from setup_experiment(name, experiment_config(family, k, design,
                                                                tested_indices))
            for fraction in SPLIT_FRACTIONS[:2]:
                output = directory / str(fraction)
                args = command("transfer", parent, "--config", directory / "config.json",
                               "--fraction", fraction, "--checkpoint",
                               output / "checkpoint.json", "--report", output / "report.json")
                yield default_task | {
                    "basename": f"{name}/fine-tune",
                    "name": str(fraction),
                    "actions": [cmd_action(args, env=ENV)],
                    "file_dep": [parent, directory / "dataset.csv"],
                    "targets": [output / "report.json"],
                }


def task_figures():
    """
    Plot the power manifold, clusters, and trends of each experiment.
    """
    for family in FAMILIES:
        for k in NUM_PREDICTORS:
            name = f"{family}-{k}"
            directory = ROOT / name
            config = directory / "config.json"
            dataset = directory / "dataset.csv"
            for kind in ["manifold", "cluster"]:
                target = directory / "figures" / f"{kind}.svg"
                yield default_task | {
                    "basename": f"{name}/figures",
                    "name": kind,
                    "actions": [cmd_action(command("plot", kind, dataset, "--config", config,
                                                   "--output", target), env=ENV)],
                    "file_dep": [dataset],
                    "targets": [target],
                }

            boundary = BOUNDARIES[0]
            reports = [directory / "classify" / str(boundary) / str(fraction) / "report.json"
                       for fraction in SPLIT_FRACTIONS]
            reports += [directory / "baselines" / which / str(boundary) / f"{fraction}.json"
                        for which in BASELINES for fraction in SPLIT_FRACTIONS]
            for kind in ["trend", "cost"]:
                target = directory / "figures" / f"{kind}.svg"
                yield default_task | {
                    "basename": f"{name}/figures",
                    "name": kind,
                    "actions": [cmd_action(command("plot", kind, *reports, "--config", config,
                                                   "--output", target), env=ENV)],
                    "file_dep": reports,
                    "targets": [target],
                }
