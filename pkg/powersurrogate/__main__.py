"""
Run a pipeline command, e.g., :code:`python -m powersurrogate sample --config run.json`.
"""
import argparse
import logging
import sys
from .config import ConfigError
from .scripts import baseline, evaluate, plot, sample, simulate, train, transfer


LOGGER = logging.getLogger("powersurrogate")
COMMANDS = {
    "sample": sample,
    "simulate": simulate,
    "train": train,
    "transfer": transfer,
    "baseline": baseline,
    "eval": evaluate,
    "plot": plot,
}
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


def __main__(args: list[str] = None) -> int:
    parser = argparse.ArgumentParser(prog="powersurrogate")
    parser.add_argument("command", choices=COMMANDS, help="pipeline command")
    parser.add_argument("args", nargs=argparse.REMAINDER, help="arguments of the command")
    try:
        args = parser.parse_args(args)
        COMMANDS[args.command].__main__(args.args)
    except SystemExit as ex:
        # Usage errors and `--help` exit through argparse.
        return ex.code if isinstance(ex.code, int) else EXIT_CONFIG_ERROR
    except ConfigError as ex:
        LOGGER.error("configuration error: %s", ex)
        return EXIT_CONFIG_ERROR
    except Exception as ex:
        LOGGER.exception("%s failed: %s", args.command, ex)
        return EXIT_RUNTIME_ERROR
    return 0


if __name__ == '__main__':
    sys.exit(__main__())
