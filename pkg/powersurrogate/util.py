import functools as ft
import hashlib
import json
import logging
import numpy as np
import os
import typing


LOGGER = logging.getLogger(__name__)


def maybe_add_batch_dim(x: np.ndarray) -> np.ndarray:
    """
    Add a batch dimension to the array if required. If :attr:`x` has shape :code:`(n,)` the returned
    value will have shape :code:`(n, 1)`. If :attr`x` has more than one dimension, it will be
    returned unchanged.

    Args:
        x: Array to add a batch dimension to if required.

    Returns:
        x: Array with batch dimension added if required.
    """
    x = np.asarray(x)
    if x.ndim > 1:
        return x

    return x[:, None]


def to_jsonable(value: typing.Any) -> typing.Any:
    """
    Recursively convert numpy arrays and scalars to lists and python scalars for serialization.
    """
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    return value


def canonical_json(value: typing.Any) -> str:
    """
    Serialize a value to canonical JSON with sorted keys so identical inputs yield identical bytes.
    Floats use python's shortest round-trip representation, i.e. parsing and serializing again
    reproduces the same text.
    """
    return json.dumps(to_jsonable(value), sort_keys=True, indent=2, allow_nan=False) + "\n"


def hash_json(value: typing.Any) -> str:
    """
    Short, stable identifier of a JSON-serializable value.
    """
    return hashlib.sha256(canonical_json(value).encode()).hexdigest()[:16]


def dump_json(value: typing.Any, path: str) -> None:
    """
    Write a value as canonical JSON, creating the parent directory if necessary.
    """
    with sopen(path, "w") as fp:
        fp.write(canonical_json(value))
    LOGGER.info("wrote %s", path)


def load_json(path: str) -> typing.Any:
    with open(path) as fp:
        return json.load(fp)


@ft.wraps(open)
def sopen(file, mode, *args, **kwargs):
    """
    Open a file handle safely, creating the parent directory if necessary.
    """
    if any(m in mode for m in 'awx'):
        os.makedirs(os.path.dirname(file) or '.', exist_ok=True)
    return open(file, mode, *args, **kwargs)


def setup_script():
    """
    General script setup based on environment variables.
    """
    level = os.environ.get('LOGLEVEL', 'warning')
    logging.basicConfig(level=level.upper())
