"""Module for helper functions."""

import json
from logging import getLogger
from typing import Sequence, Union

import numpy as np

from .core import CheckReport
from .engines.net_core import Matrix, StudentNetwork, TeacherNetwork, Vector

logger = getLogger(__name__)

Network = Union[TeacherNetwork, StudentNetwork]


def parse_vector(text: str) -> Vector:
    """Parse a comma separated list of reals such as ``1,0.5,-2``."""
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError as err:
        msg = f"Cannot parse vector {text!r}: {err}"
        logger.error(msg)
        raise ValueError(msg) from err
    if not values:
        msg = f"Vector {text!r} is empty."
        logger.error(msg)
        raise ValueError(msg)
    return np.array(values)


def network_to_json(network: Network) -> str:
    """Serialize as {"d": ..., "neurons": [[...], ...]}; floats keep round-trip precision."""
    return json.dumps({"d": network.d, "neurons": network.neurons.tolist()})


def save_network_json(network: Network, path: str) -> None:
    """Write the network JSON file."""
    with open(path, "w", encoding="utf-8") as stream:
        stream.write(network_to_json(network))
    logger.info("Wrote network with %d neurons to %s.", network.neurons.shape[0], path)


def load_network_json(path: str) -> Matrix:
    """Read the neuron array of a network JSON file."""
    with open(path, "r", encoding="utf-8") as stream:
        try:
            data = json.load(stream)
        except ValueError as err:
            msg = f"Invalid network file {path}: {err}"
            logger.error(msg)
            raise ValueError(msg) from err
    neurons = np.array(data.get("neurons", []), dtype=np.float64, ndmin=2)
    if neurons.shape[1] != data.get("d"):
        msg = f"Network file {path} declares d={data.get('d')} but has shape {neurons.shape}."
        logger.error(msg)
        raise ValueError(msg)
    return neurons


def save_report_json(suite: str, reports: Sequence[CheckReport], path: str) -> None:
    """Write the suite reports as {"suite": ..., "checks": [...]}."""
    document = {"suite": suite, "checks": [report.to_dict() for report in reports]}
    with open(path, "w", encoding="utf-8") as stream:
        json.dump(document, stream, indent=2, sort_keys=True)
    logger.info("Wrote %d check reports to %s.", len(reports), path)
