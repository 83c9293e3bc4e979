"""
Self-describing network checkpoints.

``checkpoint(net, path)`` writes the FSCK1 parameter file at ``path`` and the
architecture descriptor as YAML at ``path + ".arch.yaml"``.
"""

import os
from typing import Optional, Union

import numpy as np
import yaml

from ferroscope.tensorcore import DTYPE, Network, decode_parameters, encode_parameters
from ferroscope.utils.errors import DescriptorMismatchError, FormatError
from ferroscope.utils.fileio import atomic_write_bytes, atomic_write_text
from ferroscope.utils.logger import logger

ARCH_SUFFIX = ".arch.yaml"
PathLike = Union[str, os.PathLike]


def descriptor_path(path: PathLike) -> str:
    return os.fspath(path) + ARCH_SUFFIX


def checkpoint(network: Network, path: PathLike) -> None:
    params = {name: p.data for name, p in network.named_parameters().items()}
    atomic_write_text(descriptor_path(path), yaml.safe_dump(network.descriptor(), sort_keys=False))
    atomic_write_bytes(path, encode_parameters(params))
    logger.info("Checkpoint written", path=os.fspath(path), network=network.name, parameters=network.parameter_count())


def _read_descriptor(path: PathLike) -> dict:
    try:
        with open(descriptor_path(path), "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError as e:
        raise FormatError(f"Missing architecture descriptor for {path}") from e
    except yaml.YAMLError as e:
        raise FormatError(f"Unreadable architecture descriptor for {path}: {e}") from e
    if not isinstance(data, dict) or "nodes" not in data:
        raise FormatError(f"Malformed architecture descriptor for {path}")
    return data


def _comparable(descriptor: dict) -> dict:
    # the seed only drives dropout masks, not the architecture
    return {k: v for k, v in descriptor.items() if k != "seed"}


def restore(path: PathLike, into: Optional[Network] = None) -> Network:
    """Load a checkpoint, building the network from its descriptor unless ``into`` is given.

    All files are decoded and checked before any parameter is touched.
    """
    with open(path, "rb") as fh:
        stored = decode_parameters(fh.read())
    descriptor = _read_descriptor(path)

    if into is None:
        network = Network.from_descriptor(descriptor)
    else:
        if _comparable(yaml.safe_load(yaml.safe_dump(into.descriptor()))) != _comparable(descriptor):
            raise DescriptorMismatchError(
                f"Checkpoint {path} describes network {descriptor.get('name')!r} "
                f"with a different architecture than {into.name!r}"
            )
        network = into

    named = network.named_parameters()
    if list(named) != list(stored):
        raise DescriptorMismatchError(f"Parameter names in {path} do not match network {network.name}")
    for name, param in named.items():
        if stored[name].shape != param.data.shape:
            raise DescriptorMismatchError(
                f"Parameter {name} has shape {stored[name].shape} in {path}, network expects {param.data.shape}"
            )
    for name, param in named.items():
        param.data = np.array(stored[name], dtype=DTYPE)
        param.zero_grad()
    logger.debug("Checkpoint restored", path=os.fspath(path), network=network.name)
    return network
