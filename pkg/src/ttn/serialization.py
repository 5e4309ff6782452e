"""
JSON serialization of topologies and TTN states.

Complex arrays are stored as flat lists of interleaved (re, im) pairs in
row-major order, next to their shape. Neighbor lists are stored explicitly
so that tensor index order survives a round trip after swaps.
"""

import json
from typing import Any, Dict

import numpy as np

from config import get_logger
from errors import ValidationError

from .state import TtnState
from .topology import TreeTopology, edge_key

logger = get_logger(__name__)

FORMAT_NAME = "treesims-ttn"
FORMAT_VERSION = 1


def encode_array(a: np.ndarray) -> Dict[str, Any]:
    flat = np.asarray(a, dtype=np.complex128).reshape(-1)
    data = np.empty(2 * flat.size)
    data[0::2] = flat.real
    data[1::2] = flat.imag
    return {'shape': list(a.shape), 'data': data.tolist()}


def decode_array(payload: Dict[str, Any]) -> np.ndarray:
    data = np.asarray(payload['data'], dtype=np.float64)
    shape = tuple(payload['shape'])
    if data.size != 2 * int(np.prod(shape)):
        raise ValidationError(f"array payload of shape {shape} has {data.size} entries")
    return (data[0::2] + 1j * data[1::2]).reshape(shape)


def topology_to_dict(topology: TreeTopology) -> Dict[str, Any]:
    return {
        'edges': [list(e) for e in topology.edges],
        'neighbors': {node: list(topology.neighbors(node))
                      for node in topology.vertices + topology.leaves},
    }


def topology_from_dict(data: Dict[str, Any]) -> TreeTopology:
    edges = [tuple(e) for e in data['edges']]
    if 'neighbors' not in data:
        return TreeTopology.from_edges(edges)
    return TreeTopology({node: list(nbs) for node, nbs in data['neighbors'].items()}, edges)


def state_to_dict(state: TtnState) -> Dict[str, Any]:
    return {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'd': state.d,
        'canonical': state.is_canonical,
        'normalized': state.is_normalized,
        'topology': topology_to_dict(state.topology),
        'tensors': {v: encode_array(t) for v, t in state.tensors.items()},
        'weights': [{'edge': list(e), 'values': w.tolist()} for e, w in state.weights.items()],
    }


def state_from_dict(data: Dict[str, Any]) -> TtnState:
    if data.get('format') != FORMAT_NAME:
        raise ValidationError(f"not a serialized TTN state (format {data.get('format')!r})")
    if data.get('version') != FORMAT_VERSION:
        raise ValidationError(f"unsupported state format version {data.get('version')}")
    try:
        topology = topology_from_dict(data['topology']).require_valid()
        tensors = {v: decode_array(p) for v, p in data['tensors'].items()}
        weights = {edge_key(*item['edge']): np.asarray(item['values'], dtype=np.float64)
                   for item in data['weights']}
        return TtnState(
            topology,
            int(data['d']),
            tensors,
            weights,
            canonical=bool(data.get('canonical', False)),
            normalized=bool(data.get('normalized', False)),
        )
    except (KeyError, TypeError) as e:
        raise ValidationError(f"malformed state document: {e}") from e


def save_state(state: TtnState, path: str) -> None:
    with open(path, 'w') as fh:
        json.dump(state_to_dict(state), fh)
    logger.info(f"Saved state (n={state.n}, chi={state.chi_max_observed}) to {path}")


def load_state(path: str) -> TtnState:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: invalid JSON: {e}") from e
    return state_from_dict(data)
