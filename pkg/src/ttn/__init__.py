"""
TTN Module

Tree tensor network states: tensor primitives, tree topologies, canonical
form, gates, observables and serialization.
"""

from .kernel import SvdResult, contract, contract_network, eigh, permute, svd_split
from .topology import (
    Bipartition,
    TreeTopology,
    ValidationReport,
    edge_key,
    is_leaf,
    layout,
    leaf_name,
    qudit_of,
)
from .state import (
    Statevector,
    TtnState,
    basis_state,
    entanglement_entropy,
    from_statevector,
    product_state,
    random_product_state,
    random_state,
    schmidt_spectrum,
    to_statevector,
)
from .canonical import (
    CanonicalReport,
    GramMatrix,
    canonicalize,
    canonicalize_edge,
    check_canonical,
    gram_matrix,
    normalize,
    overlap,
    state_norm,
    truncate_edge,
    truncate_state,
)
from .gates import (
    GateOp,
    RoutedGateReport,
    apply_gate_routed,
    apply_local,
    apply_neighbor_gate,
    apply_same_tensor,
    named_matrix,
    parse_gate_spec,
    swap_step,
)
from .observables import (
    DensityMatrix,
    correlator,
    energy,
    entropies,
    expectation,
    fidelity,
    rdm1,
    rdm2,
)
from .serialization import load_state, save_state, state_from_dict, state_to_dict

__all__ = [
    'SvdResult', 'contract', 'contract_network', 'eigh', 'permute', 'svd_split',
    'Bipartition', 'TreeTopology', 'ValidationReport', 'edge_key', 'is_leaf', 'layout',
    'leaf_name', 'qudit_of',
    'Statevector', 'TtnState', 'basis_state', 'entanglement_entropy', 'from_statevector',
    'product_state', 'random_product_state', 'random_state', 'schmidt_spectrum',
    'to_statevector',
    'CanonicalReport', 'GramMatrix', 'canonicalize', 'canonicalize_edge', 'check_canonical',
    'gram_matrix', 'normalize', 'overlap', 'state_norm', 'truncate_edge', 'truncate_state',
    'GateOp', 'RoutedGateReport', 'apply_gate_routed', 'apply_local', 'apply_neighbor_gate',
    'apply_same_tensor', 'named_matrix', 'parse_gate_spec', 'swap_step',
    'DensityMatrix', 'correlator', 'energy', 'entropies', 'expectation', 'fidelity',
    'rdm1', 'rdm2',
    'load_state', 'save_state', 'state_from_dict', 'state_to_dict',
]
