"""
Hamiltonians

Two-body Hamiltonians as explicit term lists, a small library of standard
models and the JSON term-list file format.
"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import NumericsConfig, get_logger
from errors import ValidationError
from ttn.gates import matrix_from_raw, named_matrix

logger = get_logger(__name__)

LIBRARY = ("tfim-chain", "tfim-tree", "heisenberg-chain", "long-range-ising", "periodic-chain", "z-field")


@dataclass
class HamiltonianTerm:
    """coefficient * operator acting on one or two qudits."""

    sites: Tuple[int, ...]
    operator: np.ndarray
    coefficient: float = 1.0
    label: str = ""

    def __post_init__(self):
        self.sites = tuple(int(s) for s in self.sites)
        self.operator = np.asarray(self.operator, dtype=np.complex128)
        if len(self.sites) not in (1, 2) or len(set(self.sites)) != len(self.sites):
            raise ValidationError(f"terms act on one or two distinct sites, got {self.sites}")
        if self.operator.ndim != 2 or self.operator.shape[0] != self.operator.shape[1]:
            raise ValidationError(f"term {self.label or self.sites} needs a square matrix")
        scale = max(1.0, float(np.linalg.norm(self.operator)))
        if np.linalg.norm(self.operator - self.operator.conj().T) > NumericsConfig.HERMITIAN_TOLERANCE * scale:
            raise ValidationError(f"term {self.label or self.sites} is not Hermitian")

    @property
    def matrix(self) -> np.ndarray:
        return self.coefficient * self.operator

    @property
    def sort_key(self) -> Tuple[int, int]:
        return min(self.sites), max(self.sites)


@dataclass
class HamiltonianSpec:
    """H = sum of terms on n qudits of dimension d."""

    n: int
    d: int
    terms: List[HamiltonianTerm]
    name: str = "custom"
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for term in self.terms:
            if any(not 0 <= s < self.n for s in term.sites):
                raise ValidationError(f"term on {term.sites} is outside 0..{self.n - 1}")
            expected = self.d ** len(term.sites)
            if term.operator.shape != (expected, expected):
                raise ValidationError(
                    f"term on {term.sites} has shape {term.operator.shape}, expected {expected}x{expected}"
                )

    def ordered_terms(self) -> List[HamiltonianTerm]:
        """Terms in (min site, max site) order; ties keep their listed order."""
        return sorted(self.terms, key=lambda term: term.sort_key)

    def count(self, label: str) -> int:
        return sum(1 for term in self.terms if term.label == label)

    def to_dict(self) -> Dict[str, Any]:
        terms = []
        for term in self.terms:
            flat = term.operator.reshape(-1)
            raw = np.empty(2 * flat.size)
            raw[0::2], raw[1::2] = flat.real, flat.imag
            terms.append({'sites': list(term.sites), 'matrix': raw.tolist(),
                          'coeff': term.coefficient, 'label': term.label})
        return {'n': self.n, 'd': self.d, 'name': self.name, 'terms': terms}

    @classmethod
    def from_dict(cls, data: Any, n: Optional[int] = None, d: int = 2) -> "HamiltonianSpec":
        """
        Parse a term list.

        Accepts either a bare list of ``{sites, matrix, coeff}`` records or a
        document ``{"n": ..., "d": ..., "terms": [...]}``. ``matrix`` is a
        gate/Pauli name or a raw interleaved (re, im) list.
        """
        if isinstance(data, dict):
            n = data.get('n', n)
            d = data.get('d', d)
            records = data.get('terms', [])
            name = data.get('name', 'custom')
        else:
            records, name = data, 'custom'
        terms = []
        for record in records:
            try:
                sites = record['sites']
                matrix = record['matrix']
            except (KeyError, TypeError) as e:
                raise ValidationError(f"term record {record!r} needs sites and matrix") from e
            if isinstance(matrix, str):
                operator, label = named_matrix(matrix, (), d), matrix
            else:
                operator, label = matrix_from_raw(matrix, d ** len(sites)), record.get('label', 'raw')
            terms.append(HamiltonianTerm(sites, operator, float(record.get('coeff', 1.0)), label))
        if n is None:
            n = 1 + max((s for term in terms for s in term.sites), default=0)
        return cls(int(n), int(d), terms, name=name)

    @classmethod
    def from_file(cls, path: str, n: Optional[int] = None, d: int = 2) -> "HamiltonianSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), n=n, d=d)


def _term(sites: Sequence[int], label: str, coefficient: float) -> HamiltonianTerm:
    return HamiltonianTerm(tuple(sites), named_matrix(label), coefficient, label)


def _ising(n: int, bonds: Sequence[Tuple[int, int]], coupling: float, field_strength: float) -> List[HamiltonianTerm]:
    terms = [_term(bond, "ZZ", -coupling) for bond in bonds]
    if field_strength != 0:
        terms += [_term((i,), "X", -field_strength) for i in range(n)]
    return terms


def hamiltonian_library(name: str, n: int, params: Optional[Dict[str, Any]] = None) -> HamiltonianSpec:
    """
    Standard qubit models.

    - tfim-chain: -J sum Z_i Z_{i+1} - g sum X_i (params J, g)
    - tfim-tree: the same couplings on a tree's edges (params edges, J, g;
      default edges join i to (i-1)//2)
    - heisenberg-chain: J sum (XX + YY + ZZ) on nearest neighbors
    - long-range-ising: sum_{i<j} J |i-j|^-alpha Z_i Z_j - g sum X_i
    - periodic-chain: tfim-chain plus the bond (n-1, 0)
    - z-field: h sum Z_i
    """
    params = dict(params or {})
    if n < 2:
        raise ValidationError(f"models need n >= 2, got {n}")
    coupling = float(params.get('J', 1.0))

    if name == "tfim-chain":
        terms = _ising(n, [(i, i + 1) for i in range(n - 1)], coupling, float(params.get('g', 1.0)))
    elif name == "tfim-tree":
        edges = params.get('edges') or [((i - 1) // 2, i) for i in range(1, n)]
        edges = [tuple(sorted(e)) for e in edges]
        if len(edges) != n - 1:
            raise ValidationError(f"a tree on {n} sites has {n - 1} edges, got {len(edges)}")
        terms = _ising(n, edges, coupling, float(params.get('g', 1.0)))
    elif name == "heisenberg-chain":
        operator = named_matrix("XX") + named_matrix("YY") + named_matrix("ZZ")
        terms = [HamiltonianTerm((i, i + 1), operator, coupling, "XX+YY+ZZ") for i in range(n - 1)]
    elif name == "long-range-ising":
        alpha = float(params.get('alpha', 2.0))
        if alpha < 0:
            raise ValidationError(f"alpha must be >= 0, got {alpha}")
        terms = [_term((i, j), "ZZ", coupling * float(j - i) ** -alpha)
                 for i in range(n) for j in range(i + 1, n)]
        field_strength = float(params.get('g', 0.0))
        if field_strength != 0:
            terms += [_term((i,), "X", -field_strength) for i in range(n)]
    elif name == "periodic-chain":
        bonds = [(i, i + 1) for i in range(n - 1)] + [(n - 1, 0)]
        terms = _ising(n, bonds, coupling, float(params.get('g', 1.0)))
    elif name == "z-field":
        terms = [_term((i,), "Z", float(params.get('h', 1.0))) for i in range(n)]
    else:
        raise ValidationError(f"unknown Hamiltonian {name!r}; known: {', '.join(LIBRARY)}")

    logger.debug(f"Built {name} on {n} sites with {len(terms)} terms")
    return HamiltonianSpec(n, 2, terms, name=name, params=params)


def load_hamiltonian(spec: Dict[str, Any], n: int, d: int = 2) -> HamiltonianSpec:
    """Resolve a run config's hamiltonian entry: ``{"file": path}`` or ``{"name": ..., "params": ...}``."""
    if 'file' in spec:
        return HamiltonianSpec.from_file(spec['file'], n=n, d=d)
    if 'terms' in spec:
        return HamiltonianSpec.from_dict(spec, n=n, d=d)
    if 'name' not in spec:
        raise ValidationError("hamiltonian config needs 'name', 'file' or 'terms'")
    return hamiltonian_library(spec['name'], int(spec.get('n', n)), spec.get('params'))
