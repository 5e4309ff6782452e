"""
Test suite for Hamiltonian term lists, the model library and the term-list
file format.
"""

import unittest
import sys
import os

import numpy as np

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from errors import ValidationError
from oracle.statevector import dense_hamiltonian, sv_ground_state
from simulation.hamiltonians import (
    LIBRARY,
    HamiltonianSpec,
    HamiltonianTerm,
    hamiltonian_library,
    load_hamiltonian,
)
from ttn.gates import named_matrix

CONFIGS = os.path.join(os.path.dirname(__file__), '..', 'configs')


def open_tfim_ground_energy(n: int) -> float:
    """Critical open-chain transverse-field Ising ground energy (J = g = 1)."""
    return 1 - 1 / np.sin(np.pi / (2 * (2 * n + 1)))


class TestLibrary(unittest.TestCase):
    """Standard models."""

    def test_tfim_chain_terms(self):
        h = hamiltonian_library('tfim-chain', 5)
        self.assertEqual(h.count('ZZ'), 4)
        self.assertEqual(h.count('X'), 5)
        self.assertTrue(all(t.coefficient == -1.0 for t in h.terms))

    def test_periodic_chain_closes_the_ring(self):
        h = hamiltonian_library('periodic-chain', 5)
        self.assertEqual(h.count('ZZ'), 5)
        self.assertIn((4, 0), [t.sites for t in h.terms])

    def test_long_range_coefficients_decay(self):
        h = hamiltonian_library('long-range-ising', 4, {'J': 2.0, 'alpha': 2.0})
        coefficients = {t.sites: t.coefficient for t in h.terms}
        self.assertEqual(len(coefficients), 6)
        self.assertAlmostEqual(coefficients[(0, 2)], 0.5)
        self.assertAlmostEqual(coefficients[(0, 3)], 2.0 / 9)

    def test_tfim_tree_default_edges(self):
        h = hamiltonian_library('tfim-tree', 7)
        bonds = sorted(t.sites for t in h.terms if len(t.sites) == 2)
        self.assertEqual(bonds, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)])

    def test_every_model_builds(self):
        for name in LIBRARY:
            with self.subTest(name=name):
                h = hamiltonian_library(name, 6)
                self.assertEqual(h.n, 6)
                self.assertGreater(len(h.terms), 0)

    def test_unknown_model(self):
        with self.assertRaises(ValidationError):
            hamiltonian_library('hubbard', 4)

    def test_critical_tfim_ground_energy(self):
        for n in (4, 6, 8):
            with self.subTest(n=n):
                exact, _ = sv_ground_state(hamiltonian_library('tfim-chain', n))
                self.assertAlmostEqual(exact, open_tfim_ground_energy(n), places=9)

    def test_z_field_dense_matrix(self):
        h = hamiltonian_library('z-field', 3, {'h': 0.5})
        diagonal = np.real(np.diag(dense_hamiltonian(h)))
        # |000> has all Z = +1, |111> all -1
        self.assertAlmostEqual(diagonal[0], 1.5)
        self.assertAlmostEqual(diagonal[7], -1.5)


class TestTerms(unittest.TestCase):
    """Term validation and ordering."""

    def test_non_hermitian_term(self):
        with self.assertRaises(ValidationError):
            HamiltonianTerm((0,), np.array([[0, 1], [0, 0]]))

    def test_three_site_term(self):
        with self.assertRaises(ValidationError):
            HamiltonianTerm((0, 1, 2), np.eye(8))

    def test_site_out_of_range(self):
        with self.assertRaises(ValidationError):
            HamiltonianSpec(3, 2, [HamiltonianTerm((2, 3), named_matrix('ZZ'))])

    def test_operator_shape_must_match_d(self):
        with self.assertRaises(ValidationError):
            HamiltonianSpec(3, 3, [HamiltonianTerm((0, 1), named_matrix('ZZ'))])

    def test_ordered_terms(self):
        h = HamiltonianSpec(4, 2, [
            HamiltonianTerm((2, 3), named_matrix('ZZ'), label='b'),
            HamiltonianTerm((0,), named_matrix('X'), label='a'),
            HamiltonianTerm((3, 0), named_matrix('ZZ'), label='c'),
        ])
        self.assertEqual([t.label for t in h.ordered_terms()], ['a', 'c', 'b'])


class TestTermListFormat(unittest.TestCase):
    """Parsing term lists from JSON documents."""

    def test_bare_list(self):
        h = HamiltonianSpec.from_dict([
            {'sites': [0, 1], 'matrix': 'ZZ', 'coeff': -1.0},
            {'sites': [2], 'matrix': 'X', 'coeff': 0.5},
        ])
        self.assertEqual(h.n, 3)
        self.assertEqual(h.d, 2)
        self.assertEqual(len(h.terms), 2)

    def test_document_with_raw_matrix(self):
        raw = [1, 0, 0, 0, 0, 0, -1, 0]
        h = HamiltonianSpec.from_dict({'n': 4, 'terms': [{'sites': [3], 'matrix': raw}]})
        self.assertEqual(h.n, 4)
        np.testing.assert_array_equal(h.terms[0].operator, named_matrix('Z'))

    def test_record_without_sites(self):
        with self.assertRaises(ValidationError):
            HamiltonianSpec.from_dict([{'matrix': 'ZZ'}])

    def test_dict_round_trip_keeps_dense_matrix(self):
        h = hamiltonian_library('heisenberg-chain', 4, {'J': 0.5})
        again = HamiltonianSpec.from_dict(h.to_dict())
        np.testing.assert_allclose(dense_hamiltonian(again), dense_hamiltonian(h), atol=1e-14)

    def test_bundled_file(self):
        h = load_hamiltonian({'file': os.path.join(CONFIGS, 'heisenberg7.json')}, 7)
        self.assertEqual(h.n, 7)
        self.assertEqual(len(h.terms), 17)
        self.assertEqual(h.name, 'heisenberg-tree7')

    def test_load_by_name(self):
        h = load_hamiltonian({'name': 'tfim-chain', 'params': {'g': 0.5}}, 6)
        self.assertEqual(h.count('X'), 6)
        self.assertAlmostEqual(h.terms[-1].coefficient, -0.5)

    def test_load_needs_a_source(self):
        with self.assertRaises(ValidationError):
            load_hamiltonian({}, 4)


if __name__ == '__main__':
    unittest.main()
