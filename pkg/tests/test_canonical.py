"""
Test suite for the canonical form: the sweep, the canonicality check,
Gram matrices, normalization and optimal truncation.
"""

import unittest
import sys
import os

import numpy as np

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from errors import NotCanonicalError, NumericalError, ValidationError
from oracle.statevector import sv_schmidt, sv_truncate
from ttn.canonical import (
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
from ttn.observables import fidelity
from ttn.state import TtnState, basis_state, random_state, to_statevector
from ttn.topology import LAYOUTS, layout


class TestCanonicalize(unittest.TestCase):
    """The two-pass sweep over all internal edges."""

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_random_states_become_canonical(self):
        for kind in LAYOUTS:
            for n in (5, 7):
                with self.subTest(kind=kind, n=n):
                    state = random_state(layout(kind, n), 2, 4, self.rng, canonicalize=False)
                    self.assertFalse(check_canonical(state).passed)
                    canonicalize(state)
                    report = check_canonical(state)
                    self.assertTrue(report.passed)
                    self.assertLess(report.max_deviation, 1e-10)
                    self.assertTrue(state.is_canonical)

    def test_state_is_preserved_up_to_norm(self):
        state = random_state(layout('balanced-binary', 6), 2, 4, self.rng, canonicalize=False)
        before = to_statevector(state).normalized()
        canonicalize(state)
        np.testing.assert_allclose(to_statevector(state).amplitudes, before.amplitudes, atol=1e-10)

    def test_weights_are_schmidt_values(self):
        state = random_state(layout('caterpillar', 6), 2, 4, self.rng, canonicalize=False)
        v = to_statevector(state)
        canonicalize(state)
        for edge in state.topology.internal_edges:
            side_a = state.topology.bipartition_of(edge).side_a
            np.testing.assert_allclose(state.weights[edge], sv_schmidt(v, side_a), atol=1e-10)

    def test_weights_normalized_and_non_increasing(self):
        state = random_state(layout('balanced-binary', 8), 2, 4, self.rng)
        for w in state.weights.values():
            self.assertAlmostEqual(float(np.sum(w ** 2)), 1.0, places=10)
            self.assertTrue(np.all(np.diff(w) <= 0))
            self.assertTrue(np.all(w > 0))

    def test_second_sweep_keeps_weights(self):
        state = random_state(layout('caterpillar', 6), 2, 4, self.rng)
        weights = {e: w.copy() for e, w in state.weights.items()}
        canonicalize(state)
        for edge, w in weights.items():
            np.testing.assert_allclose(state.weights[edge], w, atol=1e-10)

    def test_rank_deficient_edge_is_reduced(self):
        # a product state padded to rank 3 on every edge has Schmidt rank 1
        product = basis_state(layout('caterpillar', 5), 2, [0, 1, 0, 1, 1])
        tensors = {}
        for v, t in product.tensors.items():
            pad = [(0, 0) if product.topology.neighbors(v)[i].startswith('q') else (0, 2)
                   for i in range(3)]
            tensors[v] = np.pad(t, pad)
        weights = {e: np.array([1.0, 0.5, 0.25]) for e in product.weights}
        state = TtnState(product.topology, 2, tensors, weights)
        canonicalize(state)
        self.assertEqual(state.chi_max_observed, 1)

    def test_cutoff_discards_small_weights(self):
        state = random_state(layout('caterpillar', 6), 2, 4, self.rng, canonicalize=False)
        exact = state.copy()
        canonicalize(exact)
        # every edge has its smallest squared weight below this cutoff
        threshold = 1.5 * max(float(w[-1] ** 2) for w in exact.weights.values())
        discarded = canonicalize(state, cutoff=threshold)
        self.assertGreater(discarded, 0.0)
        self.assertLess(sum(len(w) for w in state.weights.values()),
                        sum(len(w) for w in exact.weights.values()))

    def test_three_qudits_only_normalize(self):
        state = random_state(layout('caterpillar', 3), 2, 2, self.rng, canonicalize=False)
        state.tensors['v0'] = 4.0 * state.tensors['v0']
        self.assertEqual(canonicalize(state), 0.0)
        self.assertTrue(state.is_canonical)
        self.assertAlmostEqual(state_norm(state), 1.0, places=12)
        self.assertTrue(check_canonical(state).passed)

    def test_zero_state_raises(self):
        state = random_state(layout('caterpillar', 5), 2, 2, self.rng, canonicalize=False)
        for v in state.tensors:
            state.tensors[v] = np.zeros_like(state.tensors[v])
        with self.assertRaises(NumericalError):
            canonicalize(state)

    def test_single_edge_canonicalization(self):
        state = random_state(layout('caterpillar', 4), 2, 4, self.rng, canonicalize=False)
        v = to_statevector(state)
        canonicalize_edge(state, ('v0', 'v1'))
        np.testing.assert_allclose(state.weights[('v0', 'v1')],
                                   sv_schmidt(v, {0, 1}), atol=1e-10)


class TestGramAndNorm(unittest.TestCase):
    """Gram matrices and the network norm."""

    def setUp(self):
        self.rng = np.random.default_rng(12)

    def test_gram_is_identity_after_canonicalize(self):
        state = random_state(layout('balanced-binary', 7), 2, 4, self.rng)
        for a, b in state.topology.internal_edges:
            for side in (a, b):
                gram = gram_matrix(state, (a, b), side).matrix
                np.testing.assert_allclose(gram, np.eye(len(state.weights[(a, b)])), atol=1e-10)

    def test_gram_is_hermitian_before_canonicalize(self):
        state = random_state(layout('caterpillar', 6), 2, 3, self.rng, canonicalize=False)
        gram = gram_matrix(state, ('v1', 'v2'), 'v2').matrix
        np.testing.assert_allclose(gram, gram.conj().T, atol=1e-10)

    def test_gram_side_must_be_endpoint(self):
        state = random_state(layout('caterpillar', 6), 2, 3, self.rng)
        with self.assertRaises(ValidationError):
            gram_matrix(state, ('v1', 'v2'), 'v0')

    def test_state_norm_matches_dense(self):
        state = random_state(layout('caterpillar', 6), 2, 3, self.rng, canonicalize=False)
        self.assertAlmostEqual(state_norm(state) / to_statevector(state).norm(), 1.0, places=10)

    def test_overlap_matches_dense_inner_product(self):
        topology = layout('balanced-binary', 6)
        a = random_state(topology, 2, 3, self.rng)
        b = random_state(topology, 2, 5, self.rng, canonicalize=False)
        expected = np.vdot(to_statevector(a).amplitudes, to_statevector(b).amplitudes)
        self.assertAlmostEqual(abs(overlap(a, b) - expected), 0.0, places=10)
        self.assertAlmostEqual(overlap(a, a).real, 1.0, places=10)

    def test_overlap_needs_same_tree(self):
        a = basis_state(layout('caterpillar', 6), 2, [0] * 6)
        b = basis_state(layout('balanced-binary', 6), 2, [0] * 6)
        with self.assertRaises(ValidationError):
            overlap(a, b)

    def test_normalize(self):
        state = random_state(layout('balanced-binary', 6), 2, 3, self.rng, canonicalize=False)
        old = normalize(state)
        self.assertGreater(old, 0)
        self.assertAlmostEqual(state_norm(state), 1.0, places=10)
        self.assertTrue(state.is_normalized)


class TestTruncation(unittest.TestCase):
    """Keeping the largest Schmidt weights."""

    def setUp(self):
        self.rng = np.random.default_rng(13)
        self.state = random_state(layout('caterpillar', 8), 2, 8, self.rng)
        self.v = to_statevector(self.state)
        self.edge = ('v2', 'v3')

    def test_fidelity_is_sqrt_of_kept_weight(self):
        lam = self.state.weights[self.edge].copy()
        result = truncate_edge(self.state, self.edge, 2)
        self.assertAlmostEqual(result.kept_weight, float(np.sum(lam[:2] ** 2)), places=12)
        self.assertAlmostEqual(result.fidelity, np.sqrt(result.kept_weight), places=12)
        self.assertAlmostEqual(fidelity(self.state, self.v), result.fidelity, places=10)
        self.assertEqual(result.discarded_rank, len(lam) - 2)

    def test_truncation_is_the_best_approximation(self):
        side_a = self.state.topology.bipartition_of(self.edge).side_a
        best = sv_truncate(self.v, side_a, 2)
        result = truncate_edge(self.state, self.edge, 2)
        self.assertAlmostEqual(result.fidelity, abs(np.vdot(best.amplitudes, self.v.amplitudes)), places=9)

    def test_truncated_state_is_canonical(self):
        truncate_edge(self.state, self.edge, 2)
        self.assertTrue(check_canonical(self.state).passed)
        self.assertEqual(self.state.edge_rank(self.edge), 2)

    def test_no_op_when_rank_is_small(self):
        result = truncate_edge(self.state, self.edge, 100)
        self.assertEqual(result.fidelity, 1.0)
        self.assertEqual(result.discarded_rank, 0)

    def test_invalid_rank(self):
        with self.assertRaises(ValidationError):
            truncate_edge(self.state, self.edge, 0)

    def test_needs_canonical_state(self):
        self.state.invalidate()
        with self.assertRaises(NotCanonicalError):
            truncate_edge(self.state, self.edge, 2)

    def test_truncate_state_reports_overlap_with_original(self):
        cut = sum(1 for e in self.state.topology.internal_edges if self.state.edge_rank(e) > 2)
        self.assertGreater(cut, 1)
        result = truncate_state(self.state, 2)
        self.assertAlmostEqual(result, fidelity(self.state, self.v), places=9)
        self.assertTrue(check_canonical(self.state).passed)

    def test_truncate_state_without_cuts(self):
        self.assertEqual(truncate_state(self.state, 100), 1.0)
        self.assertAlmostEqual(fidelity(self.state, self.v), 1.0, places=10)

    def test_truncate_state_caps_every_edge(self):
        bound = truncate_state(self.state, 2)
        self.assertLessEqual(self.state.chi_max_observed, 2)
        self.assertGreater(bound, 0.0)
        self.assertLessEqual(bound, 1.0)


if __name__ == '__main__':
    unittest.main()
