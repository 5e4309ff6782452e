"""
Test suite for measurements, adaptive patterns, cluster states and
measurement-based computation.
"""

import unittest
import json
import sys
import os

import networkx as nx
import numpy as np

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from errors import ValidationError
from oracle.statevector import sv_cluster_state, sv_measure_branch, sv_partial_trace
from simulation.locc import (
    MeasurementOp,
    MeasurementPattern,
    MeasurementStep,
    RandomSource,
    Selector,
    basis_operators,
    enumerate_branches,
    measure,
    outcome_probabilities,
    run_locc,
    run_mbqc,
    tree_cluster_state,
)
from ttn.canonical import check_canonical
from ttn.observables import fidelity, rdm1
from ttn.state import basis_state, random_state, to_statevector
from ttn.topology import layout

CONFIGS = os.path.join(os.path.dirname(__file__), '..', 'configs')


class TestRandomSource(unittest.TestCase):
    """Seeded outcome streams."""

    def test_same_seed_same_stream(self):
        a, b = RandomSource(42), RandomSource(42)
        self.assertEqual([a.uniform() for _ in range(5)], [b.uniform() for _ in range(5)])

    def test_streams_differ(self):
        a, b = RandomSource(42, stream=0), RandomSource(42, stream=1)
        self.assertNotEqual([a.uniform() for _ in range(5)], [b.uniform() for _ in range(5)])

    def test_trajectory_sources_are_distinct(self):
        base = RandomSource(7)
        self.assertNotEqual(base.for_trajectory(0).uniform(), base.for_trajectory(1).uniform())

    def test_seed_range(self):
        with self.assertRaises(ValidationError):
            RandomSource(-1)


class TestMeasurementOperators(unittest.TestCase):
    """Named bases and completeness."""

    def test_x_basis_outcome_zero_is_plus(self):
        plus = np.array([1, 1]) / np.sqrt(2)
        e0, e1 = basis_operators('X')
        np.testing.assert_allclose(e0, np.outer(plus, plus), atol=1e-12)
        np.testing.assert_allclose(e0 + e1, np.eye(2), atol=1e-12)

    def test_flipped_basis_swaps_outcomes(self):
        z0, z1 = basis_operators('Z')
        f0, f1 = basis_operators('-Z')
        np.testing.assert_allclose(f0, z1)
        np.testing.assert_allclose(f1, z0)

    def test_xy_plane_basis(self):
        e0, _ = basis_operators('XY(0)')
        np.testing.assert_allclose(e0, basis_operators('X')[0], atol=1e-12)

    def test_qutrit_z_basis(self):
        ops = basis_operators('Z', d=3)
        self.assertEqual(len(ops), 3)
        np.testing.assert_allclose(sum(ops), np.eye(3))

    def test_unknown_basis(self):
        with self.assertRaises(ValidationError):
            basis_operators('W')

    def test_incomplete_measurement(self):
        with self.assertRaises(ValidationError):
            MeasurementOp(0, [np.diag([1.0, 0.0])])


class TestMeasure(unittest.TestCase):
    """Single measurements against the dense oracle."""

    def setUp(self):
        self.rng = np.random.default_rng(51)

    def test_deterministic_outcome(self):
        state = basis_state(layout('caterpillar', 4), 2, [1, 0, 0, 0])
        result = measure(state, MeasurementOp.in_basis(0, 'Z'), RandomSource(0))
        self.assertEqual(result.outcome, 1)
        self.assertAlmostEqual(result.probability, 1.0, places=12)

    def test_impossible_forced_outcome(self):
        state = basis_state(layout('caterpillar', 4), 2, [1, 0, 0, 0])
        with self.assertRaises(ValidationError):
            measure(state, MeasurementOp.in_basis(0, 'Z'), outcome=0)

    def test_needs_a_source_or_outcome(self):
        state = basis_state(layout('caterpillar', 4), 2, [0] * 4)
        with self.assertRaises(ValidationError):
            measure(state, MeasurementOp.in_basis(0, 'X'))

    def test_born_probabilities_and_post_states(self):
        state = random_state(layout('balanced-binary', 6), 2, 4, self.rng)
        v = to_statevector(state)
        m = MeasurementOp.in_basis(4, 'Y')
        probabilities = outcome_probabilities(state, m)
        self.assertAlmostEqual(sum(probabilities), 1.0, places=10)
        for r, p in enumerate(probabilities):
            p_exact, post = sv_measure_branch(v, 4, m.operators[r])
            self.assertAlmostEqual(p, p_exact, places=10)
            branch = state.copy()
            measure(branch, m, outcome=r)
            self.assertGreater(fidelity(branch, post), 1 - 1e-10)
            self.assertTrue(check_canonical(branch).passed)

    def test_rank_never_grows(self):
        for trial in range(20):
            state = random_state(layout('caterpillar', 6), 2, 4, self.rng)
            source = RandomSource(trial)
            for q in self.rng.permutation(6)[:3]:
                before = state.chi_max_observed
                basis = ['X', 'Y', 'Z'][int(self.rng.integers(3))]
                measure(state, MeasurementOp.in_basis(int(q), basis), source)
                self.assertLessEqual(state.chi_max_observed, before)

    def test_sampling_is_reproducible(self):
        outcomes = []
        for _ in range(2):
            state = random_state(layout('caterpillar', 5), 2, 2, np.random.default_rng(3))
            source = RandomSource(99)
            outcomes.append([measure(state, MeasurementOp.in_basis(q, 'X'), source).outcome
                             for q in range(5)])
        self.assertEqual(outcomes[0], outcomes[1])


class TestPatterns(unittest.TestCase):
    """Selectors, pattern validation and transcripts."""

    def test_selector_text(self):
        selector = Selector.parse("s0 + s2 + 1")
        self.assertEqual(selector.constant, 1)
        self.assertEqual(selector.outcomes, [0, 2])
        self.assertEqual(selector.choose([1, 0, 1], 2), 1)
        self.assertEqual(selector.choose([0, 0, 0], 3), 1)

    def test_selector_forms(self):
        self.assertEqual(Selector.parse(None), Selector())
        self.assertEqual(Selector.parse(2).constant, 2)
        self.assertEqual(Selector.parse({'outcomes': [1]}).outcomes, [1])

    def test_bad_selector(self):
        with self.assertRaises(ValidationError):
            Selector.parse("s0 * 2")

    def test_qudit_measured_twice(self):
        with self.assertRaises(ValidationError):
            MeasurementPattern.from_dict({'steps': [{'target': 0, 'basis': 'X'},
                                                    {'target': 0, 'basis': 'Z'}]})

    def test_selector_references_later_step(self):
        with self.assertRaises(ValidationError):
            MeasurementPattern.from_dict([{'target': 0, 'basis': 'X', 'selector': 's1'},
                                          {'target': 1, 'basis': 'X'}])

    def test_target_out_of_range(self):
        pattern = MeasurementPattern([MeasurementStep(7, ['X'])])
        with self.assertRaises(ValidationError):
            pattern.validate(5)

    def test_bundled_pattern(self):
        pattern = MeasurementPattern.from_file(os.path.join(CONFIGS, 'wire_pattern.json'))
        self.assertEqual(pattern.targets, [0, 1, 2])
        self.assertEqual(MeasurementPattern.from_dict(pattern.to_dict()).to_dict(), pattern.to_dict())

    def test_adaptive_basis_choice(self):
        pattern = MeasurementPattern.from_dict([
            {'target': 0, 'basis': 'Z'},
            {'target': 1, 'bases': ['Z', 'X'], 'selector': 's0'},
        ])
        state = basis_state(layout('caterpillar', 4), 2, [1, 0, 0, 0])
        transcript, _ = run_locc(state, pattern, forced=[1, 0])
        self.assertEqual(transcript.outcomes, [1, 0])
        self.assertEqual(transcript.records[1].basis, 'X')
        self.assertAlmostEqual(transcript.probability, 0.5, places=12)

    def test_transcript_json_lines(self):
        pattern = MeasurementPattern.from_dict([{'target': q, 'basis': 'X'} for q in range(3)])
        state = basis_state(layout('caterpillar', 4), 2, [0] * 4)
        transcript, _ = run_locc(state, pattern, RandomSource(5))
        lines = transcript.to_json_lines().splitlines()
        self.assertEqual(len(lines), 3)
        self.assertEqual(json.loads(lines[2])['target'], 2)


class TestClusterStates(unittest.TestCase):
    """Tree cluster states and one-way computation."""

    def test_chain_cluster_state(self):
        chain = nx.path_graph(8)
        state = tree_cluster_state(chain, layout('caterpillar', 8))
        self.assertGreater(fidelity(state, sv_cluster_state(chain.edges, 8)), 1 - 1e-10)
        for w in state.weights.values():
            np.testing.assert_allclose(w, [2 ** -0.5, 2 ** -0.5], atol=1e-12)

    def test_star_cluster_state(self):
        star = nx.star_graph(5)
        state = tree_cluster_state(star, layout('balanced-binary', 6))
        self.assertGreater(fidelity(state, sv_cluster_state(star.edges, 6)), 1 - 1e-10)
        self.assertLessEqual(state.chi_max_observed, 2)

    def test_graph_smaller_than_topology(self):
        state = tree_cluster_state([(0, 1), (1, 2)], layout('caterpillar', 5))
        plus = np.array([1, 1]) / np.sqrt(2)
        np.testing.assert_allclose(rdm1(state, 4).matrix, np.outer(plus, plus), atol=1e-12)

    def test_non_tree_graph(self):
        with self.assertRaises(ValidationError):
            tree_cluster_state(nx.cycle_graph(4), layout('caterpillar', 4))

    def test_wire_pattern_reproduces_dense_branches(self):
        chain = [(0, 1), (1, 2), (2, 3)]
        pattern = MeasurementPattern.from_dict([{'target': q, 'basis': 'XY(0.4)'} for q in range(3)])
        state = tree_cluster_state(chain, layout('balanced-binary', 4))
        branches = enumerate_branches(state, pattern)
        self.assertEqual(len(branches), 8)
        self.assertAlmostEqual(sum(p for _, p, _ in branches), 1.0, places=10)

        reference = sv_cluster_state(chain, 4)
        for outcomes, p, branch in branches:
            v, p_exact = reference, 1.0
            for q, r in enumerate(outcomes):
                m = MeasurementOp.in_basis(q, 'XY(0.4)')
                p_r, v = sv_measure_branch(v, q, m.operators[r])
                p_exact *= p_r
            self.assertAlmostEqual(p, p_exact, places=10)
            np.testing.assert_allclose(rdm1(branch, 3).matrix,
                                       sv_partial_trace(v, [3]).matrix, atol=1e-10)

    def test_mbqc_forced_run(self):
        pattern = MeasurementPattern.from_file(os.path.join(CONFIGS, 'wire_pattern.json'))
        transcript, state = run_mbqc([(0, 1), (1, 2), (2, 3)], pattern, forced=[0, 1, 1])
        self.assertEqual(transcript.outcomes, [0, 1, 1])
        self.assertEqual(transcript.records[1].basis, 'XY(0.5)')
        self.assertEqual(transcript.records[2].basis, '-X')
        self.assertAlmostEqual(rdm1(state, 3).trace().real, 1.0, places=10)

    def test_mbqc_rejects_measuring_outside_graph(self):
        pattern = MeasurementPattern.from_dict([{'target': 3, 'basis': 'X'}])
        with self.assertRaises(ValidationError):
            run_mbqc([(0, 1), (1, 2)], pattern, RandomSource(0), topology=layout('caterpillar', 4))


if __name__ == '__main__':
    unittest.main()
