"""
Test suite for the experiment runner: every workflow on a small instance,
with outputs written to a temporary directory.
"""

import unittest
import csv
import json
import sys
import os
import tempfile

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from config import RunConfig
from errors import ValidationError
from experiment import WORKFLOWS, ExperimentRunner
from ttn import check_canonical, load_state

CONFIGS = os.path.join(os.path.dirname(__file__), '..', 'configs')


class ExperimentTestCase(unittest.TestCase):
    """Runner fixture with a scratch output directory."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.output = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def runner(self, config_name=None, **overrides):
        config = RunConfig.from_file(os.path.join(CONFIGS, config_name)) if config_name else RunConfig()
        return ExperimentRunner(config.with_overrides(output=self.output, **overrides))

    def assertFilesExist(self, result):
        self.assertTrue(result['files'])
        for path in result['files']:
            self.assertTrue(os.path.exists(path), path)


class TestValidateAndCanonicalize(ExperimentTestCase):
    """Topology validation and canonical forms."""

    def test_valid_topology(self):
        result = self.runner('validate.json').run('validate')
        self.assertTrue(result['valid'])
        self.assertEqual(result['topology']['n'], 7)
        self.assertFilesExist(result)

    def test_malformed_topology(self):
        result = self.runner('validate_malformed.json').run('validate')
        self.assertFalse(result['valid'])
        self.assertGreater(len(result['topology']['violations']), 0)

    def test_canonicalize_random_tree_state(self):
        result = self.runner('canonicalize.json').run('canonicalize')
        self.assertTrue(result['canonical']['passed'])
        self.assertLessEqual(result['max_rank'], 4)
        self.assertFilesExist(result)
        state = load_state(result['files'][0])
        self.assertTrue(check_canonical(state).passed)
        self.assertEqual(state.n, 7)

    def test_validate_saved_state(self):
        saved = self.runner('canonicalize.json').run('canonicalize')['files'][0]
        result = self.runner('validate.json', state=saved).run('validate')
        self.assertTrue(result['valid'])
        self.assertTrue(result['state']['canonical']['passed'])

    def test_unknown_workflow(self):
        with self.assertRaises(ValidationError):
            self.runner().run('simulate')


class TestEvolution(ExperimentTestCase):
    """Real-time and imaginary-time workflows."""

    def small(self, **overrides):
        values = dict(n=4, layout='caterpillar', hamiltonian={'name': 'tfim-chain'},
                      initial_state='zero', t=0.05, dt=0.01, seed=2)
        values.update(overrides)
        return self.runner(**values)

    def test_evolve_writes_series(self):
        records = []
        result = self.small().run('evolve', callback=records.append)
        self.assertEqual(result['steps'], 5)
        self.assertEqual(len(records), 6)
        self.assertEqual(len(result['magnetization']), 4)
        self.assertFilesExist(result)
        with open(os.path.join(self.output, 'evolution.csv')) as fh:
            lines = fh.read().splitlines()
        self.assertEqual(len(lines), 7)
        self.assertTrue(lines[0].startswith('step,time,energy'))

    def test_unknown_initial_state(self):
        with self.assertRaises(ValidationError):
            self.small(initial_state='warm').run('evolve')

    def test_ground_state_has_exact_reference(self):
        result = self.small(initial_state='random-product', dt_schedule=[0.1, 0.05],
                            energy_tolerance=1e-8).run('ground-state')
        self.assertIn('oracle_energy', result)
        self.assertLess(result['error'], 1e-3)
        self.assertFilesExist(result)


class TestMbqc(ExperimentTestCase):
    """Seeded MBQC trajectories."""

    def test_wire_trajectories(self):
        result = self.runner('mbqc_wire.json', trajectories=3, jobs=1).run('mbqc')
        self.assertEqual(len(result['trajectories']), 3)
        for trajectory in result['trajectories']:
            self.assertEqual(len(trajectory['outcomes']), 3)
            self.assertEqual(list(trajectory['outputs']), ['3'])
        with open(result['files'][0]) as fh:
            lines = [json.loads(line) for line in fh]
        self.assertEqual(len(lines), 9)
        self.assertEqual({line['trajectory'] for line in lines}, {0, 1, 2})

    def test_same_seed_same_outcomes(self):
        first = self.runner('mbqc_wire.json', trajectories=4, jobs=1).run('mbqc')
        second = self.runner('mbqc_wire.json', trajectories=4, jobs=1).run('mbqc')
        self.assertEqual([t['outcomes'] for t in first['trajectories']],
                         [t['outcomes'] for t in second['trajectories']])

    def test_worker_pool_matches_serial_run(self):
        serial = self.runner('mbqc_wire.json', trajectories=4, jobs=1).run('mbqc')
        pooled = self.runner('mbqc_wire.json', trajectories=4, jobs=2).run('mbqc')
        self.assertEqual([t['outcomes'] for t in serial['trajectories']],
                         [t['outcomes'] for t in pooled['trajectories']])


class TestChecksAndBenchmarks(ExperimentTestCase):
    """Oracle checks and scaling benchmarks."""

    def test_oracle_check(self):
        result = self.runner(n=4, suite='rdm').run('oracle-check')
        self.assertTrue(result['passed'])
        self.assertEqual(result['suites'][0]['suite'], 'rdm')

    def test_bench_routing(self):
        result = self.runner('bench_routing.json', sizes=[8, 16], chi_max=4).run('bench-routing')
        self.assertEqual(len(result['rows']), 4)
        fits = result['fits']
        self.assertGreater(fits['caterpillar']['slope_vs_n'], fits['balanced-binary']['slope_vs_n'])
        self.assertTrue(result['files'][0].endswith('.csv'))
        self.assertFilesExist(result)
        with open(result['files'][0], newline='') as fh:
            table = list(csv.DictReader(fh))
        self.assertEqual(len(table), 4)
        self.assertEqual({row['layout'] for row in table}, {'caterpillar', 'balanced-binary'})

    def test_csv_table_quotes_fields(self):
        runner = self.runner(format='csv')
        path = runner._write_table('table', ['label', 'value'],
                                   [{'label': 'a,b', 'value': 1}, {'label': 'c', 'value': 2}])
        with open(path, newline='') as fh:
            table = list(csv.DictReader(fh))
        self.assertEqual([row['label'] for row in table], ['a,b', 'c'])
        self.assertEqual([row['value'] for row in table], ['1', '2'])

    def test_bench_canonical(self):
        result = self.runner(layout='balanced-binary', n=8, chis=[2, 4]).run('bench-canonical')
        self.assertEqual([r['chi'] for r in result['rows']], [2, 4])
        self.assertTrue(result['files'][0].endswith('.json'))
        self.assertFilesExist(result)

    def test_every_workflow_is_dispatched(self):
        self.assertEqual(len(WORKFLOWS), 8)


if __name__ == '__main__':
    unittest.main()
