"""
Test suite for the command-line front end: argument parsing, config
overrides and exit codes.
"""

import unittest
import io
import json
import sys
import os
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from unittest.mock import patch

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

import cli
from errors import NumericalError

CONFIGS = os.path.join(os.path.dirname(__file__), '..', 'configs')


@patch('cli.setup_logging')
class TestMain(unittest.TestCase):
    """Running workflows through main()."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def run_main(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = cli.main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def config(self, name):
        return os.path.join(CONFIGS, name)

    def test_validate_success(self, _logging):
        code, out, _ = self.run_main('validate', '--config', self.config('validate.json'),
                                     '--output', self.tmp.name)
        self.assertEqual(code, cli.EXIT_OK)
        self.assertTrue(json.loads(out)['valid'])

    def test_validate_malformed_topology(self, _logging):
        code, out, err = self.run_main('validate', '--config', self.config('validate_malformed.json'),
                                       '--output', self.tmp.name)
        self.assertEqual(code, cli.EXIT_VALIDATION)
        self.assertFalse(json.loads(out)['valid'])
        self.assertIn('invalid topology', err)

    def test_canonicalize_with_overrides(self, _logging):
        code, out, _ = self.run_main('canonicalize', '--config', self.config('canonicalize.json'),
                                     '--chi-max', '2', '--seed', '9', '--output', self.tmp.name)
        self.assertEqual(code, cli.EXIT_OK)
        result = json.loads(out)
        self.assertLessEqual(result['max_rank'], 2)
        self.assertTrue(os.path.exists(os.path.join(self.tmp.name, 'canonical_state.json')))

    def test_missing_config_file(self, _logging):
        code, _, err = self.run_main('validate', '--config', self.config('missing.json'))
        self.assertEqual(code, cli.EXIT_CONFIG)
        self.assertIn('config error', err)

    def test_invalid_config_value(self, _logging):
        with tempfile.NamedTemporaryFile('w', suffix='.json', dir=self.tmp.name, delete=False) as fh:
            json.dump({'n': 2}, fh)
        code, _, _ = self.run_main('validate', '--config', fh.name)
        self.assertEqual(code, cli.EXIT_CONFIG)

    def test_oracle_check_passes(self, _logging):
        with tempfile.NamedTemporaryFile('w', suffix='.json', dir=self.tmp.name, delete=False) as fh:
            json.dump({'n': 4, 'suite': 'gates'}, fh)
        code, out, _ = self.run_main('oracle-check', '--config', fh.name, '--output', self.tmp.name)
        self.assertEqual(code, cli.EXIT_OK)
        self.assertTrue(json.loads(out)['passed'])

    def test_numerical_failure_exit_code(self, _logging):
        with patch('cli.ExperimentRunner') as runner_cls:
            runner_cls.return_value.run.side_effect = NumericalError("energy became non-finite")
            code, _, err = self.run_main('evolve', '--output', self.tmp.name)
        self.assertEqual(code, cli.EXIT_NUMERICAL)
        self.assertIn('non-finite', err)

    def test_logging_flags_are_passed_on(self, setup_logging):
        self.run_main('--log-level', 'DEBUG', 'validate', '--config', self.config('validate.json'),
                      '--output', self.tmp.name)
        setup_logging.assert_called_once_with('DEBUG', None)


class TestParser(unittest.TestCase):
    """Argument parsing."""

    def setUp(self):
        self.parser = cli.build_parser()

    def test_every_workflow_has_a_subcommand(self):
        for name in cli.WORKFLOWS:
            with self.subTest(name=name):
                args = self.parser.parse_args([name])
                self.assertEqual(args.command, name)

    def test_overrides_reach_the_config(self):
        args = self.parser.parse_args(['evolve', '--dt', '0.05', '--order', '1', '--format', 'csv'])
        config = cli.load_config(args)
        self.assertEqual(config.dt, 0.05)
        self.assertEqual(config.order, 1)
        self.assertEqual(config.format, 'csv')

    def test_seed_must_fit_64_bits(self):
        with redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                self.parser.parse_args(['evolve', '--seed', str(2 ** 64)])

    def test_order_choices(self):
        with redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                self.parser.parse_args(['evolve', '--order', '3'])

    def test_command_required(self):
        with redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                self.parser.parse_args([])

    def test_serve_defaults(self):
        args = self.parser.parse_args(['serve'])
        self.assertEqual((args.host, args.port), ('127.0.0.1', 5001))


if __name__ == '__main__':
    unittest.main()
