"""
Test suite for the job server: HTTP workflow endpoints and streamed
evolution over Socket.IO.
"""

import unittest
import sys
import os
import tempfile
import time

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

import server
from errors import BudgetExceededError, ConfigError, NumericalError, ValidationError

CONFIGS = os.path.join(os.path.dirname(__file__), '..', 'configs')


class TestHttpEndpoints(unittest.TestCase):
    """Workflow requests over HTTP."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.client = server.app.test_client()

    def tearDown(self):
        self.tmp.cleanup()

    def test_health(self):
        response = self.client.get('/api/health')
        self.assertEqual(response.status_code, 200)
        self.assertIn('evolve', response.get_json()['workflows'])

    def test_validate_workflow(self):
        body = {'topology': os.path.join(CONFIGS, 'tree7.txt'), 'output': self.tmp.name}
        response = self.client.post('/api/validate', json=body)
        self.assertEqual(response.status_code, 200)
        self.assertTrue(response.get_json()['valid'])

    def test_unknown_workflow(self):
        response = self.client.post('/api/simulate', json={})
        self.assertEqual(response.status_code, 404)

    def test_bad_config(self):
        response = self.client.post('/api/validate', json={'n': 2})
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.get_json()['type'], 'ConfigError')

    def test_unknown_config_key(self):
        response = self.client.post('/api/validate', json={'colour': 'blue'})
        self.assertEqual(response.status_code, 400)

    def test_body_must_be_an_object(self):
        response = self.client.post('/api/validate', json=[1, 2])
        self.assertEqual(response.status_code, 400)

    def test_status_codes(self):
        self.assertEqual(server.status_for(ValidationError("x")), 400)
        self.assertEqual(server.status_for(NumericalError("x")), 422)
        self.assertEqual(server.status_for(ConfigError("x")), 400)
        self.assertEqual(server.status_for(BudgetExceededError("x")), 400)


class TestEvolutionStream(unittest.TestCase):
    """Streaming evolution records to a Socket.IO client."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.client = server.socketio.test_client(server.app)

    def tearDown(self):
        if self.client.is_connected():
            self.client.disconnect()
        self.tmp.cleanup()

    def wait_for(self, name, timeout=30.0):
        """Collect received events until one called ``name`` arrives."""
        received = []
        deadline = time.time() + timeout
        while time.time() < deadline:
            received.extend(self.client.get_received())
            if any(event['name'] == name for event in received):
                return received
            time.sleep(0.05)
        self.fail(f"no {name!r} event within {timeout}s")

    def test_connects(self):
        self.assertTrue(self.client.is_connected())

    def test_evolution_streams_every_step(self):
        config = {'n': 4, 'hamiltonian': {'name': 'tfim-chain'}, 'initial_state': 'zero',
                  't': 0.03, 'dt': 0.01, 'output': self.tmp.name}
        self.client.emit('evolve', config)
        received = self.wait_for('evolution_done')
        steps = [event['args'][0] for event in received if event['name'] == 'evolution_step']
        self.assertEqual([s['step'] for s in steps], [0, 1, 2, 3])
        done = next(event['args'][0] for event in received if event['name'] == 'evolution_done')
        self.assertEqual(done['steps'], 3)

    def test_invalid_config_is_reported(self):
        self.client.emit('evolve', {'order': 5})
        received = self.client.get_received()
        errors = [event for event in received if event['name'] == 'error']
        self.assertEqual(len(errors), 1)
        self.assertEqual(errors[0]['args'][0]['type'], 'ConfigError')

    def test_failed_evolution_is_reported(self):
        self.client.emit('evolve', {'initial_state': 'warm', 'n': 4, 'output': self.tmp.name})
        received = self.wait_for('error')
        error = next(event['args'][0] for event in received if event['name'] == 'error')
        self.assertEqual(error['type'], 'ValidationError')


if __name__ == '__main__':
    unittest.main()
