""" Flask Server """
from dataclasses import asdict
from typing import Any, Dict, Tuple

from flask import Flask, jsonify, request
from flask_socketio import SocketIO, emit

from config import ConfigError, RunConfig, get_logger, setup_logging
from errors import BudgetExceededError, NumericalError, TtnError, ValidationError
from experiment import WORKFLOWS, ExperimentRunner

logger = get_logger(__name__)

app = Flask(__name__)
socketio = SocketIO(app, async_mode='threading')

# One running evolution per client
jobs: Dict[str, Any] = {}

STATUS_CODES = (
    (ValidationError, 400),
    (NumericalError, 422),
    (ConfigError, 400),
    (BudgetExceededError, 400),
)


def status_for(error: TtnError) -> int:
    for kind, status in STATUS_CODES:
        if isinstance(error, kind):
            return status
    return 500


def config_from_body(body: Any) -> RunConfig:
    if body is None:
        return RunConfig()
    if not isinstance(body, dict):
        raise ConfigError("request body must be a JSON object")
    return RunConfig.from_dict(body)


@app.route('/api/health')
def health():
    return jsonify({'status': 'ok', 'workflows': list(WORKFLOWS)})


@app.route('/api/<workflow>', methods=['POST'])
def run_workflow(workflow: str) -> Tuple[Any, int]:
    """Run one workflow from a JSON run config and return its summary."""
    if workflow not in WORKFLOWS:
        return jsonify({'error': f"unknown workflow {workflow!r}"}), 404
    try:
        config = config_from_body(request.get_json(silent=True))
        result = ExperimentRunner(config).run(workflow)
        return jsonify(result), 200
    except TtnError as e:
        logger.error(f"Workflow {workflow} failed: {e}")
        return jsonify({'error': str(e), 'type': type(e).__name__}), status_for(e)


@socketio.on('connect')
def handle_connect():
    logger.info(f"Client {request.sid} connected")


@socketio.on('disconnect')
def handle_disconnect():
    """Forget the client's job; a running evolution finishes but emits to nobody."""
    if request.sid in jobs:
        del jobs[request.sid]
    logger.info(f"Client {request.sid} disconnected")


def _run_evolution(sid: str, config: RunConfig) -> None:
    def on_step(record):
        socketio.emit('evolution_step', asdict(record), room=sid)

    try:
        result = ExperimentRunner(config).run('evolve', callback=on_step)
        socketio.emit('evolution_done', result, room=sid)
    except TtnError as e:
        logger.error(f"Evolution for client {sid} failed: {e}")
        socketio.emit('error', {'message': str(e), 'type': type(e).__name__}, room=sid)
    finally:
        jobs.pop(sid, None)


@socketio.on('evolve')
def handle_evolve(data):
    """Start a real-time evolution and stream one record per Trotter step."""
    sid = request.sid
    if sid in jobs:
        emit('error', {'message': 'An evolution is already running for this client'})
        return
    try:
        config = config_from_body(data)
    except ConfigError as e:
        logger.warning(f"Invalid evolve config from client {sid}: {e}")
        emit('error', {'message': str(e), 'type': type(e).__name__})
        return
    jobs[sid] = socketio.start_background_task(_run_evolution, sid, config)
    logger.debug(f"Client {sid}: evolution started")


def serve(host: str = '127.0.0.1', port: int = 5001, debug: bool = False) -> None:
    logger.info(f"Starting server at http://{host}:{port}")
    try:
        socketio.run(app, host=host, port=port, debug=debug, allow_unsafe_werkzeug=True)
    except Exception as e:
        logger.error(f"Failed to start server: {e}")
        raise


if __name__ == '__main__':
    setup_logging()
    serve('0.0.0.0', 5001, debug=True)
