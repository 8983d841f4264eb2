"""API routes for solving routing instances"""

from flask import Blueprint, current_app, jsonify, request

from src.errors import AGFNError, CheckpointError, ConfigError, InstanceError
from src.models import DecodeConfig, Instance
from src.parser import InstanceParser
from src.pipeline import Solver

api_bp = Blueprint('api', __name__)


def get_solver() -> Solver:
    """Solver for the configured checkpoint, loaded once per app"""
    solver = current_app.extensions.get('agfn_solver')
    if solver is None:
        path = current_app.config.get('SOLVER_CHECKPOINT')
        if not path:
            raise CheckpointError("No solver checkpoint configured (set AGFN_SOLVER_CHECKPOINT)")
        solver = Solver.from_checkpoint(path)
        current_app.extensions['agfn_solver'] = solver
    return solver


def _read_instance(data: dict) -> Instance:
    """Instance from {"instance": {...}} or {"text": "<TSPLib / CVRPLib>"}"""
    if isinstance(data.get('instance'), dict):
        try:
            return Instance.from_dict(data['instance'])
        except (TypeError, ValueError) as e:
            raise InstanceError(f"Invalid instance: {str(e)}") from e
    text = (data.get('text') or '').strip()
    if not text:
        raise InstanceError("No instance provided")
    return InstanceParser.parse_text(text, bool(data.get('tsplib_rounding', False)))


def _decode_config(data: dict) -> DecodeConfig:
    cfg = DecodeConfig(
        mode=data.get('mode') or current_app.config['DECODE_MODE'],
        hybrid_p=float(data.get('p', current_app.config['HYBRID_P'])),
        n_rollouts=int(data.get('n_rollouts', current_app.config['N_ROLLOUTS'])),
        seed=int(data.get('seed', 0)),
    )
    cfg.validate()
    return cfg


@api_bp.route('/solve', methods=['POST'])
def solve():
    """Decode one instance with the configured checkpoint."""
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        return jsonify({'error': 'Expected a JSON object'}), 400

    try:
        inst = _read_instance(data)
        cfg = _decode_config(data)
    except (InstanceError, ConfigError, TypeError, ValueError) as e:
        return jsonify({'error': str(e)}), 400

    try:
        solver = get_solver()
    except CheckpointError as e:
        current_app.logger.error(f"Solver unavailable: {str(e)}")
        return jsonify({'error': 'Solver unavailable.'}), 503

    try:
        traj, seconds = solver.solve(inst, cfg)
    except CheckpointError as e:
        return jsonify({'error': str(e)}), 400
    except AGFNError as e:
        # Log full error server-side for debugging
        current_app.logger.error(f"Solve failed: {str(e)}", exc_info=True)

        # Return generic error to user
        return jsonify({'error': 'Failed to solve instance.'}), 500

    return jsonify({
        'success': True,
        'name': inst.name,
        'nodes': traj.nodes,
        'length': traj.length,
        'time_s': seconds,
    })
