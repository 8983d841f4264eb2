from flask import Blueprint, current_app

from src import __version__

main_bp = Blueprint('main', __name__)


@main_bp.route('/health')
def health():
    """Health check endpoint."""
    return {
        'status': 'ok',
        'version': __version__,
        'solver': bool(current_app.config.get('SOLVER_CHECKPOINT')),
    }
