import os


class Config:
    # Checkpoint served by the solve API (None disables /api/solve)
    SOLVER_CHECKPOINT = os.environ.get('AGFN_SOLVER_CHECKPOINT')

    # Test-time decoding defaults (hybrid decoding, P = 0.05, N = 100)
    DECODE_MODE = os.environ.get('AGFN_DECODE_MODE') or 'hybrid'
    HYBRID_P = float(os.environ.get('AGFN_HYBRID_P') or 0.05)
    N_ROLLOUTS = int(os.environ.get('AGFN_N_ROLLOUTS') or 100)

    # Security: maximum request body accepted by the solve API
    MAX_INPUT_SIZE = 1024 * 1024  # 1 MB

    # Logging
    LOG_FILE = os.environ.get('AGFN_LOG_FILE')
    LOG_LEVEL = os.environ.get('AGFN_LOG_LEVEL') or 'INFO'


class TestingConfig(Config):
    TESTING = True
    SOLVER_CHECKPOINT = None
    LOG_FILE = None
