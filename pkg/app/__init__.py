import logging

from flask import Flask

from src.logging_config import configure_logging


def create_app(config_object: str = 'config.config.Config'):
    app = Flask(__name__)
    app.config.from_object(config_object)
    app.config['MAX_CONTENT_LENGTH'] = app.config['MAX_INPUT_SIZE']

    # Configure logging
    if not app.debug and not app.testing:
        configure_logging(
            app.config.get('LOG_FILE'),
            app.config.get('LOG_LEVEL', 'INFO'),
            logger=app.logger,
        )
        app.logger.setLevel(logging.INFO)

    # Register routes
    from app.routes.main import main_bp
    from app.routes.api import api_bp

    app.register_blueprint(main_bp)
    app.register_blueprint(api_bp, url_prefix='/api')

    return app
