"""Command-line interface"""

from .bench import main, build_arg_parser

__all__ = ["main", "build_arg_parser"]
