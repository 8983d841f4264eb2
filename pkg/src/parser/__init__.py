"""Parsers for instance files, configuration files and reference data"""

from .instance_parser import InstanceParser, InstanceParseError, InstanceWriter
from .config_loader import ConfigLoader, ConfigLoadError
from .reference_loader import ReferenceLoader, ReferenceDataError

__all__ = [
    "InstanceParser",
    "InstanceParseError",
    "InstanceWriter",
    "ConfigLoader",
    "ConfigLoadError",
    "ReferenceLoader",
    "ReferenceDataError",
]
