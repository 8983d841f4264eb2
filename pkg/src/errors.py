"""Exception hierarchy shared by all AGFN modules"""


class AGFNError(Exception):
    """Base class for all solver errors"""
    pass


class ConfigError(AGFNError):
    """Exception raised when a configuration is invalid"""
    pass


class InstanceError(AGFNError):
    """Exception raised when an instance violates its invariants"""
    pass


class TrajectoryError(AGFNError):
    """Exception raised when a route breaks a feasibility invariant"""
    pass


class CheckpointError(AGFNError):
    """Exception raised when a checkpoint cannot be read or does not match"""
    pass


class TrainingError(AGFNError):
    """Exception raised when training diverges"""
    pass
