"""Exception types raised across the package."""


class InvalidLengthError(ValueError):
    pass


class NonstationaryParameterError(ValueError):
    pass


class InvalidCoefficientError(ValueError):
    pass


class InsufficientSampleError(ValueError):
    pass


class InvalidPartitionError(ValueError):
    pass


class InvalidCDFError(ValueError):
    pass


class CapacityError(RuntimeError):
    """Problem size exceeds what an exact or budgeted computation allows."""


class ConfigError(ValueError):
    pass
