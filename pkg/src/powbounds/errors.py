"""Exception types shared across the package."""


class InfeasibleParametersError(ValueError):
    """The mining-rate / delay combination violates a bound's feasibility condition."""


class BracketError(RuntimeError):
    """A root or minimum could not be bracketed numerically."""


class SchemaError(ValueError):
    """A configuration file is missing keys or has values of the wrong shape."""


class InsufficientDataError(ValueError):
    """Too few samples to produce a meaningful estimate."""
