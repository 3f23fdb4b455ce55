"""Exception types shared across the package."""


class NotPsdError(ValueError):
    """Matrix expected to be positive semidefinite is not."""


class NotSpuriousError(ValueError):
    """The candidate point reproduces the ground truth exactly (XX^T = ZZ^T),
    so no residual is left to certify against."""


class DegenerateInputError(ValueError):
    """Input is degenerate beyond repair (e.g. ground truth Z = 0)."""


class SolverError(RuntimeError):
    """Interior-point solve failed in a way that leaves no usable iterate."""
