"""Exception types raised across the package."""


class MadoaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(MadoaError):
    """Invalid build parameters, config files, or CLI arguments."""


class InfeasibleError(MadoaError):
    """A layout request cannot be satisfied (e.g. more antennas than candidates)."""


class SingularGeometryError(MadoaError):
    """Array geometry is degenerate for the requested bound (collinear or coincident)."""


class InvalidDirectionError(MadoaError):
    """Direction-cosine pair does not correspond to a physical direction."""


class SubspaceError(MadoaError):
    """Requested subspace split is impossible (source count >= array size)."""


class NonHermitianError(MadoaError):
    """Matrix violates the Hermitian contract of an eigendecomposition."""
