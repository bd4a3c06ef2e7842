"""Exception types raised across the package."""


class MixFBMError(Exception):
    """Base class for all package errors."""


class UnsupportedHurstError(MixFBMError, ValueError):
    """Hurst index outside the supported set {1/2} U (1/2, 1)."""


class GridMismatchError(MixFBMError, ValueError):
    """Two paths or a path and a kernel family live on different grids."""


class SamplerError(MixFBMError, RuntimeError):
    """Covariance factorization or circulant embedding failed."""


class KernelSolveError(MixFBMError, RuntimeError):
    """The discretized kernel equation could not be solved."""


class ConfigError(MixFBMError, ValueError):
    """Invalid experiment configuration."""
