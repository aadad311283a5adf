"""helicore: a numerical laboratory for traveling-rotating helical vortices with swirl."""

__version__ = "0.1.0"

from .config import ConfigError, ProblemConfig, parse_config
from .grid import PolarGrid, ScalarField

__all__ = [
    "ConfigError",
    "ProblemConfig",
    "parse_config",
    "PolarGrid",
    "ScalarField",
    "__version__",
]
