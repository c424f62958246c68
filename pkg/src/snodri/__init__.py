"""SnoDRI: a composite snow-drought index built from basin-averaged monthly series.

Precipitation-based SPI at several timescales, a wet-bulb snow fraction and
forest-selected forcing variables are compressed by a small autoencoder; each
input is weighted by its mutual information with the bottleneck, and the
standardized weighted sum is the index.
"""

from ._backend import BACKEND
from .errors import ConfigError, DataError, NumericError, SnodriError, StageError

__version__ = "0.1.0"

__all__ = ["BACKEND", "ConfigError", "DataError", "NumericError", "SnodriError", "StageError", "__version__"]
