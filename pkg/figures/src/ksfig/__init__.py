"""Figure generation for solver artifacts, coupled through files only."""

from .plots import decay_figure, epsconv_figure, profile_figure, save, spectra_figure
from .readers import SchemaError, read_decay_fit, read_table

__version__ = "0.1.0"

__all__ = [
    "SchemaError",
    "decay_figure",
    "epsconv_figure",
    "profile_figure",
    "read_decay_fit",
    "read_table",
    "save",
    "spectra_figure",
    "__version__",
]
