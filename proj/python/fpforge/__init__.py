"""Python bindings for the fpforge C++ core.

Images are float64 numpy arrays shaped (H, W) or (H, W, C) with samples in
[0, 255]. Spectra use the same layout.
"""

from ._fpforge import *  # noqa: F401,F403
from ._fpforge import (
    CalibrationError,
    Error,
    FormatError,
    IoError,
    ValidationError,
)

__version__ = "0.1.0"
