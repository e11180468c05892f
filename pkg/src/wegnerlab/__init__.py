"""Finite-section Toeplitz analysis and Wegner-estimate experiments for the
discrete Anderson model with convolution-correlated couplings."""

__version__ = "0.1.0"

from ._accel import NUMBA_ENABLED  # noqa: E402
from .density import DensitySpec, PiecewisePolynomial  # noqa: E402
from .symbol import ConvolutionVector, douglas_howe  # noqa: E402

__all__ = ["__version__", "NUMBA_ENABLED", "ConvolutionVector", "DensitySpec",
           "PiecewisePolynomial", "douglas_howe"]
