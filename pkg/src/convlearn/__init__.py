"""Learning convolution operators on finite abelian groups by spectral ridge regression."""

__version__ = "0.1.0"

from .group_core import (  # noqa: E402
    GridMismatchError,
    GroupGrid,
    Signal,
    Spectrum,
    circulant_matrix,
    convolve,
    forward_transform,
    inverse_transform,
)
from .hypothesis_space import (  # noqa: E402
    SpectralWeights,
    SupportError,
    exponential_weights,
    sobolev_weights,
    trig_poly_weights,
)
from .sampling import (  # noqa: E402
    Dataset,
    FrequencyLocalized,
    GaussianNoise,
    RelativePeakNoise,
    SpaceLocalized,
    generate_dataset,
)
from .estimator import RateParams, fit_oracle_dense, fit_spectral, grid_search_lambda  # noqa: E402
from .metrics import h_error_sq, operator_error, prediction_error_sq  # noqa: E402

__all__ = [
    "__version__",
    "GridMismatchError", "GroupGrid", "Signal", "Spectrum", "circulant_matrix", "convolve",
    "forward_transform", "inverse_transform",
    "SpectralWeights", "SupportError", "exponential_weights", "sobolev_weights", "trig_poly_weights",
    "Dataset", "FrequencyLocalized", "GaussianNoise", "RelativePeakNoise", "SpaceLocalized",
    "generate_dataset",
    "RateParams", "fit_oracle_dense", "fit_spectral", "grid_search_lambda",
    "h_error_sq", "operator_error", "prediction_error_sq",
]
