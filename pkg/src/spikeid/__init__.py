"""Event-based radioisotope identification pipeline.

Modules: spectra (synthetic gamma spectra), preprocess (smoothing, PCA),
encode (analog-to-event and rate coding), ann (conv classifier + backprop),
snn (ANN-to-SNN conversion, LIF simulation, event-cost accounting),
pipeline/cli (orchestration).
"""

__version__ = "0.1.0"

from .errors import ConversionError, NumericError, SpikeIdError, ValidationError

__all__ = ["ConversionError", "NumericError", "SpikeIdError", "ValidationError",
           "__version__"]
