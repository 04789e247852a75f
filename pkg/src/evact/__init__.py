"""evact: event-camera activity recognition with calibrated uncertainty.

The toolkit turns raw event streams into dense representations (recency
frames, voxel grids, tracked blobs), classifies activity clips with a
linear softmax head over pluggable per-frame features, and quantifies
predictive uncertainty via last-layer Laplace approximation, deep
ensembles and Laplace ensembles, with full calibration reporting.
"""

from . import (bayesian, blobs, calibration, classifier, events, features,
               representations, synthgen)

__version__ = "0.1.0"

__all__ = [
    "bayesian",
    "blobs",
    "calibration",
    "classifier",
    "events",
    "features",
    "representations",
    "synthgen",
    "__version__",
]
