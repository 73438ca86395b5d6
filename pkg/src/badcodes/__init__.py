"""Density evolution, bounds and code design for erasure relay and interference channels."""

__version__ = "0.1.0"

from .ensemble import INTERFERENCE_ENSEMBLE, RELAY_ENSEMBLE, EdgeDistribution, design_rate  # noqa: E402
from .rates import InterferenceParams  # noqa: E402
from .relay import RelayParams  # noqa: E402

__all__ = [
    "EdgeDistribution",
    "INTERFERENCE_ENSEMBLE",
    "InterferenceParams",
    "RELAY_ENSEMBLE",
    "RelayParams",
    "design_rate",
    "__version__",
]
