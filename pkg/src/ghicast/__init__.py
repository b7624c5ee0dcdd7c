"""Multi-site short-term GHI forecasting toolkit.

A single "global" neural forecaster trained on a handful of sites and
applied to unseen sites without local telemetry, benchmarked against
persistence, linear ARX, gradient-boosted trees, and per-site networks,
with TPE-driven hyperparameter and feature selection and rRMSE/MBE/skill
evaluation.
"""

__version__ = "0.1.0"

from .solargeo import GeoPoint, SolarPosition, ClearSkyValue  # noqa: F401
