"""Outage and ergodic capacity of wireless-powered (SWIPT) amplify-and-forward
relays with correlated multi-antenna relays: Monte Carlo estimators, closed
forms and numerical cross-checks."""

from .channel import CsiMode, SystemParams
from .corrmat import CorrelationModel, EigenSystem, exp_correlation
from .mc import Estimate, StreamSpec
from .specfun import Quadrature, QuadratureError

__version__ = "0.1.0"

__all__ = ["CsiMode", "SystemParams", "CorrelationModel", "EigenSystem", "exp_correlation",
           "Estimate", "StreamSpec", "Quadrature", "QuadratureError", "__version__"]
