"""HGMAE pre-training on heterogeneous enterprise graphs and default-risk
propagation pair classification.

Thin wrapper over the compiled ``_riskprop`` extension; arrays are float64
numpy copies.
"""

from ._riskprop import *  # noqa: F401,F403
from ._riskprop import (
    ConfigError,
    NumericFault,
    ParseError,
    RiskpropError,
)

__all__ = [name for name in dir() if not name.startswith("_")]
