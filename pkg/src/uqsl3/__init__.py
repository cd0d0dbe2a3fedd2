"""Q-operators, transfer matrices and their functional relations for the quantum loop algebra of sl3.

Everything is built from truncated q-oscillator matrices; each relation is
reported as a relative residual together with a truncation certificate.
"""

from .core import ConvergenceError, Params, SpectralPoint
from .transfer import RelationReport

__all__ = ["ConvergenceError", "Params", "SpectralPoint", "RelationReport"]
__version__ = "0.1.0"
