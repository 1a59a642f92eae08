"""Combinatorial dimensions and metric entropy on finite instances."""

from vce.errors import BudgetExceeded, PreconditionError, VceError

__version__ = "0.1.0"

__all__ = ["BudgetExceeded", "PreconditionError", "VceError", "__version__"]
