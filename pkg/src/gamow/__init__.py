"""Resonances, Gamow vectors and irreversibility in the Friedrichs model."""
from .errors import GamowError
from .friedrichs import FormFactor, FriedrichsModel, find_pole

__all__ = ["GamowError", "FormFactor", "FriedrichsModel", "find_pole"]
__version__ = "0.1.0"
