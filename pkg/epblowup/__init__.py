# python
"""epblowup package"""
__version__ = "0.1"

from epblowup.env import load_env
from epblowup.errors import EpBlowupError
from epblowup.linearization import BlowupVerdict, HorizonPolicy, classify_point
from epblowup.model import InitialPoint, Params

# EPBLOWUP_* defaults come from the repository .env
load_env()

__all__ = ["BlowupVerdict", "EpBlowupError", "HorizonPolicy", "InitialPoint", "Params", "classify_point"]
