"""Discrete-event simulation of secure aggregation protocols."""

from .api import DropoutPlan, route_messages
from .field import GF, PrimeField
from .kernel import SimulationResult
from .network import constant_matrix, empirical_matrix, zero_matrix
from .protocols import PROTOCOLS
from .runner import random_inputs, simulate

__all__ = [
    "DropoutPlan",
    "GF",
    "PROTOCOLS",
    "PrimeField",
    "SimulationResult",
    "constant_matrix",
    "empirical_matrix",
    "random_inputs",
    "route_messages",
    "simulate",
    "zero_matrix",
]
