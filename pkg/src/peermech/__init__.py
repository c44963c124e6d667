"""Exact computation and verification of allocation mechanisms with peer information.

Agents are indexed from 0. All probabilities, values and weights are
:class:`fractions.Fraction` instances.
"""

from peermech.env import Environment, SupportEntry, WeightVector, load_environment, load_weights
from peermech.errors import GuardExceeded, InvalidEnvironment, PeerMechError
from peermech.fgraph import FeasibilityGraph, VertexId, build_graph
from peermech.mech import Mechanism

__all__ = [
    "Environment",
    "FeasibilityGraph",
    "GuardExceeded",
    "InvalidEnvironment",
    "Mechanism",
    "PeerMechError",
    "SupportEntry",
    "VertexId",
    "WeightVector",
    "build_graph",
    "load_environment",
    "load_weights",
]

__version__ = "0.1.0"
