"""Learning quantum states and unitaries of bounded gate complexity.

Simulation library and experiment harness: sparse-active-set pure-state
simulation, classical-shadow estimation with median-of-means, candidate-net
enumeration and hypothesis selection, junta identification, Choi-state
process learning, the Heisenberg-scaling bootstrap, and exact learners from
classically described data.
"""

from . import harness, junta, learners, metrics, nets, qcore, shadows
from .errors import BgcError

__all__ = [
    "BgcError",
    "harness",
    "junta",
    "learners",
    "metrics",
    "nets",
    "qcore",
    "shadows",
]

__version__ = "0.1.0"
