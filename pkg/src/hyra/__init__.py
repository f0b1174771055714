"""Bounded reachability for networks of hybrid automata.

A CDCL core over the unrolled discrete skeleton, an interval constraint
propagation theory for the real-valued part, and a guidance layer that steers
the core along discrete runs of the network.
"""

from .hnsolve import Result, SolverConfig, hnsolve
from .modelio import load_bundled, load_model, parse_model

# submodules keep their own names (hyra.encode is a module, not the function)
__all__ = ["Result", "SolverConfig", "hnsolve", "load_bundled", "load_model", "parse_model"]
__version__ = "0.1.0"
