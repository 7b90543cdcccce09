# bernreach/__init__.py
"""
Bounded-time reachability for neural-network controlled systems.

Controllers are abstracted by Bernstein polynomials with certified error
bounds; plant dynamics are propagated as Taylor-model flowpipes.
"""

__version__ = "1.0.0"


class ReachError(RuntimeError):
    """Base error for every bernreach module."""
