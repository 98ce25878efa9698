"""Resonance geometry, normal forms and KAM diagnostics for lattice NLS tori."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402

__all__ = ["__version__", "BACKEND"]
