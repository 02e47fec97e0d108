"""packetlab: a deterministic discrete-event network simulator with classic protocol labs."""

from .kernel import Component, Kernel, RunSummary

__all__ = ["Component", "Kernel", "RunSummary"]
__version__ = "0.1.0"
