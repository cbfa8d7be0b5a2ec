"""Multi-task reinforcement learning with a shared representation."""

__version__ = "0.1.0"
