"""Corridor-world shopping robot: simulator, gated skills, orchestrator and decision policy."""

__version__ = "0.1.0"
