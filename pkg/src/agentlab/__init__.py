"""Agent-based market simulation and trading-agent identification."""

__version__ = "0.1.0"
