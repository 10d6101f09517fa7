"""Decentralised micromanagement benchmark and multi-agent RL framework."""

__version__ = "0.1.0"
