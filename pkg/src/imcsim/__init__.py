"""Interconnect-aware crossbar simulation with WAGONN row remapping."""

__version__ = "0.1.0"
