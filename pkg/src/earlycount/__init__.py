"""Self-stabilizing Byzantine synchronous counting with early-stopping components."""

__version__ = "0.1.0"
