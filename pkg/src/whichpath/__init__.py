"""Which-path detection, branching and no-signaling on a dense state-vector simulator."""

__version__ = "0.1.0"
