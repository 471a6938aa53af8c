"""Profile-driven grid scheduling: matching, subscribed-load admission,
bid-based discovery, three-tier monitoring, and a deterministic simulator."""

__version__ = "0.1.0"
