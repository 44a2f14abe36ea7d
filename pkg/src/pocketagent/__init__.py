"""pocketagent: mobile-agent runtime over a deterministic simulated device."""

__version__ = "0.1.0"
