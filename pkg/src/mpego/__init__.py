"""Multi-level evaluation of generative models against a reference population."""

__version__ = "0.1.0"
