"""Language-augmented multi-agent policy training in a household economy."""

__version__ = "0.1.0"
