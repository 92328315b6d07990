"""Round-function group analysis for key-alternating block ciphers."""

__version__ = "0.3.0"
