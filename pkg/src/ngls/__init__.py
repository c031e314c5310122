"""Non-autonomous generalised Lüroth series (NGLS) toolkit."""

__version__ = "0.1.0"
