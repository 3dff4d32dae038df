"""QKD-keyed frequency hopping: key delivery, hop planning and air-link simulation."""

__version__ = "0.1.0"
