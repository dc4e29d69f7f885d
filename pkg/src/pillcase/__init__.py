"""Software twin of a weight-sensing smart pill case."""

__version__ = "0.1.0"
