"""Direct data-driven synthesis of LPV state-feedback controllers."""
__version__ = "0.1.0"
