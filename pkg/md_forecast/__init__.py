"""md-forecast: physics-informed MD trajectory forecasting."""

__version__ = "0.1.0"
