"""Multi-horizon AQI forecasting benchmark with physics-guided neural models."""

__version__ = "0.1.0"
