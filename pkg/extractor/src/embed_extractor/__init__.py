"""Image-side embedding producer for the few-shot evaluation engine."""

__version__ = "0.1.0"
