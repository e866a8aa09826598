"""Multi-level gait analysis under occlusal constraint."""

__version__ = "0.1.0"
