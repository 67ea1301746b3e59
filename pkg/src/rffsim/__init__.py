"""Cross-receiver RF fingerprint identification simulation laboratory."""

__version__ = "0.1.0"

from .waveform import ComplexFrame, PreambleLayout  # noqa: F401
