"""Frequency discrimination and resolution from binary NV-center readout records."""

__version__ = "0.1.0"
