"""Frequency-band adversarial training for domain adaptation at desk scale."""

__version__ = "0.1.0"
