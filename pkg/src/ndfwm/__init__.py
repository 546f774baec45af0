"""Nearly degenerate four-wave-mixing spectra of degenerate two-level atoms."""

__version__ = "0.1.0"
