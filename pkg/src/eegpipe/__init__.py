"""SSVEP EEG session classification from per-session auto-encoder weights."""

__version__ = "0.1.0"
