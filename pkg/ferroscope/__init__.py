"""Ferroscope: one-class steel surface anomaly detection pipeline."""

__version__ = "0.1.0"
