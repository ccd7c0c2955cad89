"""Prediction-market calibration engine."""
