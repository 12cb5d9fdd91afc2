"""Experiment orchestration: data streams, base predictor, runner and CLI."""
