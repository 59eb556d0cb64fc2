"""Experiment orchestration: configs, generation clients, runners, reports, CLI."""
