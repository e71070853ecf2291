"""Experiment front end: instance generation, batch runs, reports, CLI."""
