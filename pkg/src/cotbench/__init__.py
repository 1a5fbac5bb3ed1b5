"""Deterministic toolkit for compound-task reasoning datasets.

Generates LIS / MPC / ERVC problem instances, renders and validates
chain-of-thought traces at controllable granularity, assembles
reproducible train/eval splits, and provides executable numerics for
the coverage / KL / attention-decay / gradient-alignment analyses.
"""

__version__ = "0.1.0"
