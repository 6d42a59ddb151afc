"""Geometry-aware meta-learning for joint RIS phase-shift and precoder tuning."""

__version__ = "0.1.0"

from .algorithm import (AveragedRuns, HyperParams, RunTrace, Scenario,
                        SystemParams, average_runs, pga_baseline, run)
from .channel import ChannelSet, Geometry, RicianParams, generate
from .metrics import SystemState, effective_channel, loss, sinr, wsr

__all__ = [
    "AveragedRuns", "ChannelSet", "Geometry", "HyperParams", "RicianParams",
    "RunTrace", "Scenario", "SystemParams", "SystemState", "average_runs",
    "effective_channel", "generate", "loss", "pga_baseline", "run", "sinr", "wsr",
]
