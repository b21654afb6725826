"""Synchronization analysis for frequency-weighted Kuramoto oscillators on trees."""
from .bounds import BoundsReport, bounds_report, sufficient_kappa
from .dynamics import SimConfig, Trajectory, integrate
from .events import EventConfig, EventLog, simulate_hybrid
from .graph import FrequencyAssignment, TreeGraph, build_tree, path, star

__version__ = "0.1.0"

__all__ = [
    "BoundsReport",
    "bounds_report",
    "sufficient_kappa",
    "SimConfig",
    "Trajectory",
    "integrate",
    "EventConfig",
    "EventLog",
    "simulate_hybrid",
    "FrequencyAssignment",
    "TreeGraph",
    "build_tree",
    "path",
    "star",
]
