"""
Core package for FairForge.

This package contains the engine: configuration, errors, record
ingestion, fairness metrics, threshold search, the inference engine,
file formats, pruning with its pluggable score methods, synthetic
cohorts and report rendering.

Submodules are imported where they are used; only the pieces without
heavy dependencies are re-exported here.
"""
from .config import Config
from .errors import (
    FairForgeError, RecordValidationError, DegenerateCohort, DegenerateUtility,
    ThresholdPlanError, ShapeMismatchError, ModelFormatError, PruningError, SpecError,
)
from .base_pruner import BasePruner
from .pruner_manager import PrunerManager, get_pruner_manager
from .utils import parallel_map

__all__ = [
    'Config',
    'FairForgeError', 'RecordValidationError', 'DegenerateCohort', 'DegenerateUtility',
    'ThresholdPlanError', 'ShapeMismatchError', 'ModelFormatError', 'PruningError', 'SpecError',
    'BasePruner', 'PrunerManager', 'get_pruner_manager', 'parallel_map',
]
