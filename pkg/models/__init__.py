"""
Models package for FairForge.

This package contains all data models used throughout the application.
"""
from .records import PredictionRecord, Cohort, CellCounts, REAL_FACE
from .reports import (
    FairnessReport, ThresholdPlan, ReportBundle, SweepRow, SweepGrid,
    NAIVE_KEYS, AA_KEYS, UR_KEYS, FAIRNESS_KEYS, UTILITY_KEYS, METRIC_GROUPS,
)
from .network import Layer, Model, LAYER_KINDS, PRUNABLE_KINDS
from .pruning import BiasProfile, LayerBias, PruneMask
from .samples import Sample, SampleSet
from .specs import AccuracySpec

__all__ = [
    'PredictionRecord', 'Cohort', 'CellCounts', 'REAL_FACE',
    'FairnessReport', 'ThresholdPlan', 'ReportBundle', 'SweepRow', 'SweepGrid',
    'NAIVE_KEYS', 'AA_KEYS', 'UR_KEYS', 'FAIRNESS_KEYS', 'UTILITY_KEYS', 'METRIC_GROUPS',
    'Layer', 'Model', 'LAYER_KINDS', 'PRUNABLE_KINDS',
    'BiasProfile', 'LayerBias', 'PruneMask',
    'Sample', 'SampleSet',
    'AccuracySpec',
]
