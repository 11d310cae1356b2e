"""
Pruners package for FairForge.

This package contains the pruning score methods. Pruners are
automatically discovered and loaded by the PrunerManager.

AUTO-DISCOVERY:
- Drop any pruner file in this directory
- PrunerManager will find and load it
- Each pruner must inherit from BasePruner and set method_id

pruners/
  ├── __init__.py   # This file
  ├── bpfa.py       # |W| / activation bias
  ├── weig.py       # |W| only
  └── roba.py       # 1 / activation bias
"""
# PrunerManager scans this directory for .py files and loads them

__all__ = []  # Pruners register themselves automatically
