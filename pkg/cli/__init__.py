"""
CLI package for FairForge.

This package contains the command-line interface built with Typer for
the commands and Rich for the tables printed alongside them.
"""
from .app import app, main

__all__ = ['app', 'main']
