"""
Utility functions for FairForge.

This module contains shared helpers used throughout the application:
order-preserving parallel map, directory handling and output writing.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def parallel_map(func: Callable[[T], R], items: Iterable[T], max_workers: int = 1) -> List[R]:
    """
    Apply func to every item, possibly on a thread pool.

    Results always come back in input order, so any reduction done by the
    caller afterwards is independent of the worker count.

    Args:
        func: Function to apply
        items: Inputs
        max_workers: Thread count; 1 runs inline

    Returns:
        List of results in input order
    """
    items = list(items)
    if max_workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    logger.debug(f"Mapping {len(items)} items over {max_workers} workers")
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        return list(executor.map(func, items))


def ensure_directory(path: Path):
    """
    Ensure a directory exists, creating it if necessary.

    Args:
        path: Directory path to create
    """
    try:
        path.mkdir(parents=True, exist_ok=True)
        logger.debug(f"Ensured directory exists: {path}")
    except Exception as e:
        logger.error(f"Failed to create directory {path}: {e}")
        raise


def write_output(text: str, path: Optional[Path] = None) -> Optional[Path]:
    """
    Write rendered text to a file, or return None so the caller prints it.

    Args:
        text: Rendered content
        path: Destination file, or None for stdout

    Returns:
        The path written, or None
    """
    if path is None:
        return None
    if path.parent != Path('.'):
        ensure_directory(path.parent)
    path.write_text(text if text.endswith('\n') else text + '\n', encoding='utf-8')
    logger.info(f"Wrote {path}")
    return path
