"""
Pruner manager for FairForge.

This module handles auto-discovery and management of all pruning score
methods. It finds and loads every pruner class from the pruners/
directory without manual registration.

Drop a BasePruner subclass into /pruners/ and it is available as
--method <method_id>.
"""
import importlib
import inspect
import logging
from typing import Dict, List, Optional
from pathlib import Path

from .base_pruner import BasePruner
from .errors import PruningError

logger = logging.getLogger(__name__)


class PrunerManager:
    """
    Auto-discovers and manages all pruning methods.

    Features:
    - Auto-discovery of pruners from /pruners/ folder
    - Duplicate method ID detection
    - Pruner lookup by ID (case-insensitive)
    - Pruner listing and metadata
    """

    def __init__(self):
        """Initialize the pruner manager and auto-discover pruners."""
        self.pruners: Dict[str, BasePruner] = {}
        self._auto_discover_pruners()
        logger.debug(f"Loaded {len(self.pruners)} pruners: {list(self.pruners.keys())}")

    def _auto_discover_pruners(self):
        """
        Automatically find and load all pruner classes.

        Scans the pruners/ directory for Python files, imports them,
        and looks for classes that inherit from BasePruner.
        """
        pruners_dir = Path(__file__).parent.parent / 'pruners'

        if not pruners_dir.exists():
            logger.warning(f"Pruners directory not found: {pruners_dir}")
            return

        for pruner_file in sorted(pruners_dir.glob('*.py')):
            if pruner_file.name == '__init__.py':
                continue

            try:
                module = importlib.import_module(f"pruners.{pruner_file.stem}")

                for name, obj in inspect.getmembers(module, inspect.isclass):
                    if (issubclass(obj, BasePruner) and
                        obj is not BasePruner and
                        not inspect.isabstract(obj) and
                        obj.method_id):

                        if obj.method_id in self.pruners:
                            if not isinstance(self.pruners[obj.method_id], obj):
                                logger.warning(f"Duplicate method ID '{obj.method_id}' found in {pruner_file.name}. Skipping.")
                            continue

                        try:
                            self.pruners[obj.method_id] = obj()
                            logger.debug(f"Loaded pruner: {obj.method_name} ({obj.method_id})")
                        except Exception as e:
                            logger.error(f"Failed to initialize pruner {name} from {pruner_file.name}: {e}")

            except Exception as e:
                logger.error(f"Failed to import pruner module {pruner_file.name}: {e}")

    def get_pruner(self, method_id: str) -> BasePruner:
        """
        Get a pruner instance by ID.

        Args:
            method_id: Method identifier, e.g. "bpfa" (case-insensitive)

        Returns:
            BasePruner instance

        Raises:
            PruningError: If the method is not found
        """
        key = method_id.lower()
        if key not in self.pruners:
            available = ', '.join(self.pruners.keys())
            raise PruningError(f"Pruning method '{method_id}' not found. Available methods: {available}")
        return self.pruners[key]

    def list_methods(self) -> List[str]:
        """List all available method IDs."""
        return list(self.pruners.keys())

    def get_pruner_info(self, method_id: str) -> Optional[Dict]:
        """
        Get detailed information about a pruner.

        Returns:
            Dictionary with pruner information or None if not found
        """
        pruner = self.pruners.get(method_id.lower())
        if pruner is None:
            return None
        return {
            'id': pruner.method_id,
            'name': pruner.method_name,
            'description': pruner.description,
            'needs_calibration': pruner.needs_calibration,
            'class': pruner.__class__.__name__,
        }

    def __len__(self) -> int:
        return len(self.pruners)

    def __contains__(self, method_id: str) -> bool:
        return method_id.lower() in self.pruners

    def __iter__(self):
        return iter(self.pruners.values())


_manager: Optional[PrunerManager] = None


def get_pruner_manager() -> PrunerManager:
    """Shared manager instance, discovered on first use."""
    global _manager
    if _manager is None:
        _manager = PrunerManager()
    return _manager
