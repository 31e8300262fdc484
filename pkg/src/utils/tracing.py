"""Span recording for suite runs."""

import json
import threading
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from src.config import ENABLE_TRACING, get_logger

logger = get_logger(__name__)


class TracingManager:
    """Records timed traces and spans of suite operations."""

    def __init__(self):
        """Initialize the tracing manager."""
        self.enabled = ENABLE_TRACING
        self.traces: List[Dict[str, Any]] = []
        self._lock = threading.Lock()
        if not self.enabled:
            logger.debug("Tracing is disabled by configuration")

    def _record(self, kind: str, name: str, metadata: Optional[Dict[str, Any]], started: float, error: Optional[str]) -> None:
        entry = {
            "kind": kind,
            "name": name,
            "metadata": metadata or {},
            "seconds": time.perf_counter() - started,
            "error": error,
        }
        with self._lock:
            self.traces.append(entry)
        logger.debug(f"Completed {kind}: {name} in {entry['seconds']:.3f}s")

    @contextmanager
    def _timed(self, kind: str, name: str, metadata: Optional[Dict[str, Any]] = None):
        if not self.enabled:
            yield None
            return
        started = time.perf_counter()
        logger.debug(f"Started {kind}: {name}")
        try:
            yield name
        except Exception as e:
            self._record(kind, name, metadata, started, str(e))
            raise
        self._record(kind, name, metadata, started, None)

    def enable(self) -> None:
        """Enable tracing."""
        self.enabled = True

    def disable(self) -> None:
        """Disable tracing."""
        self.enabled = False

    def trace(self, name: str, metadata: Optional[Dict[str, Any]] = None):
        """Context manager for tracing a top-level operation."""
        return self._timed("trace", name, metadata)

    def span(self, name: str, metadata: Optional[Dict[str, Any]] = None):
        """Context manager for creating a span within a trace."""
        return self._timed("span", name, metadata)

    def get_traces(self) -> List[Dict[str, Any]]:
        """Get all recorded traces."""
        with self._lock:
            return list(self.traces)

    def save(self, path: Union[str, Path]) -> Optional[Path]:
        """Write recorded traces as JSON; nothing is written when tracing is off."""
        if not self.enabled:
            return None
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.get_traces(), indent=2, default=str))
        return path


# Create a singleton instance
tracing = TracingManager()
