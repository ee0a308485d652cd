"""Wall-clock tracking for pipeline stages and timing reports."""

import logging
import time
from contextlib import contextmanager
from datetime import datetime
from typing import Dict, Iterator, List, Optional

logger = logging.getLogger(__name__)


class StageTimer:
    """Record how long each named stage of a run takes."""

    def __init__(self):
        """Initialize timer with empty session storage."""
        self.records: List[Dict] = []
        self.session_start = datetime.now()

    @contextmanager
    def stage(self, name: str, **context) -> Iterator[Dict]:
        """
        Time the enclosed block as one stage.

        Args:
            name: Stage name, e.g. "encrypt"
            context: Extra fields stored with the record (image size, ...)

        Yields:
            The record, so callers can attach results before it closes
        """
        record: Dict = {"stage": name, "started": datetime.now().isoformat(), **context}
        start = time.perf_counter()
        try:
            yield record
        finally:
            record["elapsed_s"] = time.perf_counter() - start
            self.records.append(record)
            logger.debug(f"Stage {name} took {record['elapsed_s']:.4f}s")

    def elapsed(self, name: str) -> Optional[float]:
        """Duration of the most recent record for a stage."""
        for record in reversed(self.records):
            if record["stage"] == name:
                return record["elapsed_s"]
        return None

    def get_session_summary(self) -> Dict:
        """
        Summarize all recorded stages.

        Returns:
            Dictionary with per-stage counts, totals and means
        """
        stages: Dict[str, Dict] = {}
        for record in self.records:
            entry = stages.setdefault(record["stage"], {"count": 0, "total_s": 0.0})
            entry["count"] += 1
            entry["total_s"] += record["elapsed_s"]

        for entry in stages.values():
            entry["mean_s"] = entry["total_s"] / entry["count"]

        return {
            "session_start": self.session_start.isoformat(),
            "total_stages": len(self.records),
            "total_s": sum(record["elapsed_s"] for record in self.records),
            "stages": stages,
        }
