"""
Performance metrics module
"""
import time
from typing import Any, Dict

import psutil
from prometheus_client import CollectorRegistry, Counter, Histogram, Info, generate_latest

from .config import settings
from .logging_config import get_logger

logger = get_logger(__name__)

REGISTRY = CollectorRegistry()

CHECK_COUNT = Counter(
    'msalg_checks_total',
    'Total checks run',
    ['check', 'outcome'],
    registry=REGISTRY
)

CHECK_DURATION = Histogram(
    'msalg_check_duration_seconds',
    'Check duration in seconds',
    ['check'],
    registry=REGISTRY
)

CONSTRUCTION_COUNT = Counter(
    'msalg_constructions_total',
    'Total limit constructions',
    ['kind'],
    registry=REGISTRY
)

ISO_SEARCH_NODES = Histogram(
    'msalg_iso_search_nodes',
    'Backtracking nodes visited per isomorphism search',
    buckets=(1, 10, 100, 1000, 10000, 100000, 1000000),
    registry=REGISTRY
)

APP_INFO = Info(
    'msalg_app',
    'Application information',
    registry=REGISTRY
)

APP_INFO.info({
    'name': settings.APP_NAME,
    'version': settings.APP_VERSION,
})


class MetricsCollector:
    """Metrics collector"""

    def __init__(self):
        self.start_time = time.time()
        self._check_seconds: Dict[str, float] = {}
        self._constructions: Dict[str, int] = {}
        self._iso_nodes = 0

    def record_check(self, check: str, outcome: str, duration: float) -> None:
        """Record one finished check"""
        if not settings.ENABLE_METRICS:
            return
        CHECK_COUNT.labels(check=check, outcome=outcome).inc()
        CHECK_DURATION.labels(check=check).observe(duration)
        self._check_seconds[check] = self._check_seconds.get(check, 0.0) + duration

    def record_construction(self, kind: str) -> None:
        """Record a limit/product construction"""
        if not settings.ENABLE_METRICS:
            return
        CONSTRUCTION_COUNT.labels(kind=kind).inc()
        self._constructions[kind] = self._constructions.get(kind, 0) + 1

    def record_iso_search(self, nodes: int) -> None:
        """Record the size of an isomorphism search"""
        if not settings.ENABLE_METRICS:
            return
        ISO_SEARCH_NODES.observe(nodes)
        self._iso_nodes += nodes

    def timings(self) -> Dict[str, Any]:
        """Run-dependent numbers for the report's timings block"""
        try:
            rss = psutil.Process().memory_info().rss
        except Exception as e:
            logger.error(f"Failed to read process memory: {e}")
            rss = None
        return {
            "wall_seconds": round(time.time() - self.start_time, 6),
            "check_seconds": {k: round(v, 6) for k, v in sorted(self._check_seconds.items())},
            "constructions": dict(sorted(self._constructions.items())),
            "iso_search_nodes": self._iso_nodes,
            "rss_bytes": rss,
        }

    def exposition(self) -> bytes:
        """Prometheus text exposition of all metrics"""
        return generate_latest(REGISTRY)


# Global metrics collector
metrics_collector = MetricsCollector()
