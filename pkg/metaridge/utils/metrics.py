"""
Metrics for experiment runs, estimator fits and the HTTP service.
"""

import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import DefaultDict, Dict, Optional

try:
    from prometheus_client import CollectorRegistry, Counter, Histogram, Info, generate_latest
    PROMETHEUS_AVAILABLE = True
except ImportError:
    PROMETHEUS_AVAILABLE = False

from config.settings import settings


@dataclass
class FitMetrics:
    """Running totals for one estimator."""
    fits: int = 0
    failures: int = 0
    total_seconds: float = 0.0
    total_iterations: int = 0
    durations: deque = field(default_factory=lambda: deque(maxlen=1000))


class MetricsManager:
    """Manager for application metrics."""

    def __init__(self, enabled: Optional[bool] = None):
        self.start_time = time.time()
        self.enabled = PROMETHEUS_AVAILABLE and (settings.ENABLE_METRICS if enabled is None else enabled)
        self.fit_metrics: DefaultDict[str, FitMetrics] = defaultdict(FitMetrics)
        self.run_counts: DefaultDict[str, int] = defaultdict(int)
        self.request_count = 0
        self.request_errors = 0
        # harness runs record from worker threads
        self._lock = threading.Lock()

        if self.enabled:
            self._init_prometheus_metrics()

    def _init_prometheus_metrics(self):
        """Initialize Prometheus metrics on a private registry."""
        self.registry = CollectorRegistry()
        self.run_counter = Counter(
            'metaridge_runs_total',
            'Experiment runs by estimator and outcome',
            ['estimator', 'status'],
            registry=self.registry,
        )
        self.fit_duration = Histogram(
            'metaridge_fit_duration_seconds',
            'Hyper-covariance fit duration in seconds',
            ['estimator'],
            registry=self.registry,
        )
        self.fit_iterations = Histogram(
            'metaridge_fit_iterations',
            'Descent iterations per fit',
            ['estimator'],
            buckets=(1, 10, 50, 100, 250, 500, 1000, 2000, 5000),
            registry=self.registry,
        )
        self.request_counter = Counter(
            'metaridge_api_requests_total',
            'Total number of API requests',
            ['method', 'endpoint', 'status_code'],
            registry=self.registry,
        )
        self.request_duration = Histogram(
            'metaridge_api_request_duration_seconds',
            'Request duration in seconds',
            ['method', 'endpoint'],
            registry=self.registry,
        )
        self.cache_operations = Counter(
            'metaridge_cache_operations_total',
            'Total cache operations',
            ['operation', 'result'],
            registry=self.registry,
        )
        self.app_info = Info('metaridge_app', 'Application information', registry=self.registry)
        self.app_info.info({'version': settings.API_VERSION, 'threads': str(settings.THREADS)})

    def record_fit(self, estimator: str, seconds: float, iterations: int = 0, success: bool = True):
        """Record one estimator fit."""
        with self._lock:
            metric = self.fit_metrics[estimator]
            if success:
                metric.fits += 1
                metric.total_seconds += seconds
                metric.total_iterations += iterations
                metric.durations.append(seconds)
            else:
                metric.failures += 1

        if self.enabled and success:
            self.fit_duration.labels(estimator=estimator).observe(seconds)
            self.fit_iterations.labels(estimator=estimator).observe(iterations)

    def record_run(self, estimator: str, status: str):
        with self._lock:
            self.run_counts[f"{estimator}:{status}"] += 1
        if self.enabled:
            self.run_counter.labels(estimator=estimator, status=status).inc()

    def record_request(self, method: str, endpoint: str, status_code: int, response_time: float):
        """Record request metrics."""
        with self._lock:
            self.request_count += 1
            if status_code >= 400:
                self.request_errors += 1
        if self.enabled:
            self.request_counter.labels(method=method, endpoint=endpoint, status_code=str(status_code)).inc()
            self.request_duration.labels(method=method, endpoint=endpoint).observe(response_time)

    def record_cache_operation(self, operation: str, result: str):
        if self.enabled:
            self.cache_operations.labels(operation=operation, result=result).inc()

    def export(self) -> bytes:
        """Prometheus text exposition of the registry."""
        if not self.enabled:
            return b""
        return generate_latest(self.registry)

    def get_summary_stats(self) -> Dict:
        """Get summary statistics."""
        fits = {}
        with self._lock:
            snapshot = list(self.fit_metrics.items())
            runs = dict(self.run_counts)
        for estimator, metric in snapshot:
            mean_seconds = metric.total_seconds / metric.fits if metric.fits else 0.0
            mean_iterations = metric.total_iterations / metric.fits if metric.fits else 0.0
            fits[estimator] = {
                "fits": metric.fits,
                "failures": metric.failures,
                "avg_fit_ms": round(mean_seconds * 1000, 2),
                "avg_iterations": round(mean_iterations, 1),
            }
        return {
            "uptime_seconds": int(time.time() - self.start_time),
            "total_requests": self.request_count,
            "error_requests": self.request_errors,
            "runs": runs,
            "fits": fits,
        }


# Global metrics manager instance
metrics_manager = MetricsManager()
