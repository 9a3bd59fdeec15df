# In-process metrics for closures, trials and quadrature
# `bootlab <subcommand> --metrics` writes them to stderr in Prometheus text format

import bisect
import logging
import threading
from collections import defaultdict
from contextlib import contextmanager
from time import perf_counter
from typing import Dict, Iterator, List, Optional, Tuple

logger = logging.getLogger("Bootlab.Metrics")

LabelKey = Tuple[Tuple[str, str], ...]


def _key(labels: dict) -> LabelKey:
    return tuple(sorted((k, str(v)) for k, v in labels.items()))


def _render_labels(key: LabelKey, extra: Optional[Tuple[str, str]] = None) -> str:
    pairs = list(key) + ([extra] if extra else [])
    if not pairs:
        return ""
    return "{" + ",".join(f'{k}="{v}"' for k, v in pairs) + "}"


class _Metric:
    kind = "untyped"

    def __init__(self, name: str, description: str):
        self.name = name
        self.description = description
        self._lock = threading.Lock()

    def _header(self) -> List[str]:
        return [f"# HELP {self.name} {self.description}", f"# TYPE {self.name} {self.kind}"]

    def reset(self) -> None:
        raise NotImplementedError

    def to_prometheus(self) -> str:
        raise NotImplementedError


class Counter(_Metric):
    """Monotone counter keyed by label set."""

    kind = "counter"

    def __init__(self, name: str, description: str):
        super().__init__(name, description)
        self._values: Dict[LabelKey, float] = defaultdict(float)

    def inc(self, amount: float = 1.0, **labels) -> None:
        if amount < 0:
            raise ValueError(f"{self.name}: counters only go up (got {amount})")
        with self._lock:
            self._values[_key(labels)] += amount

    def value(self, **labels) -> float:
        with self._lock:
            return self._values.get(_key(labels), 0.0)

    def reset(self) -> None:
        with self._lock:
            self._values.clear()

    def to_prometheus(self) -> str:
        with self._lock:
            items = sorted(self._values.items())
        return "\n".join(self._header() + [f"{self.name}{_render_labels(k)} {v}" for k, v in items])


class Histogram(_Metric):
    """
    Bucketed observations. Each observation lands in the first bucket whose
    upper edge holds it; the export is cumulative. +Inf is always the last edge.
    """

    kind = "histogram"
    DEFAULT_BUCKETS = (0.001, 0.01, 0.1, 1, 10, 100)

    def __init__(self, name: str, description: str, buckets: Optional[tuple] = None):
        super().__init__(name, description)
        edges = sorted(set(buckets or self.DEFAULT_BUCKETS) - {float("inf")})
        self.buckets = tuple(edges) + (float("inf"),)
        self._hits: Dict[LabelKey, List[int]] = {}
        self._sums: Dict[LabelKey, float] = defaultdict(float)

    def observe(self, value: float, **labels) -> None:
        key = _key(labels)
        slot = bisect.bisect_left(self.buckets, value)
        with self._lock:
            hits = self._hits.setdefault(key, [0] * len(self.buckets))
            hits[slot] += 1
            self._sums[key] += value

    def count(self, **labels) -> int:
        with self._lock:
            return sum(self._hits.get(_key(labels), ()))

    @contextmanager
    def time(self, **labels) -> Iterator[None]:
        """Observe the wall time of the with-block in seconds."""
        start = perf_counter()
        try:
            yield
        finally:
            self.observe(perf_counter() - start, **labels)

    def reset(self) -> None:
        with self._lock:
            self._hits.clear()
            self._sums.clear()

    def to_prometheus(self) -> str:
        lines = self._header()
        with self._lock:
            for key in sorted(self._hits):
                running = 0
                for edge, n in zip(self.buckets, self._hits[key]):
                    running += n
                    le = "+Inf" if edge == float("inf") else f"{edge:g}"
                    lines.append(f"{self.name}_bucket{_render_labels(key, ('le', le))} {running}")
                lines.append(f"{self.name}_sum{_render_labels(key)} {self._sums[key]}")
                lines.append(f"{self.name}_count{_render_labels(key)} {running}")
        return "\n".join(lines)


class MetricsRegistry:
    """Named metrics, created on first request."""

    def __init__(self):
        self._metrics: Dict[str, _Metric] = {}
        self._lock = threading.Lock()

    def _register(self, cls, name: str, description: str, **kwargs) -> _Metric:
        with self._lock:
            metric = self._metrics.get(name)
            if metric is None:
                metric = self._metrics[name] = cls(name, description, **kwargs)
            elif not isinstance(metric, cls):
                raise ValueError(f"{name} is already registered as a {metric.kind}")
            return metric

    def counter(self, name: str, description: str) -> Counter:
        return self._register(Counter, name, description)

    def histogram(self, name: str, description: str, buckets: Optional[tuple] = None) -> Histogram:
        return self._register(Histogram, name, description, buckets=buckets)

    def reset(self) -> None:
        with self._lock:
            for metric in self._metrics.values():
                metric.reset()
        logger.debug("Metrics reset")

    def export_prometheus(self) -> str:
        with self._lock:
            metrics = list(self._metrics.values())
        return "\n\n".join(m.to_prometheus() for m in metrics)


registry = MetricsRegistry()

closures_total = registry.counter("bootlab_closures_total", "Closure computations by structure kind")

closure_generations = registry.histogram(
    "bootlab_closure_generations",
    "Synchronous update rounds until the fixpoint",
    buckets=(0, 1, 2, 5, 10, 25, 50, 100, 250, 1000),
)

trials_total = registry.counter("bootlab_trials_total", "Monte Carlo trials executed by operation")

quadrature_seconds = registry.histogram(
    "bootlab_quadrature_seconds",
    "Wall time of one lambda(d, r) quadrature",
    buckets=(0.001, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0),
)

lemma_checks_total = registry.counter(
    "bootlab_lemma_checks_total", "Deterministic structure checks by outcome"
)
