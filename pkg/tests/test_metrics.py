"""
Metrics Tests
Counters, histograms and the Prometheus export.
"""

import pytest

from bootlab.services.metrics import Counter, Histogram, MetricsRegistry, closures_total, registry


class TestCounter:
    def test_labels_are_independent(self):
        c = Counter("c_total", "test")
        c.inc(kind="closure")
        c.inc(2, kind="closure")
        c.inc(kind="naive")
        assert c.value(kind="closure") == 3
        assert c.value(kind="naive") == 1
        assert c.value(kind="async") == 0

    def test_never_decreases(self):
        with pytest.raises(ValueError):
            Counter("c_total", "test").inc(-1)

    def test_prometheus(self):
        c = Counter("c_total", "Things")
        c.inc(operation="pc", kind="x")
        text = c.to_prometheus()
        assert "# TYPE c_total counter" in text
        assert 'c_total{kind="x",operation="pc"} 1.0' in text

    def test_reset(self):
        c = Counter("c_total", "test")
        c.inc()
        c.reset()
        assert c.value() == 0


class TestHistogram:
    """Bucketed observations."""

    def test_cumulative_buckets(self):
        h = Histogram("h", "test", buckets=(1, 10))
        for v in (0.5, 5, 50):
            h.observe(v)
        text = h.to_prometheus()
        assert 'h_bucket{le="1"} 1' in text
        assert 'h_bucket{le="10"} 2' in text
        assert 'h_bucket{le="+Inf"} 3' in text
        assert "h_count 3" in text
        assert "h_sum 55.5" in text

    def test_timer(self):
        h = Histogram("h", "test")
        with h.time(operation="quad"):
            pass
        assert h.count(operation="quad") == 1
        assert h.count() == 0


class TestRegistry:
    def test_same_name_same_metric(self):
        reg = MetricsRegistry()
        assert reg.counter("a", "x") is reg.counter("a", "y")

    def test_export_and_reset(self):
        closures_total.inc(kind="closure")
        assert "bootlab_closures_total" in registry.export_prometheus()
        registry.reset()
        assert closures_total.value(kind="closure") == 0
