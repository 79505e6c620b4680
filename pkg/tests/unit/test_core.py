import unittest
from dataclasses import fields
from unittest.mock import Mock, patch

import pytest
from prometheus_client.metrics_core import GaugeMetricFamily

from absnet_lab.core import (
    BlockingCollector,
    Check,
    CheckReport,
    Payload,
    Specification,
    Status,
    verdict,
)
from absnet_lab.errors import CoverageError


class TestCheck(unittest.TestCase):
    """Check test class."""

    def test_passing_check(self):
        report = CheckReport(name="demo", status=Status.PASS, measured={"value": 1})
        self.assertIs(Check("demo", Mock(return_value=report)).run(), report)

    def test_coverage_error_is_inconclusive(self):
        func = Mock(side_effect=CoverageError("teacher 2 has no students", teacher=2))
        report = Check("demo", func).run()
        self.assertEqual(report.status, Status.INCONCLUSIVE)
        self.assertEqual(report.measured, {"uncovered_teacher": 2.0})
        self.assertFalse(report.passed)

    def test_other_error_fails(self):
        report = Check("demo", Mock(side_effect=RuntimeError("boom"))).run()
        self.assertEqual(report.status, Status.FAIL)
        self.assertEqual(report.details, "error: boom")

    def test_verdict(self):
        self.assertEqual(verdict(True), Status.PASS)
        self.assertEqual(verdict(False), Status.FAIL)

    def test_to_dict(self):
        report = CheckReport(name="demo", status=Status.FAIL, measured={"ratio": 3})
        self.assertEqual(
            report.to_dict(),
            {"name": "demo", "status": "fail", "measured": {"ratio": 3.0}, "details": ""},
        )


class _DemoCollector(BlockingCollector):
    @property
    def specifications(self):
        return [
            Specification(
                name="abc", documentation="demo", labels=["kind"], metric_class=GaugeMetricFamily
            )
        ]

    def fetch(self):
        return [Payload(name="abc", labels=[kind], value=value) for kind, value in self.source]


class TestBlockingCollector(unittest.TestCase):
    """BlockingCollector test class."""

    def test_cannot_init_collector_base(self):
        """Test cannot initialize the abstract base."""
        with pytest.raises(TypeError):
            BlockingCollector(Mock())  # pylint: disable=E0110

    def test_collect(self):
        metrics = list(_DemoCollector([("a", 1.0), ("b", 2.0)]).collect())
        self.assertEqual(len(metrics), 2)
        self.assertEqual(metrics[0].name, "abc")
        self.assertEqual(metrics[1].samples[0].labels, {"kind": "b"})
        self.assertEqual(metrics[1].samples[0].value, 2.0)

    def test_collect_emits_fetched_payloads_unchanged(self):
        collector = _DemoCollector([])
        payloads = [Payload(name="abc", labels=["c"], value=3.0)]
        with patch.object(collector, "fetch", return_value=payloads) as mock_fetch:
            metrics = list(collector.collect())
        mock_fetch.assert_called_once_with()
        self.assertEqual(metrics[0].samples[0].value, 3.0)

    def test_failure_yields_failed_metrics(self):
        metrics = list(_DemoCollector(None).collect())
        self.assertEqual(len(metrics), 1)
        self.assertEqual(metrics[0].name, "absnet__demo_collector_failed")
        self.assertEqual(metrics[0].samples[0].value, 1.0)

    def test_payload_fields(self):
        self.assertEqual([item.name for item in fields(Payload)], ["name", "value", "labels"])
        self.assertFalse(hasattr(BlockingCollector, "process"))
