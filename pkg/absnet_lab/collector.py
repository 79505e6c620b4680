"""Module for the run and check collectors."""

from logging import getLogger
from typing import List, Sequence

from prometheus_client.metrics_core import GaugeMetricFamily

from .core import BlockingCollector, CheckReport, Payload, Specification, Status
from .trainer import TerminalReason, Trajectory

logger = getLogger(__name__)


class TrainingCollector(BlockingCollector):
    """Collector for a finished training run."""

    def __init__(self, trajectory: Trajectory) -> None:
        """Initialize the collector."""
        super().__init__(trajectory)

    @property
    def specifications(self) -> List[Specification]:
        return [
            Specification(
                name="absnet_training_loss",
                documentation="Population loss at the first and the last step",
                labels=["stage"],
                metric_class=GaugeMetricFamily,
            ),
            Specification(
                name="absnet_training_gradient_norm",
                documentation="Frobenius norm of the gradient at the first and the last step",
                labels=["stage"],
                metric_class=GaugeMetricFamily,
            ),
            Specification(
                name="absnet_training_steps",
                documentation="Number of steps taken",
                metric_class=GaugeMetricFamily,
            ),
            Specification(
                name="absnet_training_step_size",
                documentation="Step size eta",
                metric_class=GaugeMetricFamily,
            ),
            Specification(
                name="absnet_training_terminal",
                documentation="Indicates why the run stopped",
                labels=["reason"],
                metric_class=GaugeMetricFamily,
            ),
        ]

    def fetch(self) -> List[Payload]:
        """Read losses, gradient norms and the terminal reason of the trajectory."""
        trajectory: Trajectory = self.source
        first, last = trajectory.snapshots[0], trajectory.snapshots[-1]
        payloads = []
        for stage, snapshot in (("initial", first), ("final", last)):
            payloads.append(
                Payload(name="absnet_training_loss", labels=[stage], value=snapshot.loss)
            )
            payloads.append(
                Payload(
                    name="absnet_training_gradient_norm",
                    labels=[stage],
                    value=snapshot.grad_norm,
                )
            )
        payloads.append(Payload(name="absnet_training_steps", value=float(last.step)))
        payloads.append(Payload(name="absnet_training_step_size", value=trajectory.eta))
        for reason in TerminalReason:
            payloads.append(
                Payload(
                    name="absnet_training_terminal",
                    labels=[reason.value],
                    value=1.0 if reason == trajectory.terminal else 0.0,
                )
            )
        return payloads


class VerificationCollector(BlockingCollector):
    """Collector for the reports of a verification suite."""

    def __init__(self, reports: Sequence[CheckReport]) -> None:
        """Initialize the collector."""
        super().__init__(list(reports))

    @property
    def specifications(self) -> List[Specification]:
        return [
            Specification(
                name="absnet_check_status",
                documentation="Indicates the status of each check",
                labels=["check", "status"],
                metric_class=GaugeMetricFamily,
            ),
            Specification(
                name="absnet_check_measured",
                documentation="Quantities measured by each check",
                labels=["check", "quantity"],
                metric_class=GaugeMetricFamily,
            ),
        ]

    def fetch(self) -> List[Payload]:
        """One status gauge per check and status, plus every measured quantity."""
        payloads = []
        for report in self.source:
            for status in Status:
                payloads.append(
                    Payload(
                        name="absnet_check_status",
                        labels=[report.name, status.value],
                        value=1.0 if report.status == status else 0.0,
                    )
                )
            for quantity, value in report.measured.items():
                payloads.append(
                    Payload(
                        name="absnet_check_measured",
                        labels=[report.name, quantity],
                        value=float(value),
                    )
                )
        logger.debug("Collected %d check payloads.", len(payloads))
        return payloads
