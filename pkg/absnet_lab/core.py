"""Module for check and collector core codes."""

from abc import abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from logging import getLogger
from typing import Any, Callable, Dict, Iterable, List, Type

from prometheus_client.metrics_core import GaugeMetricFamily, Metric
from prometheus_client.registry import Collector

from .errors import CoverageError

logger = getLogger(__name__)


class Status(str, Enum):
    """Outcome of a check."""

    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass
class CheckReport:
    """Structured result of one numerical check."""

    name: str
    status: Status
    measured: Dict[str, float] = field(default_factory=dict)
    details: str = ""

    @property
    def passed(self) -> bool:
        return self.status == Status.PASS

    def to_dict(self) -> Dict[str, Any]:
        """Serializable form: name, status, measured map and details."""
        return {
            "name": self.name,
            "status": self.status.value,
            "measured": {key: float(value) for key, value in self.measured.items()},
            "details": self.details,
        }


def verdict(passed: bool) -> Status:
    """Map a boolean outcome to a status."""
    return Status.PASS if passed else Status.FAIL


class Check:
    """A named check whose failures never escape into the suite.

    Like a collector's ``collect``, ``run`` catches any error of the wrapped
    function: a coverage failure becomes an inconclusive report and anything else
    a failed report carrying the error text.
    """

    def __init__(self, name: str, func: Callable[[], CheckReport]) -> None:
        """Initialize the check."""
        self.name = name
        self.func = func

    def run(self) -> CheckReport:
        """Run the check and return its report."""
        logger.info("Running check %s.", self.name)
        try:
            report = self.func()
        except CoverageError as err:
            logger.warning("Check %s inconclusive: %s", self.name, err)
            return CheckReport(
                name=self.name,
                status=Status.INCONCLUSIVE,
                measured={"uncovered_teacher": float(err.teacher)},
                details=str(err),
            )
        except Exception as err:  # pylint: disable=W0718
            logger.error(err)
            return CheckReport(name=self.name, status=Status.FAIL, details=f"error: {err}")
        logger.info("Check %s: %s.", self.name, report.status.value)
        return report


@dataclass
class Payload:
    """One labelled sample of a run metric."""

    name: str
    value: Any
    labels: List[str] = field(default_factory=list)


@dataclass
class Specification:
    """Declaration of one run metric family."""

    name: str
    documentation: str
    metric_class: Type[Metric]
    labels: List[str] = field(default_factory=list)


class BlockingCollector(Collector):
    """Base class for collectors reading a finished run.

    The source (a trajectory or a list of check reports) is read synchronously
    every time the registry is collected.
    """

    def __init__(self, source: Any) -> None:
        """Initialize the class."""
        self.source = source
        self._specs = {spec.name: spec for spec in self.specifications}

    @abstractmethod
    def fetch(self) -> List[Payload]:
        """Read the source into payloads.

        Returns:
            One payload per metric sample.
        """

    @property
    @abstractmethod
    def specifications(self) -> List[Specification]:
        """Metric families this collector can emit."""

    @property
    def failed_metrics(self) -> Iterable[Metric]:
        """Single gauge flagging that reading the source raised."""
        name = self.__class__.__name__.lower().replace("collector", "")
        metric = GaugeMetricFamily(
            name=f"absnet_{name}_collector_failed",
            documentation=f"{name} collector failed to read its source",
            labels=["collector"],
        )
        metric.add_metric(labels=[name], value=1)
        yield metric

    def collect(self) -> Iterable[Metric]:
        """Read the source and yield one metric family per payload.

        Yields:
            metrics: the internal metrics
        """
        # One broken collector only turns its own output into failed_metrics.
        try:
            metrics = []
            for payload in self.fetch():
                spec = self._specs[payload.name]
                metric = spec.metric_class(  # type: ignore[call-arg]
                    name=spec.name, labels=spec.labels, documentation=spec.documentation
                )
                metric.add_metric(  # type: ignore[attr-defined]
                    labels=payload.labels, value=payload.value
                )
                metrics.append(metric)
        except Exception as err:  # pylint: disable=W0718
            logger.error(err)
            yield from self.failed_metrics
            return
        yield from metrics
