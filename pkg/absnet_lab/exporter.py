"""Module for the metrics exporter."""

from logging import getLogger

from prometheus_client import CollectorRegistry, write_to_textfile
from prometheus_client.registry import Collector

logger = getLogger(__name__)


class Exporter:
    """Writes the metrics of registered collectors in the Prometheus text format."""

    def __init__(self, path: str) -> None:
        """Initialize the exporter class.

        Args:
            path: write the metrics to this file.
        """
        self.path = path
        self.registry = CollectorRegistry()

    def register(self, collector: Collector) -> None:
        """Register collector to the exporter."""
        self.registry.register(collector)

    def run(self) -> None:
        """Collect every registered collector and write the text file."""
        write_to_textfile(self.path, self.registry)
        logger.info("Wrote metrics to %s.", self.path)
