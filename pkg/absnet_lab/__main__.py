"""Train and verify absolute-value teacher-student networks on Gaussian inputs."""

import argparse
import logging
import math
import sys
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from .collector import TrainingCollector, VerificationCollector
from .config import DEFAULT_CONFIG, LEVELS, ExperimentConfig, VerifierConfig
from .engines.gauss_kernels import (
    abs_pair_expectation,
    abs_pair_gradient,
    mismatch_probability,
    sign_cov_block,
)
from .engines.init_solvers import random_init, subspace_init
from .engines.mc_oracle import estimate_vector
from .engines.net_core import (
    Matrix,
    StudentNetwork,
    TeacherNetwork,
    Vector,
    perturbed_teacher,
    random_teacher,
)
from .errors import DomainError
from .exporter import Exporter
from .plotting import plot_trajectory_svg
from .trainer import TerminalReason, save_trajectory_csv, train
from .utils import parse_vector, save_network_json, save_report_json
from .verifier import run_suite, suite_failed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CODES = {
    TerminalReason.TARGET_REACHED: EXIT_OK,
    TerminalReason.STEP_CAP: 2,
    TerminalReason.DIVERGENCE: 3,
}
PLOT_POINTS = 500


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-l", "--level", help="Set logging level.", default=None, type=str)


def parse_command_line(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Command line parser.

    Parse command line arguments and return the arguments.

    Returns:
        args: Command line arguments.
    """
    parser = argparse.ArgumentParser(
        prog=__package__,
        description=__doc__,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    train_parser = commands.add_parser("train", aliases=["run"], help="Train a student network.")
    _add_common(train_parser)
    train_parser.add_argument(
        "-c", "--config", help="Set configuration file.", default=DEFAULT_CONFIG, type=str
    )
    train_parser.add_argument("--out-traj", help="Trajectory CSV file.", default="", type=str)
    train_parser.add_argument("--network", help="Final network JSON file.", default="", type=str)
    train_parser.add_argument("--svg", help="Trajectory plot SVG file.", default="", type=str)
    train_parser.add_argument("--metrics", help="Prometheus textfile.", default="", type=str)
    train_parser.add_argument("--threads", help="Subspace init worker threads.", type=int)
    train_parser.set_defaults(handler=train_command)

    verify_parser = commands.add_parser("verify", help="Run a verification suite.")
    _add_common(verify_parser)
    verify_parser.add_argument("--suite", help="Suite name or 'all'.", default="all", type=str)
    verify_parser.add_argument("--report", help="JSON report file.", default="", type=str)
    verify_parser.add_argument("--seed", help="Override the verifier seed.", type=int)
    verify_parser.add_argument(
        "-c", "--config", help="Experiment file holding a verifier section.", default="", type=str
    )
    verify_parser.add_argument("--metrics", help="Prometheus textfile.", default="", type=str)
    verify_parser.add_argument("--threads", help="Monte Carlo worker threads.", type=int)
    verify_parser.set_defaults(handler=verify_command)

    init_parser = commands.add_parser("init", help="Initialize a student and write it as JSON.")
    _add_common(init_parser)
    init_parser.add_argument("--algo", help="random or subspace.", default="subspace", type=str)
    init_parser.add_argument("--m", help="Number of student neurons.", type=int)
    init_parser.add_argument(
        "-c", "--config", help="Set configuration file.", default=DEFAULT_CONFIG, type=str
    )
    init_parser.add_argument("--out", help="Network JSON file.", required=True, type=str)
    init_parser.add_argument("--seed", help="Override the init seed.", type=int)
    init_parser.add_argument("--threads", help="Subspace init worker threads.", type=int)
    init_parser.set_defaults(handler=init_command)

    kernel_parser = commands.add_parser("kernel", help="Print the closed-form kernels of u, v.")
    _add_common(kernel_parser)
    kernel_parser.add_argument("--u", help="Comma separated vector.", required=True, type=str)
    kernel_parser.add_argument("--v", help="Comma separated vector.", required=True, type=str)
    kernel_parser.add_argument("--mc", help="Monte Carlo samples.", default=0, type=int)
    kernel_parser.add_argument("--seed", help="Monte Carlo seed.", default=0, type=int)
    kernel_parser.add_argument(
        "--threads", help="Monte Carlo worker threads.", default=1, type=int
    )
    kernel_parser.set_defaults(handler=kernel_command)

    return parser.parse_args(argv)


def set_level(level: str) -> None:
    """Set the root logger level."""
    level = level.upper()
    if level not in LEVELS:
        msg = f"Level must be in {LEVELS} (case-insensitive)."
        logger.error(msg)
        raise ValueError(msg)
    logging.getLogger().setLevel(logging.getLevelName(level))


def build_teacher(config: ExperimentConfig) -> TeacherNetwork:
    """Explicit or seeded random teacher."""
    teacher_cfg = config.teacher
    if teacher_cfg.kind == "explicit":
        return TeacherNetwork(np.array(teacher_cfg.neurons, dtype=np.float64))
    return random_teacher(
        config.d,
        config.r,
        teacher_cfg.delta_min,
        teacher_cfg.w_min,
        teacher_cfg.w_max,
        teacher_cfg.seed,
    )


def build_student(config: ExperimentConfig, teacher: TeacherNetwork) -> StudentNetwork:
    """Initial student for the configured init kind."""
    init = config.init
    if init.kind == "explicit":
        return StudentNetwork(np.array(init.neurons, dtype=np.float64))
    if init.kind == "perturbed_teacher":
        return perturbed_teacher(teacher, config.m, init.scale, init.seed)
    if init.kind == "gaussian":
        rng = np.random.default_rng(init.seed)
        return StudentNetwork(rng.standard_normal((config.m, config.d)) / math.sqrt(config.d))
    if init.kind == "random":
        return random_init(teacher, config.m, init.seed, init.gram, init.gram_samples)
    return subspace_init(
        teacher,
        config.m,
        config.r,
        init.samples,
        init.seed,
        init.gram,
        init.gram_samples,
        threads=init.threads,
        centered=init.centered,
    )


def _log_validation(err: ValidationError) -> None:
    for error in err.errors():
        field = ".".join(str(item) for item in error["loc"])
        logger.error("Invalid configuration at %s: %s", field, error["msg"])


def train_command(namespace: argparse.Namespace) -> int:
    """Run one experiment end to end and write its artifacts."""
    config = ExperimentConfig.load_config(config_file=namespace.config)
    set_level(namespace.level or config.level)
    outputs = config.outputs.copy(
        update={
            key: value
            for key, value in (
                ("trajectory", namespace.out_traj),
                ("network", namespace.network),
                ("svg", namespace.svg),
                ("metrics", namespace.metrics),
            )
            if value
        }
    )
    if namespace.threads is not None:
        data = config.dict()
        data["init"]["threads"] = namespace.threads
        config = ExperimentConfig(**data)
    train_cfg = config.train
    if outputs.svg and train_cfg.record_every == 0:
        every = max(1, train_cfg.max_steps // PLOT_POINTS)
        train_cfg = train_cfg.copy(update={"record_every": every})
    teacher = build_teacher(config)
    student = build_student(config, teacher)
    trajectory = train(teacher, student, train_cfg)
    if outputs.trajectory:
        save_trajectory_csv(trajectory, outputs.trajectory)
    if outputs.network:
        save_network_json(trajectory.final, outputs.network)
    if outputs.svg:
        plot_trajectory_svg(teacher, trajectory, outputs.svg)
    if outputs.metrics:
        exporter = Exporter(outputs.metrics)
        exporter.register(TrainingCollector(trajectory))
        exporter.run()
    return EXIT_CODES[trajectory.terminal]


def verify_command(namespace: argparse.Namespace) -> int:
    """Run a suite; exit 1 iff some check failed."""
    set_level(namespace.level or "INFO")
    verifier_cfg = (
        ExperimentConfig.load_config(config_file=namespace.config).verifier
        if namespace.config
        else VerifierConfig()
    )
    update: Dict[str, int] = {}
    if namespace.seed is not None:
        update["seed"] = namespace.seed
    if namespace.threads is not None:
        update["threads"] = namespace.threads
    if update:
        verifier_cfg = VerifierConfig(**{**verifier_cfg.dict(), **update})
    reports = run_suite(namespace.suite, verifier_cfg)
    for report in reports:
        print(f"{report.name:32s} {report.status.value}")
    if namespace.report:
        save_report_json(namespace.suite, reports, namespace.report)
    if namespace.metrics:
        exporter = Exporter(namespace.metrics)
        exporter.register(VerificationCollector(reports))
        exporter.run()
    return EXIT_ERROR if suite_failed(reports) else EXIT_OK


def init_command(namespace: argparse.Namespace) -> int:
    """Initialize a student with the random or subspace algorithm."""
    if namespace.algo not in {"random", "subspace"}:
        msg = f"Init algorithm must be 'random' or 'subspace', got {namespace.algo!r}."
        logger.error(msg)
        raise ValueError(msg)
    config = ExperimentConfig.load_config(config_file=namespace.config)
    set_level(namespace.level or config.level)
    data = config.dict()
    data["init"]["kind"] = namespace.algo
    if namespace.seed is not None:
        data["init"]["seed"] = namespace.seed
    if namespace.m is not None:
        data["m"] = namespace.m
    if namespace.threads is not None:
        data["init"]["threads"] = namespace.threads
    config = ExperimentConfig(**data)
    teacher = build_teacher(config)
    student = build_student(config, teacher)
    save_network_json(student, namespace.out)
    return EXIT_OK


def _kernel_integrand(u: Vector, v: Vector) -> Callable[[Matrix], Matrix]:
    def integrand(inputs: Matrix) -> Matrix:
        pu, pv = inputs @ u, inputs @ v
        signs = np.sign(pu) * np.sign(pv)
        return np.column_stack(
            [
                np.abs(pu) * np.abs(pv),
                (np.sign(pu) * np.abs(pv))[:, None] * inputs,
                (inputs**2).sum(axis=1) * signs,
                (signs < 0.0).astype(np.float64),
            ]
        )

    return integrand


def kernel_command(namespace: argparse.Namespace) -> int:
    """Print K, G, the trace of Scov and the mismatch probability of (u, v)."""
    set_level(namespace.level or "INFO")
    u, v = parse_vector(namespace.u), parse_vector(namespace.v)
    if u.shape != v.shape:
        msg = f"Vectors u and v must have equal dimensions, got {u.shape[0]} and {v.shape[0]}."
        logger.error(msg)
        raise DomainError(msg)
    names: List[str] = ["K"] + [f"G[{index}]" for index in range(u.shape[0])]
    names += ["tr Scov", "P(mismatch)"]
    scov = sign_cov_block(u, v)
    exact = np.concatenate(
        [
            [abs_pair_expectation(u, v)],
            abs_pair_gradient(u, v),
            [float(np.trace(scov)), mismatch_probability(u, v)],
        ]
    )
    if namespace.mc > 1:
        mc = estimate_vector(
            _kernel_integrand(u, v),
            u.shape[0],
            namespace.mc,
            namespace.seed,
            threads=namespace.threads,
        )
        deviations = mc.deviation(exact)
        print(f"{'quantity':12s} {'closed form':>14s} {'monte carlo':>14s} {'|z|':>8s}")
        for name, value, mean, deviation in zip(names, exact, mc.mean, deviations):
            print(f"{name:12s} {value:14.6f} {mean:14.6f} {deviation:8.2f}")
    else:
        print(f"{'quantity':12s} {'closed form':>14s}")
        for name, value in zip(names, exact):
            print(f"{name:12s} {value:14.6f}")
    print(f"{'min eig Scov':12s} {float(np.linalg.eigvalsh(scov).min()):14.6f}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entrypoint of the package."""
    namespace = parse_command_line(argv)
    try:
        return namespace.handler(namespace)
    except ValidationError as err:
        _log_validation(err)
    except (ValueError, OSError, RuntimeError) as err:
        logger.error("%s failed: %s", namespace.command, err)
    return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
