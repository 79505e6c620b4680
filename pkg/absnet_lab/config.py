"""Module for experiment configuration."""

import math
import os
from logging import getLogger
from typing import Any, Dict, List, NoReturn, Optional

from pydantic import BaseModel, root_validator, validator
from yaml import safe_load

logger = getLogger(__name__)

DEFAULT_CONFIG = os.path.join("./", "config.yaml")

DEFAULT_MC_SAMPLES = 1_000_000
DEFAULT_ETA_CONSTANT = 0.01
DEFAULT_DELTA_MAX_CONSTANT = 2.0
DEFAULT_LOW_LOSS = 1e-3
DEFAULT_DIVERGENCE_FACTOR = 10.0
DEFAULT_KAPPA_FLOOR = 1e-2
DEFAULT_BATCH = 4096
DEFAULT_MAX_STEPS = 1_000_000
DEFAULT_SUBSPACE_SAMPLES = 1_000_000
DEFAULT_VERIFIER_SUBSPACE_SAMPLES = 100_000
DEFAULT_SGD_STEPS = 50_000
DEFAULT_GRAM_SAMPLES = 100_000

LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}

# pylint: disable=E0213


def _fail(msg: str) -> NoReturn:
    logger.error(msg)
    raise ValueError(msg)


class TeacherConfig(BaseModel):
    """Teacher network: explicit neurons or a seeded random draw."""

    kind: str = "random"
    neurons: Optional[List[List[float]]] = None
    delta_min: float = 0.5
    w_min: float = 1.0
    w_max: float = 1.0
    seed: int = 0

    @validator("kind")
    def validate_kind(cls, kind: str) -> str:
        """Validate teacher kind."""
        choices = {"explicit", "random"}
        if kind not in choices:
            _fail(f"Teacher kind must be in {choices}.")
        return kind

    @root_validator(skip_on_failure=True)
    def validate_teacher(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        """Validate the fields each kind needs."""
        if values["kind"] == "explicit" and not values.get("neurons"):
            _fail("An explicit teacher needs a non-empty neurons list.")
        if not 0.0 < values["w_min"] <= values["w_max"]:
            _fail("Teacher norms need 0 < w_min <= w_max.")
        if not 0.0 <= values["delta_min"] <= math.pi / 2:
            _fail("Teacher delta_min must lie in [0, pi/2].")
        return values


class InitConfig(BaseModel):
    """Student initialization."""

    kind: str = "perturbed_teacher"
    seed: int = 0
    samples: int = DEFAULT_SUBSPACE_SAMPLES
    scale: float = 0.01
    neurons: Optional[List[List[float]]] = None
    gram: str = "exact"
    gram_samples: int = DEFAULT_GRAM_SAMPLES
    threads: int = 1
    centered: bool = False

    @validator("kind")
    def validate_kind(cls, kind: str) -> str:
        """Validate initialization kind."""
        choices = {"random", "subspace", "perturbed_teacher", "gaussian", "explicit"}
        if kind not in choices:
            _fail(f"Init kind must be in {choices}.")
        return kind

    @validator("gram")
    def validate_gram(cls, gram: str) -> str:
        """Validate Gram matrix mode."""
        if gram not in {"exact", "sampled"}:
            _fail("Gram mode must be 'exact' or 'sampled'.")
        return gram

    @validator("samples", "gram_samples")
    def validate_samples(cls, samples: int) -> int:
        """Validate sample counts."""
        if samples < 1:
            _fail("Sample counts must be at least 1.")
        return samples

    @validator("threads")
    def validate_threads(cls, threads: int) -> int:
        """Validate worker threads."""
        if threads < 1:
            _fail("Init threads must be at least 1.")
        return threads

    @validator("scale")
    def validate_scale(cls, scale: float) -> float:
        """Validate perturbation scale."""
        if scale < 0.0:
            _fail("Init scale must be nonnegative.")
        return scale

    @root_validator(skip_on_failure=True)
    def validate_explicit(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        """Explicit students need neurons."""
        if values["kind"] == "explicit" and not values.get("neurons"):
            _fail("An explicit init needs a non-empty neurons list.")
        return values


class TrainConfig(BaseModel):
    """Gradient descent or SGD settings."""

    eta: Optional[float] = None
    eta_rule: str = "auto"
    eta_constant: float = DEFAULT_ETA_CONSTANT
    max_steps: int = DEFAULT_MAX_STEPS
    target_loss: float = 1e-8
    mode: str = "GD"
    batch: int = DEFAULT_BATCH
    seed: int = 0
    record_every: int = 0
    lazy_scale: Optional[float] = None
    divergence_factor: float = DEFAULT_DIVERGENCE_FACTOR
    align_tolerance: Optional[float] = None

    @validator("eta_rule")
    def validate_eta_rule(cls, eta_rule: str) -> str:
        """Validate step size rule."""
        if eta_rule not in {"fixed", "auto"}:
            _fail("Step size rule must be 'fixed' or 'auto'.")
        return eta_rule

    @validator("mode")
    def validate_mode(cls, mode: str) -> str:
        """Validate training mode."""
        mode = mode.upper()
        if mode not in {"GD", "SGD"}:
            _fail("Training mode must be GD or SGD (case-insensitive).")
        return mode

    @validator("eta", "eta_constant", "lazy_scale")
    def validate_positive(cls, value: Optional[float]) -> Optional[float]:
        """Validate positive reals."""
        if value is not None and value <= 0.0:
            _fail("Step sizes and scales must be positive.")
        return value

    @validator("align_tolerance")
    def validate_align_tolerance(cls, tolerance: Optional[float]) -> Optional[float]:
        """Validate the alignment tolerance."""
        if tolerance is not None and not 0.0 < tolerance <= math.pi / 2:
            _fail("Alignment tolerance must lie in (0, pi/2].")
        return tolerance

    @validator("target_loss")
    def validate_target(cls, target_loss: float) -> float:
        """Validate target loss."""
        if target_loss < 0.0:
            _fail("Target loss must be nonnegative.")
        return target_loss

    @validator("max_steps", "record_every")
    def validate_counts(cls, value: int) -> int:
        """Validate step counts."""
        if value < 0:
            _fail("Step counts must be nonnegative.")
        return value

    @validator("batch")
    def validate_batch(cls, batch: int) -> int:
        """Validate batch size."""
        if batch < 1:
            _fail("Batch size must be at least 1.")
        return batch

    @validator("divergence_factor")
    def validate_divergence(cls, factor: float) -> float:
        """Validate divergence factor."""
        if factor <= 1.0:
            _fail("Divergence factor must exceed 1.")
        return factor

    @root_validator(skip_on_failure=True)
    def validate_fixed_eta(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        """A fixed rule needs eta."""
        if values["eta_rule"] == "fixed" and values.get("eta") is None:
            _fail("A fixed step size rule needs eta.")
        return values


class VerifierConfig(BaseModel):
    """Thresholds, frozen fitted constants and seeds of the verification suites."""

    seed: int = 0
    mc_samples: int = DEFAULT_MC_SAMPLES
    threads: int = 1
    states: int = 60
    low_loss: float = DEFAULT_LOW_LOSS
    kappa_floor: float = DEFAULT_KAPPA_FLOOR
    delta_max_constant: float = DEFAULT_DELTA_MAX_CONSTANT
    smoothness_constant: float = 50.0
    lipschitz_constant: float = 8.0
    r2_constant: float = 10.0
    weighted_angle_constant: float = 10.0
    test_function_constant: float = 0.05
    regression_factor: float = 2.0
    g_smoothness_pairs: int = 10_000
    subspace_samples: int = DEFAULT_VERIFIER_SUBSPACE_SAMPLES
    regime_steps: int = 2000
    convergence_seeds: int = 10
    convergence_steps: int = DEFAULT_MAX_STEPS
    sgd_seeds: int = 10
    sgd_steps: int = DEFAULT_SGD_STEPS
    lazy_scale: float = 1000.0
    concentration_sizes: List[int] = [1000, 10_000, 100_000, 1_000_000]

    @validator("mc_samples", "states", "g_smoothness_pairs", "subspace_samples", "regime_steps")
    def validate_counts(cls, value: int) -> int:
        """Validate counts."""
        if value < 2:
            _fail("Verifier counts must be at least 2.")
        return value

    @validator("convergence_seeds", "convergence_steps", "sgd_seeds", "sgd_steps")
    def validate_runs(cls, value: int) -> int:
        """Validate seed and step counts of the training runs."""
        if value < 1:
            _fail("Verifier run counts must be at least 1.")
        return value

    @validator("threads")
    def validate_threads(cls, threads: int) -> int:
        """Validate worker threads."""
        if threads < 1:
            _fail("Verifier threads must be at least 1.")
        return threads

    @validator(
        "low_loss",
        "kappa_floor",
        "delta_max_constant",
        "smoothness_constant",
        "lipschitz_constant",
        "r2_constant",
        "weighted_angle_constant",
        "test_function_constant",
        "lazy_scale",
    )
    def validate_positive(cls, value: float) -> float:
        """Validate thresholds and constants."""
        if value <= 0.0:
            _fail("Verifier thresholds and constants must be positive.")
        return value

    @validator("regression_factor")
    def validate_regression(cls, factor: float) -> float:
        """Validate regression factor."""
        if factor < 1.0:
            _fail("Regression factor must be at least 1.")
        return factor

    @validator("concentration_sizes")
    def validate_sizes(cls, sizes: List[int]) -> List[int]:
        """Validate the concentration grid."""
        if len(sizes) < 2 or min(sizes) < 1:
            _fail("Concentration grid needs at least two positive sizes.")
        return sizes


class OutputConfig(BaseModel):
    """Artifact paths; empty paths are skipped."""

    trajectory: str = ""
    network: str = ""
    svg: str = ""
    metrics: str = ""


class ExperimentConfig(BaseModel):
    """Full experiment: dimensions, teacher, init, training, verifier and outputs."""

    d: int = 2
    r: int = 3
    m: int = 20
    level: str = "INFO"
    teacher: TeacherConfig = TeacherConfig()
    init: InitConfig = InitConfig()
    train: TrainConfig = TrainConfig()
    verifier: VerifierConfig = VerifierConfig()
    outputs: OutputConfig = OutputConfig()

    @validator("d", "r", "m")
    def validate_counts(cls, value: int) -> int:
        """Validate dimensions."""
        if value < 1:
            _fail("Dimensions and neuron counts must be at least 1.")
        return value

    @validator("level")
    def validate_level_choice(cls, level: str) -> str:
        """Validate logging level choice."""
        level = level.upper()
        if level not in LEVELS:
            _fail(f"Level must be in {LEVELS} (case-insensitive).")
        return level

    @root_validator(skip_on_failure=True)
    def validate_shapes(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        """Explicit neurons must match d, r and m."""
        d, r, m = values["d"], values["r"], values["m"]
        teacher: TeacherConfig = values["teacher"]
        if teacher.kind == "explicit":
            neurons = teacher.neurons or []
            if len(neurons) != r or any(len(row) != d for row in neurons):
                _fail(f"Explicit teacher must have shape ({r}, {d}).")
        init: InitConfig = values["init"]
        if init.kind == "explicit":
            neurons = init.neurons or []
            if len(neurons) != m or any(len(row) != d for row in neurons):
                _fail(f"Explicit student must have shape ({m}, {d}).")
        return values

    @classmethod
    def load_config(cls, config_file: str = DEFAULT_CONFIG) -> "ExperimentConfig":
        """Load a YAML or JSON configuration file and validate it."""
        if not os.path.exists(config_file):
            msg = f"Configuration file: {config_file} not exists."
            logger.error(msg)
            raise ValueError(msg)
        with open(config_file, "r", encoding="utf-8") as config:
            logger.info("Loaded experiment configuration: %s.", config_file)
            data = safe_load(config) or {}
        if not isinstance(data, dict):
            msg = f"Configuration file: {config_file} must hold a mapping."
            logger.error(msg)
            raise ValueError(msg)
        return cls(**data)
