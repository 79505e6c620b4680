import pytest

from absnet_lab.config import VerifierConfig


@pytest.fixture(scope="session")
def seed():
    return 0


@pytest.fixture(scope="session")
def verifier_config(seed):
    """Verifier settings at the acceptance sample sizes."""
    return VerifierConfig(seed=seed, threads=2)


@pytest.fixture(scope="session")
def experiment(tmp_path_factory, seed):
    """Perturbed-teacher experiment at d = 2, r = 3, m = 3 written to a YAML file."""
    path = tmp_path_factory.mktemp("experiment") / "config.yaml"
    path.write_text(
        "\n".join(
            [
                "d: 2",
                "r: 3",
                "m: 3",
                "teacher: {kind: random, delta_min: 0.5, w_min: 1.0, w_max: 1.0, "
                f"seed: {seed}}}",
                f"init: {{kind: perturbed_teacher, scale: 0.01, seed: {seed}}}",
                "train: {eta: 0.05, eta_rule: fixed, target_loss: 1.0e-8, max_steps: 20000}",
            ]
        ),
        encoding="utf-8",
    )
    return str(path)


@pytest.fixture(scope="session")
def aligned_experiment(tmp_path_factory, seed):
    """Twenty students near a d = 2, r = 3 teacher, trained until loss and alignment hold."""
    path = tmp_path_factory.mktemp("aligned") / "config.yaml"
    path.write_text(
        "\n".join(
            [
                "d: 2",
                "r: 3",
                "m: 20",
                "teacher: {kind: random, delta_min: 0.5, w_min: 1.0, w_max: 1.0, "
                f"seed: {seed}}}",
                f"init: {{kind: perturbed_teacher, scale: 0.0003, seed: {seed}}}",
                "train: {eta_rule: auto, eta_constant: 0.01, target_loss: 1.0e-8, "
                "align_tolerance: 1.0e-3, max_steps: 1000000, record_every: 1000}",
            ]
        ),
        encoding="utf-8",
    )
    return str(path)
