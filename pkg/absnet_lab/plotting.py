"""SVG pictures of neuron trajectories."""

from logging import getLogger

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  pylint: disable=C0413
import numpy as np  # noqa: E402  pylint: disable=C0413

from .engines.net_core import TeacherNetwork  # noqa: E402  pylint: disable=C0413
from .trainer import Trajectory  # noqa: E402  pylint: disable=C0413

logger = getLogger(__name__)


def plot_trajectory_svg(teacher: TeacherNetwork, trajectory: Trajectory, path: str) -> None:
    """Teacher rays in blue, neuron paths in black and end positions in red.

    Inputs with d > 2 are projected on the first two coordinates; d = 1 is drawn on
    the horizontal axis.
    """
    states = [trajectory.initial.neurons]
    states += [s.neurons for s in trajectory.snapshots if s.neurons is not None]
    states.append(trajectory.final.neurons)
    path_array = np.stack(states)
    if path_array.shape[2] == 1:
        path_array = np.concatenate([path_array, np.zeros_like(path_array)], axis=2)
    teachers = teacher.neurons
    if teachers.shape[1] == 1:
        teachers = np.column_stack([teachers, np.zeros_like(teachers)])
    reach = max(float(np.abs(path_array[..., :2]).max()), float(np.abs(teachers[:, :2]).max()))
    reach = 1.2 * reach if reach > 0.0 else 1.0
    figure, axes = plt.subplots(figsize=(6, 6))
    for ray in teachers[:, :2]:
        direction = reach * ray / max(float(np.linalg.norm(ray)), 1e-300)
        axes.plot([-direction[0], direction[0]], [-direction[1], direction[1]], color="blue")
    for neuron in range(path_array.shape[1]):
        axes.plot(path_array[:, neuron, 0], path_array[:, neuron, 1], color="black", lw=0.8)
    axes.scatter(path_array[-1, :, 0], path_array[-1, :, 1], color="red", s=12, zorder=3)
    axes.set_xlim(-reach, reach)
    axes.set_ylim(-reach, reach)
    axes.set_aspect("equal")
    axes.set_title(f"{trajectory.mode}, final loss {trajectory.final_loss:.3g}")
    figure.savefig(path, format="svg")
    plt.close(figure)
    logger.info("Wrote trajectory plot to %s.", path)
