"""Deadline-driven task offloading and resource allocation across a subnetwork-edge-cloud continuum."""

__version__ = "0.1.0"

from .config import ScenarioConfig  # noqa: E402
from .engine import Assignment, Problem, simulate  # noqa: E402
from .taskgen import Task, generate_tasks  # noqa: E402
from .topology import Topology, build_topology  # noqa: E402

__all__ = ["ScenarioConfig", "Assignment", "Problem", "simulate", "Task", "generate_tasks",
           "Topology", "build_topology", "__version__"]
