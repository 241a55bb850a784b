"""Hierarchical assembly-constraint engine and planner.

Authoring builds nested relative/absolute constraint groups over scene
objects; the engine renders groups as padded convex hulls; the planning
pipeline resolves group poses, settles contacts, orders the work, and
emits collision-free arm trajectories.
"""

from .errors import HullplanError
from .scene import ConstraintTree, GroupNode, SceneObject
from .transforms import Pose

__version__ = "0.1.0"

__all__ = [
    "ConstraintTree",
    "GroupNode",
    "HullplanError",
    "Pose",
    "SceneObject",
    "__version__",
]
