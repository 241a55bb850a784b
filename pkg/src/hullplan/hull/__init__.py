from .backend import COMPILED, get_backend
from .core import HashGrid, Hull, contains, pad_points, reduce
from .groups import forest_hulls, group_hull, visible_hulls
from .quickhull import quickhull

__all__ = [
    "COMPILED",
    "HashGrid",
    "Hull",
    "contains",
    "forest_hulls",
    "get_backend",
    "group_hull",
    "pad_points",
    "quickhull",
    "reduce",
    "visible_hulls",
]
