"""Error taxonomy shared by the engine, planner, CLI, and service.

Every error carries a stable machine-readable ``code`` so transports
(CLI stderr JSON, HTTP bodies) can forward it without string matching.
"""


class HullplanError(Exception):
    """Base class; ``code`` is the wire identifier."""

    code = "ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# --- constraint tree -------------------------------------------------------

class UnknownId(HullplanError):
    code = "UNKNOWN_ID"


class AlreadyGrouped(HullplanError):
    code = "ALREADY_GROUPED"


class GroupFrozen(HullplanError):
    code = "GROUP_FROZEN"


class CycleError(HullplanError):
    code = "CYCLE"


class NotRoot(HullplanError):
    code = "NOT_ROOT"


class AlreadyExported(HullplanError):
    code = "ALREADY_EXPORTED"


class DegenerateMesh(HullplanError):
    code = "DEGENERATE_MESH"


# --- hull engine -----------------------------------------------------------

class NegativePadding(HullplanError):
    code = "NEGATIVE_PADDING"


class EmptyInput(HullplanError):
    code = "EMPTY_INPUT"


class NonPositiveCell(HullplanError):
    code = "NON_POSITIVE_CELL"


class DegenerateInput(HullplanError):
    code = "DEGENERATE_INPUT"


# --- collision / placement -------------------------------------------------

class NotIntersecting(HullplanError):
    code = "NOT_INTERSECTING"


class Infeasible(HullplanError):
    code = "INFEASIBLE"

    def __init__(self, group_id: str, message: str = ""):
        super().__init__(message or f"no feasible placement for group {group_id!r}")
        self.group_id = group_id


class InvalidSpec(HullplanError):
    code = "INVALID_SPEC"


# --- sequencing ------------------------------------------------------------

class IKFailure(HullplanError):
    code = "IK_FAILURE"

    def __init__(self, object_id: str, message: str = ""):
        super().__init__(message or f"no IK solution for object {object_id!r}")
        self.object_id = object_id


class CyclicPrecedence(HullplanError):
    code = "CYCLIC_PRECEDENCE"


# --- arm -------------------------------------------------------------------

class LimitViolation(HullplanError):
    code = "LIMIT_VIOLATION"


class NoSolution(HullplanError):
    code = "NO_SOLUTION"


class StartInCollision(HullplanError):
    code = "START_IN_COLLISION"


class GoalInCollision(HullplanError):
    code = "GOAL_IN_COLLISION"


class PlanTimeout(HullplanError):
    code = "TIMEOUT"


# --- gateway ---------------------------------------------------------------

class SchemaError(HullplanError):
    code = "SCHEMA"

    def __init__(self, code: str, message: str, path: str = ""):
        super().__init__(message)
        self.code = code
        self.path = path
