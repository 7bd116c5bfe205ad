"""Exception hierarchy shared across the planner modules."""


class PlannerError(Exception):
    """Base class for all errors raised by this package."""


# geometry
class GeometryError(PlannerError):
    pass


class TooFewPoints(GeometryError):
    pass


class DuplicatePoint(GeometryError):
    pass


class OutOfPathExtent(GeometryError):
    pass


class NonpositiveDuration(GeometryError):
    pass


# trajectory optimisation
class EmptyCandidateSet(PlannerError):
    pass


class NonuniformSampling(PlannerError):
    pass


# prediction / collision
class EmptyHistory(PlannerError):
    pass


class EmptySet(PlannerError):
    pass


class TimebaseMismatch(PlannerError):
    pass


# PDDL
class PDDLError(PlannerError):
    pass


class PDDLSyntaxError(PDDLError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class UnsupportedFeature(PDDLError):
    def __init__(self, construct):
        self.construct = construct
        super().__init__(f"unsupported PDDL construct: {construct}")


class SemanticError(PDDLError):
    pass


class TypeMismatch(PDDLError):
    pass


class NotApplicable(PDDLError):
    pass


class GoalNotInGraph(PlannerError):
    pass


# streams / world model
class MalformedBaseProblem(PlannerError):
    pass


class SchemaError(PlannerError):
    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ValidationError(PlannerError):
    def __init__(self, invariant, message=""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}" if message else invariant)


class TraceTooShort(PlannerError):
    pass
