"""Exception hierarchy shared by all simulator modules."""


class BoardroomError(Exception):
    """Base class for every error raised by the simulator."""


# physical objects
class AlreadyFolded(BoardroomError):
    pass


class NotFolded(BoardroomError):
    pass


class OrientationFrozen(BoardroomError):
    """Raised when a marked ballot is rotated again."""


class ChoiceOutOfRange(BoardroomError):
    pass


class CellOutOfRange(BoardroomError):
    pass


class DryStamp(BoardroomError):
    pass


class NotParallelDesign(BoardroomError):
    pass


class ColumnsMismatch(BoardroomError):
    pass


class EmptyBag(BoardroomError):
    pass


class WrongPhase(BoardroomError):
    pass


# protocol
class InvalidConfig(BoardroomError):
    pass


class EmptyTally(BoardroomError):
    pass


class VariantInactive(BoardroomError):
    pass


class InsufficientBallots(BoardroomError):
    pass


# agents
class StrategyPreconditionFailed(BoardroomError):
    pass


# knowledge
class InfeasibleConstraints(BoardroomError):
    """No voter-to-ballot assignment satisfies the observer's constraints."""


# analysis
class BoundTooLarge(BoardroomError):
    pass


class MismatchedScenarios(BoardroomError):
    pass


class UnsupportedFormat(BoardroomError):
    pass


# scenario files
class ParseError(BoardroomError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ValidationError(BoardroomError):
    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")
