"""Exception hierarchy.

Errors are grouped by pipeline stage so the command line driver can map them
to exit codes: input problems (2), statistical problems (3).
"""


class CdrDagError(Exception):
    """Base class for every error raised by this package."""


class InputError(CdrDagError):
    """Bad user-supplied data or arguments."""


class StatisticalError(CdrDagError):
    """A learning or inference step could not be carried out."""


class CycleDetected(StatisticalError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"directed cycle through nodes {self.cycle}")


class UnknownNode(InputError):
    pass


class OverlappingArguments(InputError):
    pass


class InvalidDof(StatisticalError):
    pass


class InsufficientVariables(InputError):
    pass


class InconsistentSepSets(StatisticalError):
    pass


class NoConsistentExtension(StatisticalError):
    pass


class ZeroProbabilityEvidence(StatisticalError):
    pass


class InvalidLevel(InputError):
    pass


class InvalidRating(InputError):
    pass


class UnknownProfile(InputError):
    pass


class MalformedCsv(InputError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnmappedValue(InputError):
    def __init__(self, column, value, line):
        self.column = column
        self.value = value
        self.line = line
        super().__init__(f"line {line}: value {value!r} in column {column!r} has no mapping")


class NodeSetMismatch(InputError):
    pass
