"""
Error hierarchy for tempodag

Every error exposes a stable ``code`` (its class name) used as the
diagnostic code by the command-line front end.
"""


class TempoDagError(Exception):
    """Base class for all tempodag errors."""

    def __init__(self, message="", path=None, **details):
        super().__init__(message)
        self.message = message
        self.path = tuple(path) if path else ()
        self.details = details

    @property
    def code(self):
        return type(self).__name__

    def at(self, path):
        """Attach a location inside the spec document (outermost first)."""
        self.path = tuple(path) + self.path
        return self

    def __str__(self):
        return f"{self.code}: {self.message}"


# atomic_graph
class BackwardInTimeEdge(TempoDagError):
    pass


class UnknownNode(TempoDagError):
    pass


class DuplicateNode(TempoDagError):
    pass


class InvalidTimePoint(TempoDagError):
    pass


class InvalidProcessName(TempoDagError):
    pass


# composite
class TimePointNotPossible(TempoDagError):
    pass


class BadDistribution(TempoDagError):
    pass


class ArityMismatch(TempoDagError):
    pass


class InvalidAggregation(TempoDagError):
    pass


class DuplicateVariable(TempoDagError):
    pass


class MarginalMismatch(TempoDagError):
    pass


class ProcessTimeCollision(TempoDagError):
    pass


class UnknownAtomicNode(TempoDagError):
    pass


class UnknownVariable(TempoDagError):
    pass


class SubsetNotInSupport(TempoDagError):
    pass


class MissingAtomicValue(TempoDagError):
    pass


# acyclicity
class SameVariable(TempoDagError):
    pass


class EmptyJointSupport(TempoDagError):
    pass


class TooFewVariables(TempoDagError):
    pass


# unroll
class NonDeterministicSupport(TempoDagError):
    pass


class BadPartition(TempoDagError):
    pass


class AlreadyAcyclic(TempoDagError):
    pass


class UnresolvableWithMixing(TempoDagError):
    pass


# scm_oracle
class InvalidScm(TempoDagError):
    pass


class MixingNotExact(TempoDagError):
    pass


class SingularConditioning(TempoDagError):
    pass


class InvalidQuery(TempoDagError):
    pass


class InsufficientSamples(TempoDagError):
    pass


# discovery
class NotADag(TempoDagError):
    pass


class ConflictingOrientations(TempoDagError):
    pass


class AuditTooLarge(TempoDagError):
    pass


# cli / spec files
class ParseError(TempoDagError):
    pass


class MissingScm(TempoDagError):
    pass


class InvalidArgument(TempoDagError):
    pass
