"""Exception types shared across the package."""


class RegroupError(Exception):
    """Base class for all errors raised by this package."""


# -- fact base -------------------------------------------------------------

class DuplicateId(RegroupError):
    """An actor id or device ip is already present in the model."""


class UnknownActor(RegroupError):
    pass


class UnknownDevice(RegroupError):
    pass


class UnknownGroup(RegroupError):
    pass


class OutOfRange(RegroupError):
    """A numeric attribute is outside its allowed range."""


class InvalidModel(RegroupError):
    """An operation required a valid model but validation found violations."""


# -- rule engine -----------------------------------------------------------

class MalformedRule(RegroupError):
    """A rule breaks an arity, vocabulary, or variable-binding constraint."""


class NonTermination(RegroupError):
    """Inference exceeded its firing budget without reaching a fixpoint."""


# -- graphs and serialization ----------------------------------------------

class ParseError(RegroupError):
    """Input text could not be parsed; message carries the position."""


class SchemaError(RegroupError):
    """A serialized graph is missing a required attribute key."""

    def __init__(self, key: str, detail: str = ""):
        self.key = key
        super().__init__(f"missing attribute key {key!r}" + (f": {detail}" if detail else ""))


class InvariantError(RegroupError):
    """A graph violates a structural invariant; message names the invariant."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        super().__init__(f"{code}" + (f": {detail}" if detail else ""))


class PlanMismatch(RegroupError):
    """A migration plan does not fit the graph it is applied to."""


# -- refinement and selection ----------------------------------------------

class UnresolvedDevice(RegroupError):
    """A graph vertex references a device ip absent from the model."""


class CandidateLimitExceeded(RegroupError):
    """Enumeration would produce more candidates than the configured guard."""


class MissingContext(RegroupError):
    """The context snapshot lacks an attribute for a host device."""


class MissingCurrent(RegroupError):
    """Distance policy requires a currently deployed graph."""


class NoFeasibleCandidate(RegroupError):
    """Every candidate scored -1 under the current context."""


# -- scenario ingestion ------------------------------------------------------

class ValidationError(RegroupError):
    """Scenario input produced an invalid model; carries the violation code."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        super().__init__(f"{code}" + (f": {detail}" if detail else ""))
