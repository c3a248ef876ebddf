"""Exception types shared across the engine, oracle, and benchmark tools."""


class EngineError(Exception):
    """Base class for errors raised by the inference machinery."""


class AddressCollisionError(EngineError):
    """Two procedures claimed the same trace address in one execution."""


class InvalidWeightError(EngineError):
    """A NaN log-weight increment was about to corrupt a trace."""


class UnobservableProcedureError(EngineError):
    """observe() was applied to a procedure with implicit randomness.

    Only observable procedures (which carry an explicit noise variable)
    and Delta procedures can absorb evidence.  Conditioning anything else
    would silently degrade to rejection sampling, or break the abduction
    step of counterfactual queries.
    """


class StaleTraceError(EngineError):
    """A replayed trace does not match the program that produced it."""


class NoSurvivingSamplesError(EngineError):
    """Every sample carried log-weight -inf; no estimate is defined."""


class ImpossibleEvidenceError(EngineError):
    """The evidence has probability zero under the model."""


class DegenerateGraphError(EngineError):
    """A generated graph admits no valid intervention/target query pair."""
