"""Exception hierarchy shared across the harness."""


class ConflictLabError(Exception):
    """Base class for all harness errors."""


# -- core / metrics ---------------------------------------------------------

class EmptyInput(ConflictLabError):
    pass


class EmptyMatrix(ConflictLabError):
    pass


# -- simulation -------------------------------------------------------------

class OffRoute(ConflictLabError):
    """Vehicle pose cannot be projected onto its route centerline."""


class PlacementFailure(ConflictLabError):
    """Scene generator could not place the requested vehicles without overlap."""


class RenderBounds(ConflictLabError):
    """A vehicle pose maps outside the rendered image."""


# -- ingestion --------------------------------------------------------------

class OutOfRange(ConflictLabError):
    """Requested timestamps fall outside the source duration."""


class DecoderFailure(ConflictLabError):
    """External decoder exited nonzero or produced no output."""


class AmbiguousSequence(ConflictLabError):
    """Image sequence directory contains duplicate sort keys."""


class DuplicateId(ConflictLabError):
    pass


class InsufficientClass(ConflictLabError):
    """A class lacks enough members to fill the requested splits."""


class OddSplitCount(ConflictLabError):
    """Split counts must be even so the two classes divide equally."""


# -- model gateway ----------------------------------------------------------

class MissingFrame(ConflictLabError):
    pass


class Timeout(ConflictLabError):
    """Remote backend exceeded its deadline on every attempt."""


class RemoteError(ConflictLabError):
    """Terminal HTTP failure after retries."""


class BudgetExceeded(ConflictLabError):
    """Request-count ceiling reached."""


class Unparseable(ConflictLabError):
    """No lexicon token recoverable from a model reply."""


class InconsistentTarget(ConflictLabError):
    """Scripted confusion target does not match the split's class totals."""


# -- eval harness -----------------------------------------------------------

class EmptyRun(ConflictLabError):
    pass


class SplitMismatch(ConflictLabError):
    pass


class IoFailure(ConflictLabError):
    pass


# -- review service ---------------------------------------------------------

class UnlabeledObservation(ConflictLabError):
    pass


class ImageReadFailure(ConflictLabError):
    pass


class UnknownRun(ConflictLabError):
    pass


class UnknownObservation(ConflictLabError):
    pass


class MissingTargetText(ConflictLabError):
    """Scored verdict carries no explanation/recommendation text."""


class RangeViolation(ConflictLabError):
    pass


class NoScores(ConflictLabError):
    pass
