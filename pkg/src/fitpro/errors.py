"""Error taxonomy shared by all fitpro modules.

Every error carries a stable machine-readable ``code`` so the HTTP layer can
map failures onto JSON error bodies without string matching.
"""


class FitProError(Exception):
    code = "internal"


class DimensionError(FitProError):
    """Vectors or distributions with mismatched dimensionality."""

    code = "dimension_mismatch"


class DegenerateVectorError(FitProError):
    """Zero or empty vector where a direction is required."""

    code = "degenerate_vector"


class FormatError(FitProError):
    """Malformed on-disk artifact (store, snapshot, manifest, report)."""

    code = "bad_format"


class ShapeError(FitProError):
    """Image/feature arrays whose spatial shapes do not line up."""

    code = "shape_mismatch"


class SingularScheduleError(FitProError):
    """Diffusion schedule with a zero control parameter."""

    code = "singular_schedule"


class ValidationError(FitProError):
    code = "validation"


class ParseError(FitProError):
    """Text that yields no recognizable structured slots."""

    code = "parse_failure"


class IdentityMismatchError(FitProError):
    """Local aggregation invoked over graphs of different identities."""

    code = "identity_mismatch"


class ConflictError(FitProError):
    """Irreconcilable payloads for one node id, or a duplicate session id."""

    code = "conflict"


class InvalidRelationError(FitProError):
    """Relation name outside the configured valid set."""

    code = "invalid_relation"


class NotFoundError(FitProError):
    code = "not_found"


class WeightError(FitProError):
    """Fusion weights violating their normalization constraints."""

    code = "bad_weights"


class SessionClosedError(FitProError):
    code = "session_closed"


class AttributesExhausted(FitProError):
    """Scripted user has no unrevealed true attributes left."""

    code = "exhausted"
