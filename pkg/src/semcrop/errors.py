"""Exception types shared across the package."""


class SemcropError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(SemcropError, ValueError):
    """An argument violates a precondition (bad shape, out of bounds, bad value)."""


class DegenerateMapError(SemcropError, ValueError):
    """A score map has no usable signal (all zero, constant, or zero total mass)."""


class LossDomainError(SemcropError, ValueError):
    """A loss was evaluated outside its mathematical domain (e.g. log of zero)."""


class NoCommonAncestorError(SemcropError, ValueError):
    """Two taxonomy concepts share no ancestor, so no similarity is defined."""


class TaxonomyError(SemcropError, ValueError):
    """A taxonomy document violates its structural invariants."""


class ManifestError(SemcropError, ValueError):
    """A dataset manifest failed validation.

    ``errors`` holds one ``(record_id, message)`` pair per offending record so
    callers can report every problem, not just the first.
    """

    def __init__(self, message: str, errors: list[tuple[str, str]] | None = None):
        super().__init__(message)
        self.errors = errors or []


class AnnotationError(SemcropError, ValueError):
    """An annotation record was rejected (bad aspect, out of bounds, duplicate)."""


class DuplicateAnnotationError(AnnotationError):
    """The same (task, worker) pair already submitted an annotation."""
