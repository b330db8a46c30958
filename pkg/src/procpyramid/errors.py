"""Exception types raised for unrecoverable input problems."""

from __future__ import annotations


class PyramidError(Exception):
    """Base class for fatal errors; carries a short machine-readable code."""

    code = "FATAL"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class ManifestError(PyramidError):
    """The bundle manifest is malformed or internally inconsistent."""

    code = "MANIFEST"


class ModelParseError(PyramidError):
    """A model file cannot be parsed into a process model."""

    code = "MODEL-PARSE"


class TemplateError(PyramidError):
    """A reference template file is malformed."""

    code = "TEMPLATE"


class EmptyTimelineError(PyramidError):
    """A timeline grid was requested for an empty offset table."""

    code = "EMPTY-TIMELINE"


class UnknownSeedError(PyramidError):
    """An impact seed matches neither a milestone nor a model."""

    code = "UNKNOWN-SEED"
