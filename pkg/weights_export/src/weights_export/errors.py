"""Exporter failure modes."""


class ExportError(Exception):
    """Base class for exporter failures."""


class SourceUnavailable(ExportError):
    """The checkpoint file is missing or cannot be deserialized."""


class LayerCountMismatch(ExportError):
    """The checkpoint does not contain the 16-conv VGG19 feature stack."""
