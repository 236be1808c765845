"""Exception types for figure rendering."""


class PlotsError(Exception):
    """Base class for everything this package raises on purpose."""


class SpecError(PlotsError):
    """Figure spec file is malformed or references missing inputs."""


class SchemaError(PlotsError):
    """An input CSV does not carry the documented column schema."""
