class AdapterError(Exception):
    """Base class for adapter failures."""


class ConfigError(AdapterError):
    """The model reference or its loader spec cannot be used."""
