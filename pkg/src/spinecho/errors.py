"""Exception types shared across the package."""


class SpinEchoError(Exception):
    """Base class for all package errors."""


class ConfigError(SpinEchoError):
    """Invalid configuration value or file; message names the offending key path."""


class NumericsError(SpinEchoError):
    """Integration produced non-finite values or violated a physical bound."""
