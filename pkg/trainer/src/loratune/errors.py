"""Exception vocabulary shared by the library and the CLI."""


class LoratuneError(Exception):
    """Base class; exit_code is what the CLI returns for it."""

    exit_code = 1


class IoError(LoratuneError):
    exit_code = 1


class ConfigError(LoratuneError):
    exit_code = 2


class SchemaError(LoratuneError):
    """An input file does not match its documented line format."""

    exit_code = 4


class ResourceError(LoratuneError):
    """The run does not fit the machine; message names a cheaper preset."""

    exit_code = 5
