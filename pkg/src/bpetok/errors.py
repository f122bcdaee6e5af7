"""Exception hierarchy shared by all bpetok modules."""


class BpetokError(Exception):
    """Base class for every error raised by bpetok."""


class ConfigError(BpetokError, ValueError):
    pass


class CorpusError(BpetokError):
    """A corpus file could not be read or a line could not be parsed.

    ``line`` is the 1-based line number, or ``None`` for file-level errors.
    """

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if line is not None:
            where = f", line {line}"
        super().__init__(f"{message}{where}")


class ModelError(BpetokError):
    """A model file does not match the expected schema."""


class LayoutError(ModelError):
    """A vocabulary violates the block layout or merge invariants."""


class TrainingError(BpetokError):
    pass


class DecodeError(BpetokError, ValueError):
    pass
