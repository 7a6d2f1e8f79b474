"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input file, config value, or domain object violates its contract."""


class ParseError(ValidationError):
    """A delimited input file could not be parsed.

    Carries the path and 1-based line number of the offending record so CLI
    error messages can point at the exact spot.
    """

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no
