"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 2, NumericError -> 3,
ConfigError -> 1.
"""


class TwoStepError(Exception):
    pass


class ConfigError(TwoStepError, ValueError):
    pass


class DataError(TwoStepError, ValueError):
    """Malformed input data. Carries the offending path and line when known."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class ArtifactError(DataError):
    pass


class NumericError(TwoStepError, ArithmeticError):
    pass
