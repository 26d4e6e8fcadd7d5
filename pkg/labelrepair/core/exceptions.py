class BaseAppError(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


class ParseError(BaseAppError):
    def __init__(self, message: str, line: int | None = None, cell: str | None = None):
        self.line = line
        self.cell = cell
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigurationError(BaseAppError):
    pass


class ArgumentError(BaseAppError):
    pass


class CapacityError(BaseAppError):
    pass


class ConsistencyError(BaseAppError):
    pass


class ShapeError(BaseAppError):
    pass


class EncodingError(BaseAppError):
    pass


class StatisticsError(BaseAppError):
    pass


class TrainingError(BaseAppError):
    pass
