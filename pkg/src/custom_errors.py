class WorkbenchError(Exception):
    exit_code = 1


class ConfigurationError(WorkbenchError):
    exit_code = 2


class ValidationError(ConfigurationError):
    pass


class DomainError(ConfigurationError, ValueError):
    pass


class NumericalError(WorkbenchError):
    exit_code = 3


class CatenaryError(NumericalError):
    def __init__(self, message: str, line_index: int | None = None, diagnostics: dict | None = None) -> None:
        super().__init__(message)
        self.line_index = line_index
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        where = f'line {self.line_index + 1}: ' if self.line_index is not None else ''
        details = ', '.join(f'{key}={value:.6g}' if isinstance(value, float) else f'{key}={value}'
                            for key, value in self.diagnostics.items())
        return f'{where}{super().__str__()}' + (f' ({details})' if details else '')


class AcceptanceGateError(WorkbenchError):
    exit_code = 4


class ExtensionError(WorkbenchError):
    pass


class UnhandledError(WorkbenchError):
    pass
