"""
Exception hierarchy for the thermal-stability twin.
Every domain failure derives from SimulatorError; the CLI maps it to exit code 1.
"""

from typing import List, Optional, Sequence


class SimulatorError(Exception):
    """Base exception for all simulator errors."""
    pass


class ConfigurationError(SimulatorError):
    """Raised when a scenario or a parameter set is invalid.

    Carries every diagnostic found, each formatted as ``config.path: message``.
    """
    def __init__(self, message: str, diagnostics: Optional[Sequence[str]] = None):
        self.diagnostics: List[str] = list(diagnostics or [message])
        super().__init__(message)


class ScenarioParseError(ConfigurationError):
    """Raised when a scenario file is not well-formed YAML."""
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class PlantStabilityError(SimulatorError):
    """Raised when a thermal time step violates the explicit-Euler stability guard."""
    def __init__(self, message: str, max_dt: float):
        super().__init__(message)
        self.max_dt = max_dt


class CouplingError(SimulatorError):
    """Raised when temperature coupling leaves the small-signal regime."""
    pass


class MeasurementError(SimulatorError):
    """Raised when a pulse cannot be captured."""
    pass


class AnalysisError(SimulatorError):
    """Raised when a series cannot be normalized or summarized."""
    pass


class UnitaryError(SimulatorError):
    """Raised for matrices that are not 2x2 unitaries."""
    pass


class CalibrationError(SimulatorError):
    """Raised when the sensitivity search does not converge."""
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ReportFormatError(SimulatorError):
    """Raised for malformed report CSV input."""
    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(f"{prefix}{message}")


class CampaignError(SimulatorError):
    """Wraps a module error with the round and channel where it happened."""
    def __init__(self, message: str, round_index: Optional[int] = None, channel: Optional[str] = None):
        self.round_index = round_index
        self.channel = channel
        context = []
        if round_index is not None:
            context.append(f"round {round_index}")
        if channel is not None:
            context.append(f"channel {channel}")
        prefix = f"[{', '.join(context)}] " if context else ""
        super().__init__(f"{prefix}{message}")
