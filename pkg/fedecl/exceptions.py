"""Custom exceptions for the fedecl simulator."""
from __future__ import annotations

from pathlib import Path
from typing import Optional


class FedECLError(Exception):
    """Base exception for all fedecl errors."""

    def __init__(self, message: str, exit_code: int = 2):
        self.message = message
        self.exit_code = exit_code
        super().__init__(self.message)


class ConfigError(FedECLError):
    """Exception raised when an experiment configuration is invalid."""

    def __init__(self, key: str, message: str = "invalid configuration value"):
        self.key = key
        super().__init__(f"{message}: {key}", exit_code=1)


class UsageError(FedECLError):
    """Exception raised for malformed command-line usage."""

    def __init__(self, message: str):
        super().__init__(message, exit_code=1)


class ShapeError(FedECLError):
    """Exception raised when array shapes disagree with the architecture."""

    def __init__(self, what: str, expected: object, actual: object):
        self.what = what
        super().__init__(f"shape mismatch for {what}: expected {expected}, got {actual}")


class NumericError(FedECLError):
    """Exception raised when a computation meets non-finite values."""


class DomainError(FedECLError):
    """Exception raised when an argument lies outside an operation's domain."""


class FreezeError(FedECLError):
    """Exception raised when a gradient is supplied for a frozen parameter group."""

    def __init__(self, group: str):
        self.group = group
        super().__init__(f"gradient supplied for frozen parameter group: {group}")


class DegenerateClassifierError(FedECLError):
    """Exception raised when a global classifier row has zero norm."""

    def __init__(self, class_index: int):
        self.class_index = class_index
        super().__init__(f"global classifier row has zero norm: class {class_index}")


class DataError(FedECLError):
    """Exception raised when a dataset cannot satisfy a request."""


class ParseError(FedECLError):
    """Exception raised when a dataset file is malformed."""

    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")


class CheckpointError(FedECLError):
    """Exception raised when a checkpoint cannot be read or decoded."""

    def __init__(self, message: str, path: Optional[Path] = None):
        self.path = path
        super().__init__(f"{message}: {path}" if path is not None else message)
