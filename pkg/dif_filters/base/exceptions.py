# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0

from typing import Optional


class DifError(Exception):
    """
    Base class for all errors raised by dif-filters.
    """
    pass


class DimensionError(DifError, ValueError):
    """
    Raised when array shapes of the operands do not agree.
    """
    pass


class NumericalError(DifError):
    """
    Raised when a factorization fails or a result is not finite.
    """

    def __init__(self, message: str, eigenvalue: Optional[float] = None) -> None:
        super().__init__(message)
        self.eigenvalue = eigenvalue


class GridError(DifError):
    pass


class ConfigError(DifError):
    """
    Raised for a configuration value which cannot be parsed. `key` names the offending option.
    """

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f'Invalid value for "{key}": {message}')
        self.key = key


class ReportSchemaError(DifError):
    pass
