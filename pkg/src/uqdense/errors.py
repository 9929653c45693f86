"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each error class carries one.
"""


class UqDenseError(Exception):
    exit_code = 1


class ConfigError(UqDenseError, ValueError):
    exit_code = 2


class ShapeError(UqDenseError, ValueError):
    exit_code = 2


class DataError(UqDenseError, ValueError):
    exit_code = 3


class InputError(DataError):
    pass


class DomainError(DataError):
    pass


class NumericError(UqDenseError, ArithmeticError):
    exit_code = 4


class TrainingError(NumericError):
    pass


class StateError(UqDenseError, RuntimeError):
    exit_code = 4


class SearchError(UqDenseError, RuntimeError):
    exit_code = 4
