import numbers
from typing import Any, Union, Type, List


class ConstraintException(ValueError):
    """
    Generic Constraint Exception Class

    Base class of every failed configuration constraint.

    """

    def __init__(self, message: str = None) -> None:
        """
        Constraint Exception Constructor

        :param message: str, The message to show when an exception has been encountered.
        :return: None

        """

        super().__init__(message)


class TypeConstraintException(ConstraintException):
    """
    Generic Type Constraint Exception Class

    """

    def __init__(self, value: Any, data_type: Union[Type, str]) -> None:
        """
        Type Constraint Value Error Constructor

        :param value: Any, The value that failed validation.
        :param data_type: Union[Type, str], The expected data type (or its description).
        :return: None

        """

        super().__init__(f"value `{value}` is not {data_type}")


class NullFieldException(ConstraintException):
    """
    Null Field Exception

    Raised when a required setting is missing (or explicitly null).

    """

    def __init__(self) -> None:
        """
        Null Field Exception Constructor

        :return: None

        """

        super().__init__("value is required and cannot be null")


class NumericValueError(TypeConstraintException):
    """
    Numeric Value Error Class

    """

    def __init__(self, value: Any) -> None:
        """
        Numeric Constraint Value Error Constructor

        :param value: Any, The value that failed validation.
        :return: None

        """

        super().__init__(value=value, data_type="a number")


class IntegerValueError(TypeConstraintException):
    """
    Integer Value Error Class

    """

    def __init__(self, value: Any) -> None:
        """
        Integer Constraint Value Error Constructor

        :param value: Any, The value that failed validation.
        :return: None

        """

        super().__init__(value=value, data_type="an integer")


class NotGreaterThanValueError(ConstraintException):
    """
    Not Greater Than Value Error Class

    """

    def __init__(self, value: Any, min_value: numbers.Number) -> None:
        """
        Not Greater Than Value Error Constructor

        :param value: Any, The value that failed validation.
        :param min_value: numbers.Number, The exclusive floor of the constraint.
        :return: None

        """

        super().__init__(f"value `{value}` must be greater than `{min_value}`")


class NotAtLeastValueError(ConstraintException):
    """
    Not At Least Value Error Class

    """

    def __init__(self, value: Any, min_value: numbers.Number) -> None:
        """
        Not At Least Value Error Constructor

        :param value: Any, The value that failed validation.
        :param min_value: numbers.Number, The inclusive floor of the constraint.
        :return: None

        """

        super().__init__(f"value `{value}` must be at least `{min_value}`")


class OutOfRangeValueError(ConstraintException):
    """
    Out Of Range Value Error Class

    """

    def __init__(self, value: Any, low: numbers.Number, high: numbers.Number) -> None:
        """
        Out Of Range Value Error Constructor

        :param value: Any, The value that failed validation.
        :param low: numbers.Number, The inclusive lower bound.
        :param high: numbers.Number, The inclusive upper bound.
        :return: None

        """

        super().__init__(f"value `{value}` must lie in [{low}, {high}]")


class NotOddValueError(ConstraintException):
    """
    Not Odd Value Error Class

    Raised for even search windows (a window needs a center cell).

    """

    def __init__(self, value: Any) -> None:
        """
        Not Odd Value Error Constructor

        :param value: Any, The value that failed validation.
        :return: None

        """

        super().__init__(f"value `{value}` must be odd")


class PathValueError(ConstraintException):
    """
    Path Value Error Class

    """

    def __init__(self, value: Any) -> None:
        super().__init__(f"value `{value}` is not a usable path")


class NonFiniteValueError(ConstraintException):
    """
    Non Finite Value Error Class

    """

    def __init__(self, value: Any) -> None:
        """
        Non Finite Value Error Constructor

        :param value: Any, The value that failed validation.
        :return: None

        """

        super().__init__(f"value `{value}` must be finite")


class VectorValueError(TypeConstraintException):
    """
    Vector Value Error Class

    """

    def __init__(self, value: Any, length: int) -> None:
        """
        Vector Value Error Constructor

        :param value: Any, The value that failed validation.
        :param length: int, The expected number of components.
        :return: None

        """

        super().__init__(value=value, data_type=f"a list of {length} numbers")


class BooleanValueError(TypeConstraintException):
    """
    Boolean Value Error Class

    """

    def __init__(self, value: Any) -> None:
        """
        Boolean Constraint Value Error Constructor

        :param value: Any, The value that failed validation.
        :return: None

        """

        super().__init__(value=value, data_type="a boolean")


class StringValueError(TypeConstraintException):
    """
    String Value Error Class

    """

    def __init__(self, value: Any) -> None:
        """
        String Constraint Value Error Constructor

        :param value: Any, The value that failed validation.
        :return: None

        """

        super().__init__(value=value, data_type="a string")


class ListValueError(TypeConstraintException):
    """
    List Value Error Class

    """

    def __init__(self, value: Any) -> None:
        """
        List Constraint Value Error Constructor

        :param value: Any, The value that failed validation.
        :return: None

        """

        super().__init__(value=value, data_type="a list")


class ObjectValueError(TypeConstraintException):
    """
    Object Value Error Class

    Raised when a config section is not a JSON object.

    """

    def __init__(self, value: Any) -> None:
        """
        Object Constraint Value Error Constructor

        :param value: Any, The value that failed validation.
        :return: None

        """

        super().__init__(value=value, data_type="an object")


class SelectionValueError(ConstraintException):
    """
    Selection Value Error Class

    """

    def __init__(self, value: Any, options: List) -> None:
        """
        Selection Value Error Constructor

        :param value: Any, The value that failed validation.
        :param options: List, The valid options.
        :return: None

        """

        super().__init__(f"value `{value}` is not one of {options}")
