import abc
import math
import numbers
from typing import Any, Optional, Type, List
from occflow.config.validators import exceptions


class Constraint(abc.ABC):
    """
    Constraint Class

    Constraints are attached to validators to check configuration values.

    Attributes:
        nullable (`bool`): Flag indicating whether null/None values are
            allowed. In which case, validation will only occur if a non-NoneType
            value is provided to the constraint.

    """

    def __init__(self, nullable: Optional[bool] = True) -> None:
        """
        Constraint Constructor

        :param nullable: Optional[bool], Flag indicating whether null/None values are
            allowed.

        """

        self.nullable = nullable

    @abc.abstractmethod
    def __copy__(self) -> 'Constraint':
        """
        Copy and return the constraint object.

        :return: Constraint

        :raises: NotImplementedError

        """

        raise NotImplementedError()

    def __eq__(self, other: 'Constraint') -> bool:
        """
        Evaluate whether the two constraints are equal.

        :param other: Constraint, The other constraint to compare against.
        :return: bool

        """

        if other is None:
            return False

        return isinstance(other, Constraint) \
            and (self.__hash__() == other.__hash__()) \
            and (self.nullable == other.nullable)

    def __hash__(self) -> int:
        """
        Hash the constraint.

        :return: int

        """

        return hash(f"{self.__class__.__name__}<nullable={self.nullable}>")

    @abc.abstractmethod
    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        """
        Check whether the provided (non-null) value meets the constraint condition.

        :param value: Any, The value to match against the constraint.
        :param strict: Optional[bool], Flag indicating whether to raise an exception
            if the constraint fails.
        :return: bool

        :raises: NotImplementedError

        """

        raise NotImplementedError()

    def is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        """
        Check whether the provided value meets the constraint condition.

        :param value: Any, The value to match against the constraint.
        :param strict: Optional[bool], Flag indicating whether to raise an exception
            if the constraint fails.
        :return: bool

        :raises: NullFieldException

        """

        if value is not None:
            return self._is_valid(value=value, strict=strict)
        elif self.nullable:
            return True
        elif strict:
            raise exceptions.NullFieldException()
        else:
            return False

    @property
    def nullable(self) -> bool:
        """
        Get the nullable flag.

        :return: bool

        """

        return self._nullable

    @nullable.setter
    def nullable(self, value: bool) -> None:
        """
        Set the nullable flag.

        :param value: bool, Whether the constraint accepts null values.
        :return: None

        """

        self._nullable = value


class IsType(Constraint):
    """
    Is Type Constraint Class

    Attributes:
        data_type (`Type`): The type to constrain the value to.
        exception_type (`Type`): The type of exception to raise if the constraint fails.

    """

    def __init__(self, data_type: Type, exception_type: Type, nullable: Optional[bool] = True) -> None:
        """
        Is Type Constraint Constructor

        :param data_type: Type, The type to constrain the value to.
        :param exception_type: Type, The type of exception to raise if the constraint fails.
        :param nullable: Optional[bool], Flag indicating whether null/None values are allowed.

        """

        super().__init__(nullable=nullable)
        self.data_type = data_type
        self.exception_type = exception_type

    def __copy__(self) -> 'IsType':
        return IsType(data_type=self.data_type, exception_type=self.exception_type, nullable=self.nullable)

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        """
        Return whether the provided value is the constrained type.

        :param value: Any, The value to check the validity of.
        :param strict: Optional[bool], Flag indicating whether to raise on failure.
        :return: bool

        """

        is_valid = isinstance(value, self.data_type)

        if strict and (not is_valid):
            raise self.exception_type(value=value)

        return is_valid

    @property
    def data_type(self) -> Type:
        return self._data_type

    @data_type.setter
    def data_type(self, value: Type) -> None:
        self._data_type = value

    @property
    def exception_type(self) -> Type:
        return self._exception_type

    @exception_type.setter
    def exception_type(self, value: Type) -> None:
        self._exception_type = value


class IsNumeric(IsType):
    """
    Is Numeric Constraint Class

    Booleans are rejected even though Python treats them as integers.

    """

    def __init__(self, nullable: Optional[bool] = True) -> None:
        IsType.__init__(
            self,
            data_type=numbers.Real,
            exception_type=exceptions.NumericValueError,
            nullable=nullable
        )

    def __copy__(self) -> 'IsNumeric':
        return IsNumeric(nullable=self.nullable)

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        """
        Return whether the provided value is a real, non-boolean number.

        :param value: Any, The value to check the validity of.
        :param strict: Optional[bool], Flag indicating whether to raise on failure.
        :return: bool

        """

        if isinstance(value, bool):
            if strict:
                raise exceptions.NumericValueError(value=value)

            return False

        return super()._is_valid(value=value, strict=strict)


class IsFinite(IsNumeric):
    """
    Is Finite Constraint Class

    JSON accepts `NaN`/`Infinity` literals through the Python parser; configuration
    values must still be finite.

    """

    def __copy__(self) -> 'IsFinite':
        return IsFinite(nullable=self.nullable)

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        is_valid = super()._is_valid(value=value, strict=strict)

        if is_valid and (not math.isfinite(value)):
            if strict:
                raise exceptions.NonFiniteValueError(value=value)

            is_valid = False

        return is_valid


class IsInteger(IsNumeric):
    """
    Is Integer Constraint Class

    """

    def __init__(self, nullable: Optional[bool] = True) -> None:
        super().__init__(nullable=nullable)
        self.data_type = numbers.Integral
        self.exception_type = exceptions.IntegerValueError

    def __copy__(self) -> 'IsInteger':
        return IsInteger(nullable=self.nullable)

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        """
        Return whether the provided value is an integer.

        :param value: Any, The value to check the validity of.
        :param strict: Optional[bool], Flag indicating whether to raise on failure.
        :return: bool

        """

        if isinstance(value, bool):
            if strict:
                raise exceptions.IntegerValueError(value=value)

            return False

        return IsType._is_valid(self, value=value, strict=strict)


class IsGreaterThan(IsFinite):
    """
    Is Greater Than Constraint

    Attributes:
        min_value (`float`): Exclusive floor. The constraint checks value > min_value.

    """

    def __init__(self, min_value: Optional[float] = 0, nullable: Optional[bool] = True) -> None:
        """
        Is Greater Than Constraint Constructor

        :param min_value: Optional[float], Exclusive floor of the constraint.
        :param nullable: Optional[bool], Flag indicating whether null/None values are allowed.

        """

        self.min_value = min_value
        super().__init__(nullable=nullable)

    def __copy__(self) -> 'IsGreaterThan':
        return IsGreaterThan(min_value=self.min_value, nullable=self.nullable)

    def __hash__(self) -> int:
        return hash(" ".join([self.__class__.__name__, f"'value > {self.min_value}'", f"nullable={self.nullable}"]))

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        is_valid = super()._is_valid(value=value, strict=strict)

        if is_valid:
            is_valid = value > self.min_value

            if strict and (not is_valid):
                raise exceptions.NotGreaterThanValueError(value=value, min_value=self.min_value)

        return is_valid

    @property
    def min_value(self) -> float:
        """
        Get the exclusive floor of the constraint.

        :return: float

        """

        return self._min_value

    @min_value.setter
    def min_value(self, value: float) -> None:
        self._min_value = value


class IsAtLeast(IsFinite):
    """
    Is At Least Constraint

    Attributes:
        min_value (`float`): Inclusive floor. The constraint checks value >= min_value.

    """

    def __init__(self, min_value: Optional[float] = 0, nullable: Optional[bool] = True) -> None:
        self.min_value = min_value
        super().__init__(nullable=nullable)

    def __copy__(self) -> 'IsAtLeast':
        return IsAtLeast(min_value=self.min_value, nullable=self.nullable)

    def __hash__(self) -> int:
        return hash(" ".join([self.__class__.__name__, f"'value >= {self.min_value}'", f"nullable={self.nullable}"]))

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        is_valid = super()._is_valid(value=value, strict=strict)

        if is_valid:
            is_valid = value >= self.min_value

            if strict and (not is_valid):
                raise exceptions.NotAtLeastValueError(value=value, min_value=self.min_value)

        return is_valid

    @property
    def min_value(self) -> float:
        return self._min_value

    @min_value.setter
    def min_value(self, value: float) -> None:
        self._min_value = value


class IsInRange(IsFinite):
    """
    Is In Range Constraint

    Closed interval check, used for ratios such as the aggregation ratio.

    Attributes:
        low (`float`): Inclusive lower bound.
        high (`float`): Inclusive upper bound.

    """

    def __init__(self, low: float = 0.0, high: float = 1.0, nullable: Optional[bool] = True) -> None:
        self.low = low
        self.high = high
        super().__init__(nullable=nullable)

    def __copy__(self) -> 'IsInRange':
        return IsInRange(low=self.low, high=self.high, nullable=self.nullable)

    def __hash__(self) -> int:
        return hash(f"{self.__class__.__name__}<[{self.low}, {self.high}], nullable={self.nullable}>")

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        is_valid = super()._is_valid(value=value, strict=strict)

        if is_valid:
            is_valid = self.low <= value <= self.high

            if strict and (not is_valid):
                raise exceptions.OutOfRangeValueError(value=value, low=self.low, high=self.high)

        return is_valid


class IsPositiveInteger(IsInteger):
    """
    Is Positive Integer Constraint Class

    """

    def __copy__(self) -> 'IsPositiveInteger':
        return IsPositiveInteger(nullable=self.nullable)

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        is_valid = super()._is_valid(value=value, strict=strict)

        if is_valid and (value <= 0):
            if strict:
                raise exceptions.NotGreaterThanValueError(value=value, min_value=0)

            is_valid = False

        return is_valid


class IsOdd(IsInteger):
    """
    Is Odd Constraint Class

    """

    def __copy__(self) -> 'IsOdd':
        return IsOdd(nullable=self.nullable)

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        is_valid = super()._is_valid(value=value, strict=strict)

        if is_valid and (value % 2 == 0):
            if strict:
                raise exceptions.NotOddValueError(value=value)

            is_valid = False

        return is_valid


class IsBoolean(IsType):
    """
    Is Boolean Constraint Class

    """

    def __init__(self, nullable: Optional[bool] = True) -> None:
        super().__init__(data_type=bool, exception_type=exceptions.BooleanValueError, nullable=nullable)

    def __copy__(self) -> 'IsBoolean':
        return IsBoolean(nullable=self.nullable)


class IsRequired(Constraint):
    """
    Is Required Constraint Class

    """

    def __init__(self) -> None:
        super().__init__(nullable=False)

    def __copy__(self) -> 'IsRequired':
        return IsRequired()

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        return True


class IsString(IsType):
    """
    Is String Constraint Class

    """

    def __init__(self, nullable: Optional[bool] = True) -> None:
        super().__init__(data_type=str, exception_type=exceptions.StringValueError, nullable=nullable)

    def __copy__(self) -> 'IsString':
        return IsString(nullable=self.nullable)


class IsPath(IsString):
    """
    Is Path Constraint Class

    A non-empty string without NUL characters or surrounding whitespace.

    """

    def __copy__(self) -> 'IsPath':
        return IsPath(nullable=self.nullable)

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        is_valid = super()._is_valid(value=value, strict=strict)

        if is_valid and ((value.strip() != value) or (len(value) == 0) or ("\x00" in value)):
            if strict:
                raise exceptions.PathValueError(value=value)

            is_valid = False

        return is_valid


class IsList(IsType):
    """
    Is List Constraint Class

    """

    def __init__(self, nullable: Optional[bool] = True) -> None:
        super().__init__(data_type=list, exception_type=exceptions.ListValueError, nullable=nullable)

    def __copy__(self) -> 'IsList':
        return IsList(nullable=self.nullable)


class IsObject(IsType):
    """
    Is Object Constraint Class

    """

    def __init__(self, nullable: Optional[bool] = True) -> None:
        super().__init__(data_type=dict, exception_type=exceptions.ObjectValueError, nullable=nullable)

    def __copy__(self) -> 'IsObject':
        return IsObject(nullable=self.nullable)


class IsVector(Constraint):
    """
    Is Vector Constraint Class

    A fixed-length list of finite numbers, e.g. a 3D position in meters.

    Attributes:
        length (`int`): The required number of components.

    """

    def __init__(self, length: int = 3, nullable: Optional[bool] = True) -> None:
        super().__init__(nullable=nullable)
        self.length = length

    def __copy__(self) -> 'IsVector':
        return IsVector(length=self.length, nullable=self.nullable)

    def __hash__(self) -> int:
        return hash(f"{self.__class__.__name__}<length={self.length}, nullable={self.nullable}>")

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        """
        Return whether the value is a list of `length` finite numbers.

        :param value: Any, The value to check the validity of.
        :param strict: Optional[bool], Flag indicating whether to raise on failure.
        :return: bool

        """

        component = IsFinite(nullable=False)
        is_valid = isinstance(value, list) and (len(value) == self.length) \
            and all(component.is_valid(value=v) for v in value)

        if strict and (not is_valid):
            raise exceptions.VectorValueError(value=value, length=self.length)

        return is_valid


class IsListOf(IsList):
    """
    Is List Of Constraint Class

    A list whose every item satisfies the item constraint.

    Attributes:
        item (`Constraint`): The constraint applied to every item.

    """

    def __init__(self, item: Constraint, nullable: Optional[bool] = True) -> None:
        super().__init__(nullable=nullable)
        self.item = item

    def __copy__(self) -> 'IsListOf':
        return IsListOf(item=self.item.__copy__(), nullable=self.nullable)

    def __hash__(self) -> int:
        return hash(f"{self.__class__.__name__}<item={self.item.__hash__()}, nullable={self.nullable}>")

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        if not super()._is_valid(value=value, strict=strict):
            return False

        for item in value:
            if (item is None) or (not self.item.is_valid(value=item, strict=strict)):
                if strict and (item is None):
                    raise exceptions.NullFieldException()

                return False

        return True


class SelectionConstraint(Constraint):
    """
    Selection Constraint

    Constraint used to limit input values to a curated list of valid items.

    Attributes:
        options (`List`): The options a value (or every item of a list value) must be
            drawn from.

    """

    def __init__(self, options: List, nullable: Optional[bool] = True) -> None:
        super().__init__(nullable=nullable)
        self.options = options

    def __copy__(self) -> 'SelectionConstraint':
        return SelectionConstraint(options=self.options, nullable=self.nullable)

    def __eq__(self, other: 'Constraint') -> bool:
        if (other is not None) and isinstance(other, SelectionConstraint):
            return (set(self.options) == set(other.options)) and (self.nullable == other.nullable)

        return False

    def __hash__(self) -> int:
        items = sorted(str(o) for o in set(self.options))
        return hash(f"{self.__class__.__name__}<nullable={self.nullable}> - ({items})")

    def _is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        """
        Check that the value (or each list item) is one of the options, with matching type.

        :param value: Any, The value to match against the constraint.
        :param strict: Optional[bool], Flag indicating whether to raise on failure.
        :return: bool

        """

        value_list = value if isinstance(value, list) else [value]

        for item in value_list:
            is_valid = any((item == option) and (type(item) is type(option)) for option in self.options)

            if not is_valid:
                if strict:
                    raise exceptions.SelectionValueError(value=item, options=self.options)

                return False

        return True

    def is_valid(self, value: Any, strict: Optional[bool] = False) -> bool:
        value = None if isinstance(value, list) and (len(value) == 0) else value
        return super().is_valid(value=value, strict=strict)

    @property
    def options(self) -> List:
        return self._options

    @options.setter
    def options(self, value: List) -> None:
        self._options = value
