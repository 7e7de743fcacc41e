import copy
from typing import List, Any, Union, Generic, TypeVar, Dict, Optional
from occflow.config.validators import constraints, Validator
from occflow.config.validators.exceptions import ConstraintException
from occflow.config.fields.exceptions import ConfigValidationError


class NamedConfigAttribute(object):
    """
    Named Config Attribute Class

    Class for named configuration attributes.

    Attributes:
        name (`str`): The name of the configuration attribute.

    """

    def __init__(self, name: str) -> None:
        """
        Construct the Named Config Attribute.

        :param name: str, The name of the attribute.

        """

        self._name = name

    def __eq__(self, other: Any) -> bool:
        """
        Evaluate whether the other object and this attribute are the same.

        :param other: Attribute, The attribute to compare to.
        :return: bool

        """

        if (other is None) or (not isinstance(other, NamedConfigAttribute)):
            return False

        return (other.name == self.name) and (str(self) == str(other))

    def __str__(self) -> str:
        return f"Attribute `{self.name}`"

    def __repr__(self) -> str:
        return str(self)

    def __hash__(self) -> int:
        return hash(str(self))

    @property
    def name(self) -> str:
        """
        Get the name of the configuration attribute.

        :return: str

        """

        return self._name

    @name.setter
    def name(self, value: str) -> None:
        """
        Set the name of the configuration attribute.

        :param value: str, The name of the attribute to set.
        :return: None

        """

        self._name = value


class Field(NamedConfigAttribute):
    """
    Field Class

    A configuration key together with its default binding and validator.

    Attributes:
        name (`str`): The name of the configuration key.
        value (`Any`): The value bound to this key (the default, inside a schema).
        is_required (`bool`): Flag indicating whether the key must be present.
        validator (`Validator`): The validator to use when validating
            the field binding.
        description (`str`): Human readable help shown by `validate --explain`.

    """

    def __init__(
            self,
            name: str,
            value: Optional[Any] = None,
            is_required: Optional[bool] = False,
            validator: Optional[Validator] = None,
            description: Optional[str] = None) -> None:
        """
        Construct the field and its assignment.

        :param name: str, The name of the key.
        :param value: Optional[Any], The value bound to this key.
        :param is_required: Optional[bool], Flag indicating whether the field is required.
        :param validator: Optional[Validator], The validator to use when validating the
            field binding.
        :param description: Optional[str], Help text for the field.

        """

        super().__init__(name=name)
        self.value = value
        self.validator = validator if validator is not None else Validator()
        self.is_required = is_required
        self.description = description or ""

    def __copy__(self) -> 'Field':
        """
        Copy the field object.

        :return: Field

        """

        duplicate = object.__new__(type(self))
        duplicate.__dict__.update(self.__dict__)
        duplicate._validator = self.validator.__copy__()
        duplicate._value = copy.deepcopy(self.value)
        return duplicate

    def __eq__(self, other: 'Field') -> bool:
        """
        Evaluate whether the other field (and binding) are the same.

        :param other: Field, The field compare to.
        :return: bool

        """

        if (other is None) or (not isinstance(other, Field)):
            return False

        return (other.name == self.name) \
            and (other.value == self.value) \
            and (self.validator == other.validator)

    def __str__(self) -> str:
        return f"Field `{self.name}` = {self.value}"

    def __repr__(self) -> str:
        return str(self)

    def __hash__(self) -> int:
        return hash(str(self))

    def is_valid(self, strict: bool = False) -> bool:
        """
        Return whether the field assignment is valid.

        :param strict: bool, Flag indicating whether to perform strict validation.
        :return: bool

        """

        return self.validator.is_valid(value=self.value, strict=strict)

    def resolve(self, value: Any, path: str) -> Any:
        """
        Validate a binding for this field and return the value to store.

        Missing values fall back to the field default.

        :param value: Any, The raw binding (None when the key is absent).
        :param path: str, Dotted path used in error messages.
        :return: Any

        :raises: ConfigValidationError

        """

        value = copy.deepcopy(self.value) if value is None else value

        try:
            self.validator.is_valid(value=value, strict=True)
        except ConstraintException as e:
            raise ConfigValidationError(field=path, value=value, message=str(e))

        return value

    @property
    def value(self) -> Any:
        """
        Get the value bound to the field.

        :return: Any

        """

        return self._value

    @value.setter
    def value(self, value: Any) -> None:
        self._value = value

    @property
    def validator(self) -> Validator:
        """
        Get the validator of the field.

        :return: Validator

        """

        return self._validator

    @validator.setter
    def validator(self, value: Validator) -> None:
        self._validator = value

    @property
    def is_required(self) -> bool:
        """
        Get whether the field is required.

        :return: bool

        """

        return self._validator.is_required

    @is_required.setter
    def is_required(self, value: bool) -> None:
        """
        Set whether the field is required.

        :param value: bool, Flag indicating whether the field is required.
        :return: None

        """

        self._validator.is_required = value


class NumberField(Field):
    """
    Number Field Class

    Finite real number.

    """

    def __init__(
            self,
            name: str,
            value: Optional[float] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsFinite()]),
            description=description
        )


class PositiveNumberField(Field):
    """
    Positive Number Field Class

    """

    def __init__(
            self,
            name: str,
            value: Optional[float] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        """
        Construct the field and its assignment.

        :param name: str, The name of the key.
        :param value: Optional[float], The default value.
        :param is_required: Optional[bool], Flag indicating whether the field is required.
        :param description: Optional[str], Help text for the field.
        :return: None

        """

        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsGreaterThan(min_value=0)]),
            description=description
        )


class NonNegativeNumberField(Field):
    """
    Non Negative Number Field Class

    Used for loss weights, where zero switches a term off.

    """

    def __init__(
            self,
            name: str,
            value: Optional[float] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsAtLeast(min_value=0)]),
            description=description
        )


class FractionField(Field):
    """
    Fraction Field Class

    A number in the closed interval [0, 1].

    """

    def __init__(
            self,
            name: str,
            value: Optional[float] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsInRange(low=0.0, high=1.0)]),
            description=description
        )


class IntegerField(Field):
    """
    Integer Field Class

    """

    def __init__(
            self,
            name: str,
            value: Optional[int] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsInteger()]),
            description=description
        )


class PositiveIntegerField(Field):
    """
    Positive Integer Field Class

    """

    def __init__(
            self,
            name: str,
            value: Optional[int] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        """
        Construct the field and its assignment.

        :param name: str, The name of the key.
        :param value: Optional[int], The default value.
        :param is_required: Optional[bool], Flag indicating whether the field is required.
        :param description: Optional[str], Help text for the field.
        :return: None

        """

        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsPositiveInteger()]),
            description=description
        )


class OddWindowField(Field):
    """
    Odd Window Field Class

    Odd integer of at least 3, the side of a search window centered on a cell.

    """

    def __init__(
            self,
            name: str,
            value: Optional[int] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsOdd(), constraints.IsAtLeast(min_value=3)]),
            description=description
        )


class BooleanField(Field):
    """
    Boolean Field Class

    """

    def __init__(
            self,
            name: str,
            value: Optional[bool] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsBoolean()]),
            description=description
        )


class StringField(Field):
    """
    String Field Class

    """

    def __init__(
            self,
            name: str,
            value: Optional[str] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsString()]),
            description=description
        )


class PathField(Field):
    """
    Path Field Class

    A filesystem path, kept as written. Relative paths are resolved by the loader, not by
    the field.

    """

    def __init__(
            self,
            name: str,
            value: Optional[str] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsPath()]),
            description=description
        )


class SelectField(Field):
    """
    Select Field Class

    """

    def __init__(
            self,
            name: str,
            options: List,
            value: Optional[Any] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        """
        Construct the field and its assignment.

        :param name: str, The name of the key.
        :param options: List, A list of options that the provided value can be
            drawn from. Other values will be invalid.
        :param value: Optional[Any], The default value.
        :param is_required: Optional[bool], Flag indicating whether the field is required.
        :param description: Optional[str], Help text for the field.
        :return: None

        """

        self._options_constraint = constraints.SelectionConstraint(options=options)
        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[self._options_constraint]),
            description=description
        )

    @property
    def options(self) -> List:
        """
        Get the valid options for the field.

        :return: List

        """

        return self._options_constraint.options

    @options.setter
    def options(self, value: List) -> None:
        self._options_constraint.options = value


class MultiSelectField(SelectField):
    """
    Multi Select Field Class

    A list whose items are each drawn from the options.

    """

    def __init__(
            self,
            name: str,
            options: List,
            value: Optional[List] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        super().__init__(
            name=name,
            options=options,
            value=value if value is not None else [],
            is_required=is_required,
            description=description
        )
        self.validator.add(constraints.IsList())


class VectorField(Field):
    """
    Vector Field Class

    Fixed-length list of finite numbers.

    Attributes:
        length (`int`): The number of components.

    """

    def __init__(
            self,
            name: str,
            value: Optional[List[float]] = None,
            length: int = 3,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        """
        Construct the field and its assignment.

        :param name: str, The name of the key.
        :param value: Optional[List[float]], The default value.
        :param length: int, The number of components.
        :param is_required: Optional[bool], Flag indicating whether the field is required.
        :param description: Optional[str], Help text for the field.
        :return: None

        """

        self.length = length
        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsVector(length=length)]),
            description=description
        )


class NumberListField(Field):
    """
    Number List Field Class

    Non-empty list of positive numbers (e.g. depth thresholds).

    """

    def __init__(
            self,
            name: str,
            value: Optional[List[float]] = None,
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        super().__init__(
            name=name,
            value=value,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsListOf(item=constraints.IsGreaterThan(min_value=0))]),
            description=description
        )

    def resolve(self, value: Any, path: str) -> Any:
        value = super().resolve(value=value, path=path)

        if isinstance(value, list) and (len(value) == 0):
            raise ConfigValidationError(field=path, value=value, message="list cannot be empty")

        return value


class SectionField(Field):
    """
    Section Field Class

    A nested JSON object validated by its own schema.

    Attributes:
        schema (`Schema`): The schema of the nested object.

    """

    def __init__(
            self,
            name: str,
            schema: 'Schema',
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        self.schema = schema
        super().__init__(
            name=name,
            value=None,
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsObject()]),
            description=description
        )

    def resolve(self, value: Any, path: str) -> Any:
        """
        Validate the nested object; an absent section takes every default.

        :param value: Any, The raw binding.
        :param path: str, Dotted path of the section.
        :return: Any

        """

        if (value is None) and self.is_required:
            raise ConfigValidationError(field=path, value=value, message="value is required and cannot be null")

        value = {} if value is None else value
        value = super().resolve(value=value, path=path)
        return self.schema.validate(bindings=value, prefix=path)


class ListSectionField(Field):
    """
    List Section Field Class

    A list of nested JSON objects sharing a schema (e.g. scene primitives).

    Attributes:
        schema (`Schema`): The schema applied to every item.

    """

    def __init__(
            self,
            name: str,
            schema: 'Schema',
            is_required: Optional[bool] = False,
            description: Optional[str] = None) -> None:
        self.schema = schema
        super().__init__(
            name=name,
            value=[],
            is_required=is_required,
            validator=Validator(constraints=[constraints.IsListOf(item=constraints.IsObject())]),
            description=description
        )

    def resolve(self, value: Any, path: str) -> Any:
        value = super().resolve(value=value, path=path)
        return [self.schema.validate(bindings=item, prefix=f"{path}[{i}]") for i, item in enumerate(value)]


class SchemaField(NamedConfigAttribute):
    """
    Schema Field Class

    Wraps a field registered with a schema.

    Attributes:
        base (`Field`): The base field that the schema field is wrapping and performing
            validation for.

    """

    def __init__(self, base: Field) -> None:
        """
        Construct the schema field.

        :param base: Field, The wrapped field.

        """

        self.base = base
        super().__init__(name=base.name)

    def __str__(self) -> str:
        return f"Schema Field `{self.name}`"

    def __repr__(self) -> str:
        return str(self)

    def __copy__(self) -> 'SchemaField':
        return SchemaField(base=self.base.__copy__())

    def is_valid(self, value: Any, strict: bool = False) -> bool:
        """
        Return whether the value assignment is valid.

        :param value: Any, The value to check for validity.
        :param strict: bool, Flag indicating whether to strictly enforce the
            validator constraints and raise an exception if an error occurs.
        :return: bool

        """

        return self.base.validator.is_valid(value=value, strict=strict)

    @property
    def default(self) -> Any:
        """
        Get the default binding of the wrapped field.

        :return: Any

        """

        return copy.deepcopy(self.base.value)


T = TypeVar("T", bound=NamedConfigAttribute)


class FieldSet(Generic[T]):
    """
    Field Set

    Container object for fields, keyed by name in insertion order.

    """

    def __init__(self, fields: Optional[Union[T, List[T]]] = None) -> None:
        """
        Field Set Constructor

        :param fields: Optional[Union[T, List[T]]], The fields to add to the field set.
        :return: None

        """

        self._fields = {}
        self.add(fields=fields)

    def __len__(self) -> int:
        return len(self._fields)

    def __contains__(self, name: str) -> bool:
        return name in self._fields

    def __getitem__(self, arg: str) -> Union[None, T]:
        return self.get(name=arg)

    def get(self, name: str) -> Union[None, T]:
        """
        Get the field with the given name.

        :param name: str, The name of the field.
        :return: Union[None, T]

        """

        return self._fields.get(name)

    def add(self, fields: Union[T, List[T], 'FieldSet', None]) -> None:
        """
        Add the fields to the field set.

        :param fields: Union[T, List[T], FieldSet], The field(s) to add.
        :return: None

        """

        if fields is None:
            return

        if isinstance(fields, FieldSet):
            fields = fields.to_list()

        for field in (fields if isinstance(fields, list) else [fields]):
            self._fields[field.name] = field

    def remove(self, fields: Union[T, str, List[T], List[str], 'FieldSet']) -> None:
        """
        Remove the field(s) from the field set.

        :param fields: Union[T, str, List[T], List[str], FieldSet], Fields or field names.
        :return: None

        """

        if isinstance(fields, FieldSet):
            fields = fields.to_list()

        for field in (fields if isinstance(fields, list) else [fields]):
            self._fields.pop(field if isinstance(field, str) else field.name, None)

    def clear(self) -> None:
        self._fields = {}

    def names(self) -> List[str]:
        return list(self._fields.keys())

    def to_list(self) -> List[T]:
        """
        Get a copy of the fields.

        :return: List[T]

        """

        return [field.__copy__() for field in self._fields.values()]


class SchemaFieldSet(FieldSet[SchemaField]):
    """
    Schema Field Set

    Container object for schema fields.

    """

    def validate(self, bindings: Dict, prefix: str = "") -> Dict:
        """
        Validate the bindings against the field set and fill in defaults.

        :param bindings: Dict, The bindings to validate.
        :param prefix: str, Dotted path of the enclosing section.
        :return: Dict

        :raises: ConfigValidationError

        """

        validated_bindings = {}

        for field in self._fields.values():
            key = field.base.name
            path = f"{prefix}.{key}" if prefix else key
            value = bindings.get(key)
            value = field.base.resolve(value=value, path=path)

            if value is not None:
                validated_bindings[key] = value

        return validated_bindings
