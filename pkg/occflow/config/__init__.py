import re
import json
from typing import Dict, List, Optional, Union
from occflow.config.fields import Field, SchemaField, SchemaFieldSet
from occflow.config.fields.exceptions import ConfigValidationError


class Schema(object):
    """
    Schema Class

    A named set of configuration fields. Nested objects are declared with
    `SectionField`/`ListSectionField`, each holding its own schema.

    Attributes:
        name (`str`): The name of the schema (used in diagnostics).
        allow_unknown (`bool`): Whether keys without a field are tolerated.

    """

    def __init__(
            self,
            name: str,
            fields: Optional[Union[Field, List[Field]]] = None,
            allow_unknown: Optional[bool] = False) -> None:
        """
        Schema Constructor

        :param name: str, The name of the schema.
        :param fields: Optional[Union[Field, List[Field]]], The fields of the schema.
        :param allow_unknown: Optional[bool], Whether to tolerate unknown keys.
        :return: None

        """

        self.name = name
        self.allow_unknown = allow_unknown
        self._fields = SchemaFieldSet()
        self.add(fields=fields)

    def __contains__(self, name: str) -> bool:
        return name in self._fields

    def __len__(self) -> int:
        return len(self._fields)

    def add(self, fields: Union[Field, List[Field]]) -> None:
        """
        Register field(s) with the schema.

        :param fields: Union[Field, List[Field]], The fields to register.
        :return: None

        """

        if fields is not None:
            fields = fields if isinstance(fields, list) else [fields]
            self._fields.add(fields=[SchemaField(base=field) for field in fields])

    def remove(self, names: Union[str, List[str]]) -> None:
        self._fields.remove(fields=names)

    def fields(self) -> List[SchemaField]:
        return self._fields.to_list()

    def field(self, name: str) -> Optional[Field]:
        wrapped = self._fields.get(name=name)
        return wrapped.base if wrapped is not None else None

    def defaults(self) -> Dict:
        """
        Return the configuration obtained by validating an empty object.

        :return: Dict

        """

        return self.validate(bindings={})

    def explain(self, prefix: str = "") -> List[Dict[str, str]]:
        """
        Describe every key, nested sections included, as rows of `key`, `default`,
        `required` and `description`.

        :param prefix: str, Dotted path of this object within the document.
        :return: List[Dict[str, str]]

        """

        rows = []

        for field in self.fields():
            base = field.base
            path = f"{prefix}.{base.name}" if prefix else base.name
            nested = getattr(base, "schema", None)

            if isinstance(nested, Schema):
                rows += nested.explain(prefix=f"{path}[]" if isinstance(base.value, list) else path)
                continue

            rows.append({
                "key": path,
                "default": "" if base.value is None else json.dumps(base.value, default=str),
                "required": "yes" if base.is_required else "",
                "description": base.description,
            })

        return rows

    def validate(self, bindings: Dict, prefix: str = "") -> Dict:
        """
        Validate the bindings and return them with defaults filled in.

        :param bindings: Dict, The bindings to validate.
        :param prefix: str, Dotted path of this object within the document.
        :return: Dict

        :raises: ConfigValidationError

        """

        if not isinstance(bindings, dict):
            raise ConfigValidationError(field=prefix or self.name, value=bindings, message="expected an object")

        if not self.allow_unknown:
            for key in bindings.keys():
                if key not in self._fields:
                    path = f"{prefix}.{key}" if prefix else key
                    raise ConfigValidationError(field=path, value=bindings[key], message="unknown key")

        return self._fields.validate(bindings=bindings, prefix=prefix)

    @property
    def name(self) -> str:
        """
        Get the name of the schema.

        :return: str

        """

        return self._name

    @name.setter
    def name(self, value: str) -> None:
        self._name = value

    @property
    def allow_unknown(self) -> bool:
        return self._allow_unknown

    @allow_unknown.setter
    def allow_unknown(self, value: bool) -> None:
        self._allow_unknown = bool(value)


def locate(text: str, path: str) -> Optional[int]:
    """
    Find the 1-based line where the key named by a dotted path appears in a JSON text.

    Keys are searched in sequence, each after the previous one; list indices are skipped.

    :param text: str, The JSON source text.
    :param path: str, Dotted path, e.g. `scene.primitives[2].radius`.
    :return: Optional[int]

    """

    position = 0
    found = None

    for part in re.sub(r"\[\d+\]", "", path).split("."):
        if not part:
            continue

        match = re.compile(rf'"{re.escape(part)}"\s*:').search(text, position)

        if match is None:
            break

        position = match.end()
        found = position

    return None if found is None else text.count("\n", 0, found) + 1
