import math
from enum import Enum
from typing import Dict, Any, Union
import numpy as np


class Formatter(object):
    """
    Formatter Class

    Helper class for formatting values for model (de)serialization.

    """

    @staticmethod
    def _jsonify_value(value: Any) -> Any:
        """
        Make the provided value JSON safe.

        Arrays become (nested) lists, enums their values and non-finite floats the strings
        `"nan"`, `"inf"` and `"-inf"`.

        :param value: Any, The value to jsonify.
        :return: Any

        """

        if value is not None:
            if isinstance(value, Enum):
                return value.value
            elif isinstance(value, np.ndarray):
                return Formatter._jsonify_value(value=value.tolist())
            elif isinstance(value, (bool, np.bool_)):
                return bool(value)
            elif isinstance(value, (np.integer,)):
                return int(value)
            elif isinstance(value, (float, np.floating)):
                return Formatter.float_to_json(value=float(value))
            elif isinstance(value, dict):
                return Formatter.jsonify(data=value)
            elif isinstance(value, (list, tuple)):
                return [Formatter._jsonify_value(value=item) for item in value]
            elif hasattr(value, "to_json"):
                return Formatter.jsonify(data=value.to_json())
            else:
                return value

    @staticmethod
    def jsonify(data: Dict) -> Dict:
        """
        Convert the data dictionary into a JSON-compatible dictionary.

        :param data: Dict, The data dictionary to convert (objects/values are replaced
            by their json representations, where possible).
        :return: Dict

        """

        return {str(key): Formatter._jsonify_value(value=value) for key, value in data.items()}

    @staticmethod
    def float_to_json(value: float) -> Union[float, str]:
        """
        Encode a float, spelling out non-finite values.

        :param value: float, The value to encode.
        :return: Union[float, str]

        """

        if math.isnan(value):
            return "nan"
        elif math.isinf(value):
            return "inf" if value > 0 else "-inf"

        return value

    @staticmethod
    def json_to_float(value: Union[float, int, str, None]) -> Union[float, None]:
        """
        Decode a float written by `float_to_json` (or by `repr` into a CSV cell).

        :param value: Union[float, int, str, None], The encoded value.
        :return: Union[float, None]

        """

        if (value is None) or (isinstance(value, str) and (value.strip() == "")):
            return None

        return float(value)

    @staticmethod
    def float_to_cell(value: Union[float, None]) -> str:
        """
        Write a float into a CSV cell losslessly.

        :param value: Union[float, None], The value to write.
        :return: str

        """

        if value is None:
            return ""

        return repr(float(value))
