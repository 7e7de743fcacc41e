import csv
import math
from typing import Dict, List, Generic, TypeVar, Union, Any, Iterable, Optional
from occflow import models
from occflow.models.utilities import Formatter


_M = TypeVar('_M', bound=models.JSONModel)


class Serializer(Generic[_M]):
    """
    Abstract Base Class for Object Serialization

    Maps model attributes onto flat CSV columns.

    Attributes:
        mapping (`Dict[str, str]`): The object attribute to column mapping.

    """

    def __init__(self, mapping: Dict[str, str]) -> None:
        """
        Serializer Constructor

        :param mapping: Dict[str, str], The object attribute to column mapping.
        :return: None

        """

        self.mapping = mapping

    def columns(self, obj: Optional[_M] = None) -> List[str]:
        """
        Get the column names, in order.

        :param obj: Optional[_M], The object whose columns are requested (some
            serializers derive columns from content).
        :return: List[str]

        """

        return list(self.mapping.values())

    def cell(self, value: Any) -> str:
        """
        Format a single value as a CSV cell.

        :param value: Any, The value to format.
        :return: str

        """

        if value is None:
            return ""
        elif isinstance(value, bool):
            return "true" if value else "false"
        elif isinstance(value, float):
            return Formatter.float_to_cell(value=value)

        return str(value)

    def serialize(self, obj: _M) -> Dict[str, str]:
        """
        Serialize the provided object into a CSV row.

        :param obj: _M, The object to serialize.
        :return: Dict[str, str]

        """

        data = obj.to_dict()
        return {column: self.cell(data.get(key)) for key, column in self.mapping.items()}

    def batch(self, objs: Union[_M, List[_M]]) -> List[Dict[str, str]]:
        """
        Batch serialize the objects.

        :param objs: Union[_M, List[_M]], The objects to serialize.
        :return: List[Dict[str, str]]

        """

        objs = objs if isinstance(objs, list) else [objs]
        return [self.serialize(obj=obj) for obj in objs]

    @property
    def mapping(self) -> Dict[str, str]:
        """
        The object attribute to column mapping.

        :return: Dict[str, str]

        """

        return self._mapping

    @mapping.setter
    def mapping(self, value: Dict[str, str]) -> None:
        self._mapping = value


class MetricsSerializer(Serializer[models.MetricsReport]):
    """
    Metrics Serializer Class

    One CSV row per report. Per-threshold lists expand into `rayiou@<t>`, `tp@<t>`,
    `fp@<t>` and `fn@<t>` columns.

    """

    SCALARS = [
        "mave", "epe3d", "epe3d_forward", "epe3d_backward",
        "depth_error", "depth_error_fg", "depth_outliers", "final_loss"
    ]

    def __init__(self) -> None:
        super().__init__(mapping={"variant": "variant", "scene": "scene", "seed": "seed"})

    def columns(self, obj: Optional[models.MetricsReport] = None) -> List[str]:
        thresholds = obj.thresholds if obj is not None else []
        columns = super().columns()
        columns += [f"rayiou@{t!r}" for t in thresholds] + ["rayiou_mean"]
        columns += self.SCALARS
        columns += [f"{name}@{t!r}" for name in ["tp", "fp", "fn"] for t in thresholds]
        return columns

    def serialize(self, obj: models.MetricsReport) -> Dict[str, str]:
        """
        Serialize a metrics report.

        :param obj: MetricsReport, The report.
        :return: Dict[str, str]

        """

        row = super().serialize(obj=obj)

        for i, t in enumerate(obj.thresholds):
            row[f"rayiou@{t!r}"] = self.cell(float(obj.ray_iou[i]))

        row["rayiou_mean"] = self.cell(obj.ray_iou_mean)

        for name in self.SCALARS:
            row[name] = self.cell(float(getattr(obj, name)))

        for name in ["tp", "fp", "fn"]:
            for i, t in enumerate(obj.thresholds):
                row[f"{name}@{t!r}"] = self.cell(int(getattr(obj, name)[i]))

        return row

    def deserialize(self, row: Dict[str, str]) -> models.MetricsReport:
        """
        Rebuild a report from a CSV row written by `serialize`.

        :param row: Dict[str, str], The CSV row.
        :return: MetricsReport

        """

        thresholds = [float(key.split("@", 1)[1]) for key in row.keys() if key.startswith("rayiou@")]
        report = models.MetricsReport(
            variant=row.get("variant"),
            scene=row.get("scene") or None,
            seed=int(row.get("seed", 0)),
            thresholds=thresholds,
            ray_iou=[float(row[f"rayiou@{t!r}"]) for t in thresholds],
            tp=[int(row[f"tp@{t!r}"]) for t in thresholds],
            fp=[int(row[f"fp@{t!r}"]) for t in thresholds],
            fn=[int(row[f"fn@{t!r}"]) for t in thresholds],
        )

        for name in self.SCALARS:
            value = Formatter.json_to_float(value=row.get(name))
            setattr(report, name, float("nan") if value is None else value)

        return report


class LossRecordSerializer(Serializer[models.LossRecord]):
    """
    Loss Record Serializer Class

    Columns are the iteration, every unweighted term (in the given order) and the total.

    Attributes:
        terms (`List[str]`): Term names, in column order.

    """

    def __init__(self, terms: List[str]) -> None:
        self.terms = terms
        super().__init__(mapping={"iteration": "iteration"})

    def columns(self, obj: Optional[models.LossRecord] = None) -> List[str]:
        return ["iteration"] + list(self.terms) + ["total"]

    def serialize(self, obj: models.LossRecord) -> Dict[str, str]:
        row = {"iteration": str(obj.iteration)}

        for term in self.terms:
            row[term] = self.cell(obj.terms.get(term, 0.0))

        row["total"] = self.cell(obj.total)
        return row


class ComparisonSerializer(Serializer[models.MetricsReport]):
    """
    Comparison Serializer Class

    Rows of an ablation table. Each metric is followed by its delta against the
    reference report (the first one compared).

    Attributes:
        reference (`MetricsReport`): The report deltas are taken against.

    """

    METRICS = ["rayiou_mean", "mave", "epe3d", "depth_error", "depth_error_fg"]

    def __init__(self, reference: models.MetricsReport) -> None:
        self.reference = reference
        super().__init__(mapping={"variant": "variant"})

    def columns(self, obj: Optional[models.MetricsReport] = None) -> List[str]:
        columns = ["variant"]
        columns += [f"rayiou@{t!r}" for t in self.reference.thresholds]

        for metric in self.METRICS:
            columns += [metric, f"delta_{metric}"]

        return columns

    @staticmethod
    def value(report: models.MetricsReport, metric: str) -> float:
        return report.ray_iou_mean if metric == "rayiou_mean" else float(getattr(report, metric))

    def serialize(self, obj: models.MetricsReport) -> Dict[str, str]:
        row = {"variant": obj.variant}

        for t, v in zip(obj.thresholds, obj.ray_iou):
            row[f"rayiou@{t!r}"] = self.cell(float(v))

        for metric in self.METRICS:
            value = self.value(report=obj, metric=metric)
            delta = value - self.value(report=self.reference, metric=metric)
            row[metric] = self.cell(value)
            row[f"delta_{metric}"] = self.cell(delta)

        return row


def write_csv(path: str, columns: List[str], rows: Iterable[Dict[str, str]]) -> None:
    """
    Write rows to a CSV file with a header and Unix line endings.

    :param path: str, The destination file.
    :param columns: List[str], The header.
    :param rows: Iterable[Dict[str, str]], The rows.
    :return: None

    """

    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n")
        writer.writeheader()

        for row in rows:
            writer.writerow(row)


def read_csv(path: str) -> List[Dict[str, str]]:
    """
    Read a CSV file written by `write_csv`.

    :param path: str, The source file.
    :return: List[Dict[str, str]]

    """

    with open(path, "r", newline="") as handle:
        return list(csv.DictReader(handle))


def format_table(columns: List[str], rows: List[Dict[str, str]]) -> str:
    """
    Render rows as an aligned plain-text table.

    Floats are shortened for display; the CSV keeps full precision.

    :param columns: List[str], The header.
    :param rows: List[Dict[str, str]], The rows.
    :return: str

    """

    def shorten(cell: str) -> str:
        try:
            value = float(cell)
        except ValueError:
            return cell

        if cell.lstrip("-").isdigit() or math.isnan(value):
            return cell

        return f"{value:.4f}"

    body = [[shorten(row.get(c, "")) for c in columns] for row in rows]
    widths = [max([len(c)] + [len(r[i]) for r in body]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in body]
    return "\n".join(lines)
