from occflow import models
from occflow.enums import LabelSource
from typing import Dict, List, Generic, TypeVar, Union, Type


_J = TypeVar('_J', bound=models.JSONModel)


class Deserializer(Generic[_J]):
    """
    Abstract Base Class for JSON Deserialization

    """

    def __init__(self, cls: Type[_J]) -> None:
        """
        Deserializer Constructor

        :param cls: Type, The model type to deserialize.
        :return: None

        """

        self._cls = cls

    def deserialize(self, data: Dict) -> _J:
        """
        Method for deserializing the provided object data into the associated object.

        :param data: Dict, The validated object data.
        :return: _J

        """

        return self._cls.from_dict(data=data)

    def batch(self, data: Union[Dict, List[Dict]]) -> List[_J]:
        """
        Batch deserialize the objects.

        :param data: Union[Dict, List[Dict]], The object data to deserialize.
        :return: List[_J]

        """

        data = data if isinstance(data, list) else [data]
        return [self.deserialize(data=obj_data) for obj_data in data]


class GridSpecDeserializer(Deserializer[models.GridSpec]):
    def __init__(self) -> None:
        super().__init__(cls=models.GridSpec)


class PrimitiveDeserializer(Deserializer[models.ScenePrimitive]):
    """
    Primitive Deserializer Class

    """

    def __init__(self) -> None:
        super().__init__(cls=models.ScenePrimitive)

    def deserialize(self, data: Dict) -> models.ScenePrimitive:
        """
        Deserialize and check a primitive.

        :param data: Dict, The validated primitive object.
        :return: ScenePrimitive

        :raises: ValueError

        """

        primitive = super().deserialize(data=data)
        primitive.check()
        return primitive


class CameraDeserializer(Deserializer[models.PinholeCamera]):
    def __init__(self) -> None:
        super().__init__(cls=models.PinholeCamera)


class LidarDeserializer(Deserializer[models.LidarScan]):
    def __init__(self) -> None:
        super().__init__(cls=models.LidarScan)


class EgoDeserializer(Deserializer[models.EgoTrajectory]):
    def __init__(self) -> None:
        super().__init__(cls=models.EgoTrajectory)


class SceneDeserializer(Deserializer[models.SceneDescription]):
    """
    Scene Deserializer Class

    Builds a scene description, including its nested grid, primitives, sensors and ego
    trajectory, from a validated scene object.

    """

    def __init__(self) -> None:
        super().__init__(cls=models.SceneDescription)

    def deserialize(self, data: Dict) -> models.SceneDescription:
        nested = {"grid", "primitives", "cameras", "lidar", "ego"}
        scene = super().deserialize(data={k: v for k, v in data.items() if k not in nested})

        if "grid" in data:
            scene.grid = GridSpecDeserializer().deserialize(data=data["grid"])

        scene.primitives = PrimitiveDeserializer().batch(data=data.get("primitives", []))
        scene.cameras = CameraDeserializer().batch(data=data.get("cameras", []))
        scene.lidar = LidarDeserializer().deserialize(data=data["lidar"]) if data.get("lidar") is not None else None

        if "ego" in data:
            scene.ego = EgoDeserializer().deserialize(data=data["ego"])

        return scene


class WeightsDeserializer(Deserializer[models.LossWeights]):
    def __init__(self) -> None:
        super().__init__(cls=models.LossWeights)


class AggregationDeserializer(Deserializer[models.AggParams]):
    """
    Aggregation Deserializer Class

    The config keeps `tau` and `a_init` flat; the model nests them in `SharpnessParams`.

    """

    def __init__(self) -> None:
        super().__init__(cls=models.AggParams)

    def deserialize(self, data: Dict) -> models.AggParams:
        params = super().deserialize(data={k: v for k, v in data.items() if k not in {"tau", "a_init"}})
        params.sharpness = models.SharpnessParams(a=data.get("a_init", 10.0), tau=data.get("tau", 2.0))
        return params


class SimilarityDeserializer(Deserializer[models.SimFlowParams]):
    def __init__(self) -> None:
        super().__init__(cls=models.SimFlowParams)


class LabelingDeserializer(Deserializer[models.LabelingParams]):
    def __init__(self) -> None:
        super().__init__(cls=models.LabelingParams)

    def deserialize(self, data: Dict) -> models.LabelingParams:
        data = dict(data)
        data["source"] = LabelSource(data.get("source", LabelSource.MASKS.value))
        return super().deserialize(data=data)


class ScheduleDeserializer(Deserializer[models.Schedule]):
    def __init__(self) -> None:
        super().__init__(cls=models.Schedule)


class EvalConfigDeserializer(Deserializer[models.EvalConfig]):
    def __init__(self) -> None:
        super().__init__(cls=models.EvalConfig)


class ExperimentDeserializer(Deserializer[models.ExperimentConfig]):
    """
    Experiment Deserializer Class

    Expects the scene to be resolved into an object already (see `occflow.runners.load_experiment`).

    """

    def __init__(self) -> None:
        super().__init__(cls=models.ExperimentConfig)

    def deserialize(self, data: Dict) -> models.ExperimentConfig:
        """
        Deserialize the experiment and all of its sections.

        :param data: Dict, The validated experiment object with an inline scene.
        :return: ExperimentConfig

        """

        sections = {"scene", "weights", "aggregation", "similarity", "labeling", "schedule", "evaluation"}
        experiment = super().deserialize(data={k: v for k, v in data.items() if k not in sections})
        experiment.scene = SceneDeserializer().deserialize(data=data["scene"])
        experiment.weights = WeightsDeserializer().deserialize(data=data.get("weights", {}))
        experiment.aggregation = AggregationDeserializer().deserialize(data=data.get("aggregation", {}))
        experiment.similarity = SimilarityDeserializer().deserialize(data=data.get("similarity", {}))
        experiment.similarity.cell = experiment.scene.grid.resolution
        experiment.similarity.lambda_sim = experiment.weights.lambda_sim
        experiment.labeling = LabelingDeserializer().deserialize(data=data.get("labeling", {}))
        experiment.schedule = ScheduleDeserializer().deserialize(data=data.get("schedule", {}))
        experiment.evaluation = EvalConfigDeserializer().deserialize(data=data.get("evaluation", {}))
        return experiment
