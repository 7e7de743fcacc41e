import unittest
from typing import Dict
from occflow import models
from occflow.enums import LabelSource, Shape
from occflow.models import deserializers


class DeserializationTestCase(object):
    """
    Deserialization Test Case Class

    Attributes:
        data (`Dict`): The data to deserialize in an object.
        is_valid (`bool`): Flag indicating whether the test case data represents a valid
            deserialization of an object.

    """

    def __init__(self, data: Dict, is_valid: bool = True) -> None:
        """
        Test Case Constructor

        :param data: Dict, The data to deserialize in an object.
        :param is_valid: bool, Flag indicating whether the test case data represents a valid
            deserialization of an object.
        :return: None

        """

        self.data = data
        self.is_valid = is_valid

    @property
    def data(self) -> Dict:
        return self._data

    @data.setter
    def data(self, value: Dict) -> None:
        self._data = value

    @property
    def is_valid(self) -> bool:
        return self._is_valid

    @is_valid.setter
    def is_valid(self, value: bool) -> None:
        self._is_valid = value


class TestDeserializer(unittest.TestCase):
    """
    Test Deserializer Class

    Test class for testing the expected behavior of the deserializer object(s).

    """

    """
    The test cases to check against the deserializer.

    """
    test_cases = [
        DeserializationTestCase(
            data={
                "origin": [0.0, 0.0, 0.0],
                "extent": [1.0, 2.0, 1.0],
                "resolution": 0.25,
            }
        )
    ]

    """
    The deserializer to test.

    """
    deserializer = deserializers.GridSpecDeserializer()

    def __test(self, model: models.JSONModel, test_case: DeserializationTestCase) -> None:
        data = model.to_json()

        for k, v in test_case.data.items():
            if isinstance(v, dict) or (isinstance(v, list) and any(isinstance(i, dict) for i in v)):
                continue

            self.assertEqual(v, data[k])

    def test_deserialize(self) -> None:
        """
        Test deserializing the provided data into an object.

        :return: None

        """

        for test_case in self.test_cases:
            if test_case.is_valid:
                model = self.deserializer.deserialize(data=test_case.data)
                self.__test(model=model, test_case=test_case)
            else:
                self.assertRaises(ValueError, self.deserializer.deserialize, **{"data": test_case.data})

    def test_deserialize_batch(self) -> None:
        """
        Test deserializing the list of entities into objects.

        :return: None

        """

        cases = [test_case for test_case in self.test_cases if test_case.is_valid]
        objs = self.deserializer.batch(data=[test_case.data for test_case in cases])
        self.assertEqual(len(objs), len(cases))

        for i in range(0, len(objs)):
            self.__test(model=objs[i], test_case=cases[i])


class TestPrimitiveDeserializer(TestDeserializer):
    """
    Test Primitive Deserializer Class

    """

    def setUp(self) -> None:
        """
        Set up the primitives, the last three of which break an invariant.

        :return: None

        """

        self.test_cases = [
            DeserializationTestCase(
                data={
                    "name": "crate",
                    "shape": "box",
                    "center": [2.0, 1.0, 0.5],
                    "half_extents": [0.5, 0.5, 0.5],
                    "albedo": [0.6, 0.4, 0.2],
                }
            ),
            DeserializationTestCase(
                data={
                    "name": "cyclist",
                    "shape": "sphere",
                    "center": [4.0, -1.0, 0.8],
                    "radius": 0.6,
                    "velocity": [0.0, 0.2, 0.0],
                    "dynamic": True,
                }
            ),
            DeserializationTestCase(data={"name": "crate", "shape": "box"}, is_valid=False),
            DeserializationTestCase(data={"name": "ball", "shape": "sphere", "radius": 0.0}, is_valid=False),
            DeserializationTestCase(
                data={"name": "ball", "shape": "sphere", "radius": 1.0, "velocity": [1.0, 0.0, 0.0]},
                is_valid=False
            ),
        ]
        self.deserializer = deserializers.PrimitiveDeserializer()

    def test_shape(self) -> None:
        """
        Test that shapes are coerced to the enumeration.

        :return: None

        """

        primitive = self.deserializer.deserialize(data=self.test_cases[0].data)
        self.assertEqual(primitive.shape, Shape.BOX)


class TestSceneDeserializer(TestDeserializer):
    """
    Test Scene Deserializer Class

    """

    def setUp(self) -> None:
        """
        Set up a scene with every nested section.

        :return: None

        """

        self.test_cases = [
            DeserializationTestCase(
                data={
                    "name": "tiny",
                    "preset": "desk",
                    "grid": {"origin": [-1.6, -1.6, -0.4], "extent": [3.2, 3.2, 1.6], "resolution": 0.2},
                    "primitives": [
                        {"name": "ground", "shape": "ground-plane", "center": [0.0, 0.0, 0.0]},
                        {"name": "ball", "shape": "sphere", "radius": 0.3, "velocity": [0.1, 0.0, 0.0], "dynamic": True},
                    ],
                    "cameras": [{"name": "front", "width": 16, "height": 12, "fov": 90.0}],
                    "lidar": {"azimuths": 48, "channels": 6},
                    "ego": {"velocity": [0.2, 0.0, 0.0]},
                    "frames": 4,
                    "frame_dt": 0.1,
                    "seed": 3,
                }
            )
        ]
        self.deserializer = deserializers.SceneDeserializer()

    def test_nested(self) -> None:
        """
        Test that nested sections become models.

        :return: None

        """

        scene = self.deserializer.deserialize(data=self.test_cases[0].data)
        self.assertEqual(scene.grid.dims, (16, 16, 8))
        self.assertEqual([p.shape for p in scene.primitives], [Shape.GROUND_PLANE, Shape.SPHERE])
        self.assertEqual(scene.cameras[0].width, 16)
        self.assertEqual(scene.lidar.azimuths, 48)
        self.assertEqual(scene.lidar.elevation, [-30.0, 5.0])
        self.assertEqual(scene.ego.velocity, [0.2, 0.0, 0.0])

    def test_no_lidar(self) -> None:
        """
        Test that a null lidar disables the sensor.

        :return: None

        """

        data = dict(self.test_cases[0].data)
        data["lidar"] = None
        self.assertIsNone(self.deserializer.deserialize(data=data).lidar)


class TestAggregationDeserializer(TestDeserializer):
    """
    Test Aggregation Deserializer Class

    """

    def setUp(self) -> None:
        """
        Set up the flat aggregation section.

        :return: None

        """

        self.test_cases = [
            DeserializationTestCase(data={"lambda_ag": 0.25, "static": True, "dynamic": False}),
            DeserializationTestCase(data={"lambda_ag": 1.5}, is_valid=False),
        ]
        self.deserializer = deserializers.AggregationDeserializer()

    def test_sharpness(self) -> None:
        """
        Test that the flat temperature and sharpness nest into the shared parameters.

        :return: None

        """

        params = self.deserializer.deserialize(data={"tau": 4.0, "a_init": 20.0})
        self.assertEqual(params.sharpness.tau, 4.0)
        self.assertEqual(params.sharpness.a, 20.0)

        params = self.deserializer.deserialize(data={})
        self.assertEqual(params.sharpness.a, 10.0)
        self.assertRaises(ValueError, self.deserializer.deserialize, **{"data": {"a_init": 0.0}})


class TestLabelingDeserializer(TestDeserializer):
    """
    Test Labeling Deserializer Class

    """

    def setUp(self) -> None:
        """
        Set up the labeling section.

        :return: None

        """

        self.test_cases = [
            DeserializationTestCase(data={"source": "oracle", "noise": 0.1}),
            DeserializationTestCase(data={"source": "lidar"}, is_valid=False),
        ]
        self.deserializer = deserializers.LabelingDeserializer()

    def test_source(self) -> None:
        """
        Test the label source coercion and default.

        :return: None

        """

        self.assertEqual(self.deserializer.deserialize(data={"source": "oracle"}).source, LabelSource.ORACLE)
        self.assertEqual(self.deserializer.deserialize(data={}).source, LabelSource.MASKS)


class TestExperimentDeserializer(unittest.TestCase):
    """
    Test Experiment Deserializer Class

    """

    def setUp(self) -> None:
        """
        Set up an experiment with an inline scene.

        :return: None

        """

        self.data = {
            "name": "smoke",
            "scene": {
                "name": "tiny",
                "grid": {"origin": [-1.6, -1.6, -0.4], "extent": [3.2, 3.2, 1.6], "resolution": 0.4},
                "primitives": [],
                "cameras": [],
                "lidar": None,
            },
            "weights": {"lambda_sim": 2.0},
            "similarity": {"window": 5},
            "schedule": {"iterations": 20},
            "seed": 4,
            "output": "out/smoke",
            "ablations": ["no-sim"],
        }
        self.deserializer = deserializers.ExperimentDeserializer()

    def test_deserialize(self) -> None:
        """
        Test the sections and the values mirrored into the similarity settings.

        :return: None

        """

        cfg = self.deserializer.deserialize(data=self.data)
        self.assertEqual(cfg.name, "smoke")
        self.assertEqual(cfg.seed, 4)
        self.assertEqual(cfg.output, "out/smoke")
        self.assertEqual(cfg.variant, "no-sim")
        self.assertEqual(cfg.schedule.iterations, 20)
        self.assertEqual(cfg.similarity.window, 5)
        self.assertEqual(cfg.similarity.cell, 0.4)
        self.assertEqual(cfg.similarity.lambda_sim, 2.0)
        self.assertEqual(cfg.weights.lambda_r, 10.0)
        self.assertEqual(cfg.evaluation.thresholds, [0.25, 0.5, 1.0])

    def test_invalid(self) -> None:
        """
        Test that model invariants surface as value errors.

        :return: None

        """

        self.data["seed"] = -1
        self.assertRaises(ValueError, self.deserializer.deserialize, **{"data": self.data})


if __name__ == "__main__":
    unittest.main()
