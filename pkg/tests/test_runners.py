import json
import math
import os
import tempfile
import unittest
from typing import Dict
from occflow import runners
from occflow.config import Schema
from occflow.enums import Ablation, RayLabel
from occflow.exceptions import ArtifactNotFoundError, ConfigError, SceneMismatchError
from occflow.models import MetricsReport
from occflow.models.serializers import MetricsSerializer, read_csv, write_csv
from occflow.schemas import EXPERIMENT_SCHEMA


CONFIGS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "configs")
SMOKE = os.path.join(CONFIGS, "smoke.json")
BROKEN = os.path.join(CONFIGS, "broken.json")


def quick_experiment(directory: str) -> Dict:
    """
    The smoke experiment shortened to two iterations, writing into `directory`.

    :param directory: str, The output directory.
    :return: Dict

    """

    with open(SMOKE, "r") as handle:
        experiment = json.load(handle)

    experiment["schedule"]["iterations"] = 2
    experiment["evaluation"].update({"rays_per_pose": 16, "samples": 16, "flow_points": 8, "future_poses": 1})
    experiment["output"] = os.path.join(directory, "out")
    return experiment


def write_json(path: str, content: Dict) -> str:
    with open(path, "w") as handle:
        json.dump(content, handle, indent=2)

    return path


def write_report(path: str, report: MetricsReport) -> str:
    serializer = MetricsSerializer()
    write_csv(path, serializer.columns(report), serializer.batch(report))
    return path


def read_bytes(path: str) -> bytes:
    with open(path, "rb") as handle:
        return handle.read()


class TestLoadExperiment(unittest.TestCase):
    """
    Test Load Experiment Class

    """

    def setUp(self) -> None:
        """
        Set up a scratch directory.

        :return: None

        """

        self.directory = tempfile.TemporaryDirectory()

    def tearDown(self) -> None:
        self.directory.cleanup()

    def write(self, name: str, text: str) -> str:
        path = os.path.join(self.directory.name, name)

        with open(path, "w") as handle:
            handle.write(text)

        return path

    def test_smoke(self) -> None:
        """
        Test the smoke experiment and the command-line overrides.

        :return: None

        """

        cfg = runners.load_experiment(SMOKE)
        self.assertEqual(cfg.name, "smoke")
        self.assertEqual(cfg.scene.name, "smoke")
        self.assertEqual(tuple(cfg.scene.grid.dims), (16, 16, 8))
        self.assertEqual(cfg.schedule.iterations, 20)
        self.assertEqual(cfg.similarity.window, 5)
        self.assertEqual(cfg.weights.lambda_s_d, 0.01)
        self.assertEqual(cfg.evaluation.mave_threshold, 0.5)
        self.assertEqual(cfg.variant, "full")

        cfg = runners.load_experiment(SMOKE, seed=7, output="elsewhere", ablations=["no-sim"])
        self.assertEqual(cfg.seed, 7)
        self.assertEqual(cfg.output, "elsewhere")
        self.assertTrue(cfg.has(Ablation.NO_SIM))
        self.assertEqual(cfg.variant, "no-sim")
        self.assertRaises(ConfigError, runners.load_experiment, **{"path": SMOKE, "output": ""})

    def test_scene_file(self) -> None:
        """
        Test a scene referenced by file name.

        :return: None

        """

        cfg = runners.load_experiment(os.path.join(CONFIGS, "base.json"))
        self.assertEqual(cfg.scene.name, "desk")
        self.assertEqual(len(cfg.scene.cameras), 4)

    def test_builtin_scene(self) -> None:
        """
        Test the built-in scene and a volume override.

        :return: None

        """

        path = self.write("desk.json", json.dumps({"scene": "desk", "grid": {"resolution": 0.4}}))
        cfg = runners.load_experiment(path)
        self.assertEqual(cfg.scene.name, "desk")
        self.assertEqual(cfg.scene.grid.resolution, 0.4)
        self.assertEqual(list(cfg.scene.grid.extent), [12.8, 12.8, 6.4])

    def test_broken(self) -> None:
        """
        Test that the diagnostic names the field and its line.

        :return: None

        """

        with self.assertRaises(ConfigError) as context:
            runners.load_experiment(BROKEN)

        self.assertEqual(context.exception.line, 5)
        self.assertIn("similarity.window", str(context.exception))
        self.assertEqual(context.exception.exit_code, 2)

    def test_inline_scene_error(self) -> None:
        """
        Test the line of an invalid value inside an inline scene.

        :return: None

        """

        path = self.write("inline.json", '{\n  "scene": {\n    "frames": 0\n  }\n}\n')

        with self.assertRaises(ConfigError) as context:
            runners.load_experiment(path)

        self.assertIn("scene.frames", str(context.exception))
        self.assertEqual(context.exception.line, 3)

    def test_invalid_files(self) -> None:
        """
        Test missing files, malformed JSON and missing scene files.

        :return: None

        """

        self.assertRaises(ArtifactNotFoundError, runners.load_experiment, **{
            "path": os.path.join(self.directory.name, "missing.json")
        })

        with self.assertRaises(ConfigError) as context:
            runners.load_experiment(self.write("bad.json", '{\n  "scene": "desk",\n}\n'))

        self.assertEqual(context.exception.line, 3)

        self.assertRaises(ConfigError, runners.load_experiment, **{"path": self.write("list.json", "[1, 2]")})
        self.assertRaises(ArtifactNotFoundError, runners.load_experiment, **{
            "path": self.write("elsewhere.json", json.dumps({"scene": "nowhere.json"}))
        })

    def test_command_schema(self) -> None:
        """
        Test that the file is checked against the schema it is loaded with.

        :return: None

        """

        path = self.write("seeded.json", json.dumps({"scene": "desk", "seed": 3}))
        self.assertEqual(runners.load_experiment(path).seed, 3)

        unseeded = Schema(name="experiment", fields=[f.base for f in EXPERIMENT_SCHEMA.fields()])
        unseeded.remove("seed")

        with self.assertRaises(ConfigError) as context:
            runners.load_experiment(path, schema=unseeded)

        self.assertIn("seed", str(context.exception))
        self.assertEqual(runners.load_experiment(path, schema=EXPERIMENT_SCHEMA).seed, 3)


class TestObjective(unittest.TestCase):
    """
    Test Objective Class

    Test class for the ablation switches of the training objective.

    """

    def test_full(self) -> None:
        """
        Test the full model.

        :return: None

        """

        objective = runners.objective(runners.load_experiment(SMOKE))
        self.assertTrue(objective.aggregation.static and objective.aggregation.dynamic)
        self.assertTrue(objective.similarity)
        self.assertFalse(objective.single)
        self.assertEqual(objective.samples, 24)

    def test_ablations(self) -> None:
        """
        Test each ablation and that the configured aggregation is left alone.

        :return: None

        """

        cfg = runners.load_experiment(SMOKE, ablations=["no-ta"])
        objective = runners.objective(cfg)
        self.assertFalse(objective.aggregation.static or objective.aggregation.dynamic)
        self.assertTrue(cfg.aggregation.static)

        objective = runners.objective(runners.load_experiment(SMOKE, ablations=["no-dyn-ta"]))
        self.assertTrue(objective.aggregation.static)
        self.assertFalse(objective.aggregation.dynamic)

        self.assertFalse(runners.objective(runners.load_experiment(SMOKE, ablations=["no-sim"])).similarity)
        self.assertTrue(runners.objective(runners.load_experiment(SMOKE, ablations=["single-sdf"])).single)


class TestPipeline(unittest.TestCase):
    """
    Test Pipeline Class

    """

    def setUp(self) -> None:
        """
        Set up a two-iteration experiment.

        :return: None

        """

        self.directory = tempfile.TemporaryDirectory()
        path = write_json(os.path.join(self.directory.name, "quick.json"), quick_experiment(self.directory.name))
        self.cfg = runners.load_experiment(path)

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_run(self) -> None:
        """
        Test that a run writes every artifact.

        :return: None

        """

        report = runners.run_experiment(self.cfg)
        self.assertEqual(report.variant, "full")
        self.assertEqual(len(report.ray_iou), 3)
        self.assertTrue(math.isfinite(report.final_loss))

        for name in ["scene.json", "checkpoint.grid", "loss_trace.csv", "metrics.csv", "metrics.json"]:
            self.assertTrue(os.path.isfile(runners.artifact(self.cfg, name)), name)

        self.assertEqual(len(os.listdir(runners.artifact(self.cfg, runners.RAYS_DIR))), 8)
        self.assertTrue(os.path.isdir(runners.artifact(self.cfg, runners.MASKS_DIR)))
        self.assertTrue(os.path.isfile(runners.artifact(self.cfg, runners.RENDERS_DIR, "depth_t001.pgm")))
        self.assertTrue(os.path.isfile(runners.artifact(self.cfg, runners.RENDERS_DIR, "similarity_t002.pgm")))

        trace = read_csv(runners.artifact(self.cfg, runners.LOSS_TRACE_FILE))
        self.assertEqual([row["iteration"] for row in trace], ["0", "1"])
        self.assertAlmostEqual(runners.final_loss(self.cfg), float(trace[-1]["total"]))

        rows = read_csv(runners.artifact(self.cfg, runners.METRICS_FILE))
        self.assertEqual(MetricsSerializer().deserialize(rows[0]).variant, "full")

    def test_deterministic(self) -> None:
        """
        Test that two runs with one seed write identical traces and metrics on any thread count.

        :return: None

        """

        contents = []

        for threads in [1, 2]:
            runners.configure_torch(threads)
            self.cfg.output = os.path.join(self.directory.name, f"threads_{threads}")
            runners.run_experiment(self.cfg)
            contents.append([read_bytes(runners.artifact(self.cfg, name)) for name in [runners.LOSS_TRACE_FILE, runners.METRICS_FILE]])

        runners.configure_torch(1)
        self.assertEqual(contents[0], contents[1])

    def test_steps(self) -> None:
        """
        Test the steps chained through their artifacts.

        :return: None

        """

        oracle, batches = runners.generate_scene(self.cfg)
        self.assertEqual(len(batches), 8)
        labeled = runners.label_rays(self.cfg, oracle, runners.read_batches(runners.artifact(self.cfg, runners.RAYS_DIR)))
        self.assertTrue(any(b.label_mask(RayLabel.DYNAMIC).any() for b in labeled))

        self.assertRaises(ArtifactNotFoundError, runners.load_fields, **{"cfg": self.cfg, "oracle": oracle})
        state = runners.train(self.cfg, oracle, runners.read_batches(runners.artifact(self.cfg, runners.LABELS_DIR)))
        self.assertEqual(state.iteration, 2)

        fields = runners.load_fields(self.cfg, oracle)
        self.assertEqual(fields.frames, 4)
        self.assertAlmostEqual(float(fields.a), float(state.fields.a), places=5)

        self.assertRaises(ArtifactNotFoundError, runners.read_batches, **{
            "directory": os.path.join(self.directory.name, "empty")
        })


class TestCompare(unittest.TestCase):
    """
    Test Compare Class

    """

    def setUp(self) -> None:
        """
        Set up the reports of two variants of one scene.

        :return: None

        """

        self.directory = tempfile.TemporaryDirectory()
        self.full = MetricsReport(
            variant="full", scene="desk", seed=0, thresholds=[0.25, 0.5, 1.0], ray_iou=[0.4, 0.6, 0.8],
            tp=[4, 6, 8], fp=[3, 2, 1], fn=[3, 2, 1], mave=0.3, epe3d=0.1, depth_error=0.2, depth_error_fg=0.4,
        )
        self.ablated = MetricsReport(
            variant="no-ta", scene="desk", seed=0, thresholds=[0.25, 0.5, 1.0], ray_iou=[0.3, 0.5, 0.7],
            tp=[3, 5, 7], fp=[4, 3, 2], fn=[3, 2, 1], mave=0.5, epe3d=0.2, depth_error=0.3, depth_error_fg=0.6,
        )
        self.paths = [
            write_report(os.path.join(self.directory.name, "full.csv"), self.full),
            write_report(os.path.join(self.directory.name, "no_ta.csv"), self.ablated),
        ]

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_compare(self) -> None:
        """
        Test the table against the reference and the written comparison.

        :return: None

        """

        columns, rows = runners.compare(self.paths, output=self.directory.name)
        self.assertEqual(columns[0], "variant")
        self.assertEqual([row["variant"] for row in rows], ["full", "no-ta"])
        self.assertAlmostEqual(float(rows[0]["delta_mave"]), 0.0)
        self.assertAlmostEqual(float(rows[1]["delta_mave"]), 0.2)
        self.assertAlmostEqual(float(rows[1]["delta_rayiou_mean"]), -0.1)
        self.assertEqual(len(read_csv(os.path.join(self.directory.name, runners.COMPARISON_FILE))), 2)

    def test_errors(self) -> None:
        """
        Test too few reports, other scenes and missing files.

        :return: None

        """

        self.assertRaises(ConfigError, runners.compare, **{"paths": self.paths[:1]})

        self.ablated.seed = 1
        other = write_report(os.path.join(self.directory.name, "other.csv"), self.ablated)
        self.assertRaises(SceneMismatchError, runners.compare, **{"paths": [self.paths[0], other]})
        self.assertRaises(ArtifactNotFoundError, runners.compare, **{
            "paths": [self.paths[0], os.path.join(self.directory.name, "missing.csv")]
        })


if __name__ == "__main__":
    unittest.main()
