import math
import os
import tempfile
import unittest
import numpy as np
import torch
from occflow import optimization
from occflow.exceptions import DivergenceError
from occflow.losses import Objective
from occflow.models import AggParams, LossWeights, Schedule, SimFlowParams
from occflow.rays import make_batches
from occflow.scenes import SceneOracle
from tests.fixtures import tiny_scene


def small_schedule(**overrides) -> Schedule:
    settings = dict(
        iterations=3, lidar_rays=16, camera_patches=1, patch_size=4, reg_points=8, samples=8, window_k=2, log_every=1
    )
    settings.update(overrides)
    return Schedule(**settings)


class TestTrainingData(unittest.TestCase):
    """
    Test Training Data Class

    """

    def setUp(self) -> None:
        """
        Set up the oracle batches of the tiny scene.

        :return: None

        """

        self.scene = tiny_scene()
        oracle = SceneOracle(scene=self.scene)
        self.poses = [oracle.pose(t) for t in range(self.scene.frames)]
        batches = make_batches(oracle, self.scene.cameras, self.scene.lidar, range(self.scene.frames), seed=0)
        self.data = optimization.TrainingData(
            spec=self.scene.grid, poses=self.poses, cameras=self.scene.cameras, batches=batches
        )
        self.rng = np.random.default_rng(0)

    def test_index(self) -> None:
        """
        Test that batches are indexed by frame and camera.

        :return: None

        """

        self.assertEqual(self.data.frames, 4)
        self.assertEqual(sorted(self.data.lidar), [0, 1, 2, 3])
        self.assertIn((2, "front"), self.data.camera)

        image = self.data.image(1, self.scene.cameras[0])
        self.assertEqual(image.shape, (12, 16, 3))
        self.assertTrue(np.all((image >= 0.0) & (image <= 1.0)))
        self.assertIs(self.data.image(1, self.scene.cameras[0]), image)

    def test_rays(self) -> None:
        """
        Test the static and dynamic ray draws.

        :return: None

        """

        static = self.data.static_rays(1, count=12, window=2, rng=self.rng)
        self.assertGreater(len(static), 0)
        self.assertLessEqual(len(static), 12)
        self.assertTrue(np.all(np.isfinite(static.ranges)))

        dynamic = self.data.dynamic_rays(1, count=5, rng=self.rng)
        self.assertEqual(len(dynamic), 5)
        self.assertEqual(len(self.data.dynamic_rays(1, count=0, rng=self.rng)), 0)
        self.assertEqual(len(self.data.dynamic_rays(7, count=5, rng=self.rng)), 0)

    def test_patches(self) -> None:
        """
        Test that patches carry their neighbor frames as sources.

        :return: None

        """

        patches = self.data.patches(1, count=2, size=4, rng=self.rng)
        self.assertEqual(len(patches), 2)
        self.assertEqual(patches[0].target.shape, (4, 4, 3))
        self.assertEqual(len(patches[0].origins), 16)
        self.assertEqual(len(patches[0].sources), 2)
        self.assertEqual(len(self.data.patches(3, count=1, size=4, rng=self.rng)[0].sources), 1)
        self.assertEqual(self.data.patches(1, count=1, size=20, rng=self.rng), [])

    def test_sample(self) -> None:
        """
        Test the split of an iteration's rays between the two fields.

        :return: None

        """

        batch = self.data.sample(1, small_schedule(), self.rng)
        self.assertEqual(batch.t, 1)
        self.assertEqual(len(batch.dynamic), 8)
        self.assertEqual(tuple(batch.points.shape), (8, 3))
        self.assertIsNone(batch.labels)

        points = batch.points.numpy()
        self.assertTrue(np.all(points >= self.scene.grid.lower) and np.all(points <= self.scene.grid.upper))

        self.assertEqual(len(self.data.sample(1, small_schedule(static_only=True), self.rng).dynamic), 0)
        self.assertEqual(len(self.data.sample(1, small_schedule(), self.rng, single=True).dynamic), 0)


class TestOptimize(unittest.TestCase):
    """
    Test Optimize Class

    Test class for the Adam loop, the frozen dynamic field and checkpoints.

    """

    def setUp(self) -> None:
        """
        Set up the training data and objective of the tiny scene.

        :return: None

        """

        self.directory = tempfile.TemporaryDirectory()
        self.scene = tiny_scene()
        oracle = SceneOracle(scene=self.scene)
        self.poses = [oracle.pose(t) for t in range(self.scene.frames)]
        batches = make_batches(oracle, self.scene.cameras, self.scene.lidar, range(self.scene.frames), seed=0)
        self.data = optimization.TrainingData(
            spec=self.scene.grid, poses=self.poses, cameras=self.scene.cameras, batches=batches
        )
        self.objective = Objective(weights=LossWeights(), aggregation=AggParams(), samples=8)
        self.similarity = SimFlowParams(window=3, cell=0.2, interval=2)

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_optimize(self) -> None:
        """
        Test that iterations advance the state and change the fields.

        :return: None

        """

        state = optimization.initial_state(poses=self.poses, spec=self.scene.grid, schedule=small_schedule(), a=10.0)
        self.assertEqual(len(state.parameters), 25)
        before = state.fields.phi_s[1].values.detach().clone()

        optimization.optimize(state, self.data, self.objective, self.similarity, seed=0)
        self.assertEqual(state.iteration, 3)
        self.assertEqual([r.iteration for r in state.trace], [0, 1, 2])
        self.assertTrue(all(math.isfinite(r.total) for r in state.trace))
        self.assertFalse(torch.equal(before, state.fields.phi_s[1].values.detach()))

        optimization.optimize(state, self.data, self.objective, self.similarity, seed=1)
        self.assertEqual(state.iteration, 6)
        self.assertEqual(state.trace[-1].iteration, 5)

    def test_static_only(self) -> None:
        """
        Test that the dynamic groups stay frozen.

        :return: None

        """

        state = optimization.initial_state(
            poses=self.poses, spec=self.scene.grid, schedule=small_schedule(static_only=True), a=10.0
        )
        self.assertEqual(len(state.parameters), 9)
        optimization.optimize(state, self.data, self.objective, self.similarity, seed=0)

        for name in optimization.DYNAMIC_GROUPS:
            for values in state.fields.grids(name):
                self.assertFalse(values.requires_grad)

        self.assertEqual(float(state.fields.phi_d[1].values.min()), 1.0)

    def test_labels(self) -> None:
        """
        Test that pseudo-labels are cached for the refresh interval.

        :return: None

        """

        state = optimization.initial_state(poses=self.poses, spec=self.scene.grid, schedule=small_schedule(), a=10.0)
        first = state.labels(1, self.similarity)
        state.iteration = 1
        self.assertIs(state.labels(1, self.similarity), first)
        state.iteration = 2
        self.assertIsNot(state.labels(1, self.similarity), first)

    def test_errors(self) -> None:
        """
        Test short sequences and divergence.

        :return: None

        """

        short = optimization.TrainingData(
            spec=self.scene.grid, poses=self.poses[:2], cameras=self.scene.cameras, batches=[]
        )
        state = optimization.initial_state(poses=self.poses[:2], spec=self.scene.grid, schedule=small_schedule(), a=10.0)
        self.assertRaises(ValueError, optimization.optimize, **{
            "state": state, "data": short, "objective": self.objective, "similarity": self.similarity, "seed": 0
        })

        state = optimization.initial_state(
            poses=self.poses, spec=self.scene.grid, schedule=small_schedule(divergence=0.0), a=10.0
        )

        with self.assertRaises(DivergenceError) as context:
            optimization.optimize(state, self.data, self.objective, self.similarity, seed=0)

        self.assertEqual(context.exception.iteration, 0)
        self.assertEqual(len(context.exception.trace), 1)
        self.assertEqual(state.iteration, 0)

    def test_checkpoint(self) -> None:
        """
        Test that a restored state continues with the same fields and Adam moments.

        :return: None

        """

        state = optimization.initial_state(poses=self.poses, spec=self.scene.grid, schedule=small_schedule(), a=10.0)
        optimization.optimize(state, self.data, self.objective, self.similarity, seed=0)
        path = os.path.join(self.directory.name, "state.grid")
        state.checkpoint(path, metadata={"seed": 0})

        restored = optimization.TrainState.restore(path, poses=self.poses, schedule=small_schedule())
        self.assertEqual(restored.iteration, 3)
        np.testing.assert_allclose(
            restored.fields.phi_s[1].numpy(), state.fields.phi_s[1].values.detach().numpy(), rtol=1e-6, atol=1e-6
        )
        self.assertAlmostEqual(float(restored.fields.a), float(state.fields.a), places=5)

        for old, new in zip(state.parameters, restored.parameters):
            moments = state.optimizer.state.get(old, {})

            if "exp_avg" not in moments:
                self.assertNotIn(new, restored.optimizer.state)
                continue

            self.assertEqual(float(restored.optimizer.state[new]["step"]), float(moments["step"]))
            np.testing.assert_allclose(
                restored.optimizer.state[new]["exp_avg"].numpy(), moments["exp_avg"].numpy(), rtol=1e-5, atol=1e-7
            )

        optimization.optimize(restored, self.data, self.objective, self.similarity, seed=1)
        self.assertEqual(restored.iteration, 6)


if __name__ == "__main__":
    unittest.main()
