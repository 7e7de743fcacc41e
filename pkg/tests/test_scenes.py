import math
import unittest
import numpy as np
from occflow.enums import FlowDirection
from occflow.scenes import SceneOracle, sd_box, sd_sphere
from tests.fixtures import tiny_scene


class TestPrimitives(unittest.TestCase):
    """
    Test Primitives Class

    """

    def test_box(self) -> None:
        """
        Test the box distance inside, on a face and at a corner.

        :return: None

        """

        half = np.array([0.5, 0.5, 0.5])
        points = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.5, 1.5, 0.0]])
        np.testing.assert_allclose(sd_box(points, half), [-0.5, 0.5, math.sqrt(2.0)])

    def test_sphere(self) -> None:
        """
        Test the sphere distance.

        :return: None

        """

        np.testing.assert_allclose(sd_sphere(np.array([[0.0, 0.0, 2.0], [0.0, 0.0, 0.0]]), 0.5), [1.5, -0.5])


class TestSceneOracle(unittest.TestCase):
    """
    Test Scene Oracle Class

    Test class for the analytic scene: distances, ray casting, flow and masks.

    Attributes:
        oracle (`SceneOracle`): The tiny scene with a still ego.

    """

    def setUp(self) -> None:
        """
        Set up the oracle of the tiny scene with a still ego.

        :return: None

        """

        self.oracle = SceneOracle(scene=tiny_scene())

    def test_requires_static(self) -> None:
        """
        Test that a scene made only of movers is rejected.

        :return: None

        """

        scene = tiny_scene()
        scene.primitives = [p for p in scene.primitives if p.dynamic]
        self.assertRaises(ValueError, SceneOracle, **{"scene": scene})

    def test_sdf(self) -> None:
        """
        Test the union and the static/dynamic restrictions.

        :return: None

        """

        x = np.array([[0.0, 1.0, 0.4], [1.0, 0.0, 0.3], [-1.0, -1.0, 0.5]])
        np.testing.assert_allclose(self.oracle.scene_sdf(x, 0), [-0.3, -0.3, 0.5])
        np.testing.assert_allclose(self.oracle.scene_sdf(x, 0, dynamic=False), [0.4, -0.3, 0.5])
        self.assertAlmostEqual(float(self.oracle.scene_sdf(x, 0, dynamic=True)[0]), -0.3)

        still = SceneOracle(scene=tiny_scene(dynamic=False))
        self.assertTrue(np.all(np.isinf(still.scene_sdf(x, 0, dynamic=True))))

    def test_sdf_lipschitz(self) -> None:
        """
        Test that the scene distance changes no faster than the point moves, near and far apart.

        :return: None

        """

        rng = np.random.default_rng(0)

        for t in range(3):
            x = rng.uniform(-2.0, 2.0, size=(4000, 3))

            for scale in [2.0, 0.05]:
                y = x + rng.normal(scale=scale, size=x.shape)
                change = np.abs(self.oracle.scene_sdf(x, t) - self.oracle.scene_sdf(y, t))
                self.assertTrue(np.all(change <= np.linalg.norm(x - y, axis=1) + 1e-9))

    def test_trace_hits(self) -> None:
        """
        Test that every traced hit lies on the surface of its frame.

        :return: None

        """

        rng = np.random.default_rng(1)
        origins = rng.uniform([-1.5, -1.5, 0.05], [1.5, 1.5, 1.2], size=(3000, 3))

        for t in range(3):
            start = origins[self.oracle.scene_sdf(origins, t) > 0.01]
            dirs = rng.normal(size=start.shape)
            dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
            ranges = self.oracle.trace(start, dirs, t, far=np.full(len(start), 5.0))
            hit = ~np.isnan(ranges)

            self.assertGreater(int(hit.sum()), 100)
            surface = self.oracle.scene_sdf(start[hit] + ranges[hit, None] * dirs[hit], t)
            self.assertLess(float(np.abs(surface).max()), 1e-5)

    def test_sdf_grid(self) -> None:
        """
        Test that the grid holds the exact distances at cell centers.

        :return: None

        """

        grid = self.oracle.sdf_grid(t=1, dynamic=False)
        self.assertEqual(grid.shape, (16, 16, 8))
        centers = self.oracle.spec.centers()
        np.testing.assert_allclose(grid[3, 4, 5], self.oracle.scene_sdf(centers[3, 4, 5], 1, dynamic=False))
        self.assertAlmostEqual(float(grid[0, 0, 0]), -0.3)

    def test_cast_rays(self) -> None:
        """
        Test ranges, colors and dynamic flags of hits and misses.

        :return: None

        """

        origins = np.array([[0.0, 0.0, 0.3], [0.0, 0.0, 0.4], [0.0, 0.0, 0.3], [0.0, 0.0, 0.3]])
        dirs = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0], [-1.0, 0.0, 0.0]])
        hits = self.oracle.cast_rays(origins, dirs, 0)

        np.testing.assert_allclose(hits.ranges[:3], [0.7, 0.7, 0.3], atol=1e-5)
        self.assertTrue(math.isnan(hits.ranges[3]))
        self.assertEqual(list(hits.primitive), [1, 2, 0, -1])
        self.assertEqual(list(hits.dynamic), [False, True, False, False])
        np.testing.assert_allclose(hits.colors[1], [0.1, 0.3, 0.9])
        np.testing.assert_allclose(hits.colors[3], [0.0, 0.0, 0.0])

    def test_moving_ball(self) -> None:
        """
        Test that the ball range follows its motion.

        :return: None

        """

        value, _, dynamic = self.oracle.cast_ray([0.0, 0.0, 0.4], [0.0, 1.0, 0.0], 1)
        self.assertAlmostEqual(value, 1.0 - math.sqrt(0.08), places=5)
        self.assertTrue(dynamic)

        value, _, dynamic = self.oracle.cast_ray([0.0, 0.0, 0.3], [0.0, 0.0, 1.0], 1)
        self.assertIsNone(value)
        self.assertFalse(dynamic)

    def test_ego_motion(self) -> None:
        """
        Test that ranges are measured from the moving platform.

        :return: None

        """

        oracle = SceneOracle(scene=tiny_scene(velocity=[0.1, 0.0, 0.0]))
        value, _, _ = oracle.cast_ray([0.0, 0.0, 0.3], [1.0, 0.0, 0.0], 2)
        self.assertAlmostEqual(value, 0.5, places=5)
        np.testing.assert_allclose(oracle.to_ego([[0.2, 0.0, 0.0]], 2), [[0.0, 0.0, 0.0]], atol=1e-12)

    def test_mover(self) -> None:
        """
        Test the mover lookup, surfaces included.

        :return: None

        """

        x = np.array([[0.0, 1.0, 0.4], [0.0, 1.0, 0.7], [0.0, 1.0, 0.8], [1.0, 0.0, 0.3]])
        self.assertEqual(list(self.oracle.mover(x, 0)), [2, 2, -1, -1])
        self.assertEqual(int(self.oracle.mover(np.array([0.25, 1.0, 0.4]), 1)), 2)

    def test_flow(self) -> None:
        """
        Test both flow directions and the velocity.

        :return: None

        """

        x = np.array([[0.0, 1.0, 0.4], [1.0, 0.0, 0.3]])
        np.testing.assert_allclose(self.oracle.gt_flow(x, 0, FlowDirection.FORWARD), [[0.1, 0.0, 0.0], [0.0, 0.0, 0.0]])
        np.testing.assert_allclose(self.oracle.gt_flow(x, 0, FlowDirection.BACKWARD), [[-0.1, 0.0, 0.0], [0.0, 0.0, 0.0]])
        np.testing.assert_allclose(self.oracle.velocity(x, 0)[0], [1.0, 0.0, 0.0])
        np.testing.assert_allclose(self.oracle.primitive_velocity([2, -1]), [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])

    def test_ego_flow(self) -> None:
        """
        Test that ego flow is expressed in the axes of a turned platform.

        :return: None

        """

        oracle = SceneOracle(scene=tiny_scene(heading=90.0))
        ego = oracle.to_ego(np.array([[0.0, 1.0, 0.4]]), 0)
        np.testing.assert_allclose(ego, [[1.0, 0.0, 0.4]], atol=1e-12)
        np.testing.assert_allclose(oracle.ego_flow(ego, 0, FlowDirection.FORWARD), [[0.0, -0.1, 0.0]], atol=1e-12)

    def test_sample_dynamic_points(self) -> None:
        """
        Test that sampled points lie inside the ball and the volume.

        :return: None

        """

        points = self.oracle.sample_dynamic_points(t=1, count=50, rng=np.random.default_rng(0))
        self.assertGreater(len(points), 0)
        self.assertLessEqual(len(points), 50)
        self.assertTrue(np.all(self.oracle.ego_sdf(points, 1, dynamic=True) <= 1e-6))
        self.assertTrue(np.all(points > self.oracle.spec.lower) and np.all(points < self.oracle.spec.upper))

        still = SceneOracle(scene=tiny_scene(dynamic=False))
        self.assertEqual(still.sample_dynamic_points(t=1, count=50, rng=np.random.default_rng(0)).shape, (0, 3))

    def test_render_masks(self) -> None:
        """
        Test one mask per visible mover.

        :return: None

        """

        camera = self.oracle.scene.cameras[0]
        camera.yaw, camera.pitch = 90.0, 0.0
        masks = self.oracle.render_masks(camera=camera, t=0, confidence=0.9)
        self.assertEqual(len(masks), 1)
        mask, score = masks[0]
        self.assertEqual(mask.shape, (12, 16))
        self.assertEqual(score, 0.9)
        self.assertTrue(mask[6, 8])

        camera.yaw = -90.0
        self.assertEqual(self.oracle.render_masks(camera=camera, t=0, confidence=0.9), [])


if __name__ == "__main__":
    unittest.main()
