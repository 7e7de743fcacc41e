import collections
import itertools
import os
import tempfile
import unittest
import numpy as np
from occflow import labeling
from occflow.enums import RayLabel, SensorKind
from occflow.models import LabelingParams
from occflow.rays import RayBatch
from occflow.scenes import SceneOracle
from tests.fixtures import tiny_grid, tiny_scene


ORIGIN = np.array([0.0, 0.0, 0.3])


def batch_to(endpoints: np.ndarray, misses: int = 0) -> RayBatch:
    """
    Build a LiDAR batch from the sensor origin to the given endpoints.

    :param endpoints: np.ndarray, Endpoints (N, 3).
    :param misses: int, Number of rays without a return appended at the end.
    :return: RayBatch

    """

    offsets = np.asarray(endpoints, dtype=np.float64) - ORIGIN
    ranges = np.linalg.norm(offsets, axis=1)
    dirs = np.concatenate([offsets / ranges[:, None], np.tile([0.0, 0.0, 1.0], (misses, 1))])
    ranges = np.concatenate([ranges, np.full(misses, np.nan)])
    return RayBatch(origins=np.tile(ORIGIN, (len(dirs), 1)), dirs=dirs, t=1, kind=SensorKind.LIDAR, gt_range=ranges)


class TestMaskSet(unittest.TestCase):
    """
    Test Mask Set Class

    """

    def setUp(self) -> None:
        """
        Set up a scratch directory and two masks.

        :return: None

        """

        self.directory = tempfile.TemporaryDirectory()
        self.masks = labeling.MaskSet()
        mask = np.zeros((12, 16), dtype=bool)
        mask[4:8, 6:10] = True
        self.masks.add(t=2, camera="front", mask=mask, score=0.9)
        self.masks.add(t=0, camera="front", mask=~mask, score=0.6)

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_add(self) -> None:
        """
        Test lookups and score bounds.

        :return: None

        """

        self.assertEqual(len(self.masks), 2)
        self.assertEqual(self.masks.keys(), [(0, "front"), (2, "front")])
        self.assertEqual(self.masks.get(t=1, camera="front"), [])
        self.assertEqual(self.masks.get(t=2, camera="front")[0][1], 0.9)
        self.assertRaises(ValueError, self.masks.add, **{"t": 0, "camera": "front", "mask": np.zeros((2, 2)), "score": 1.5})

    def test_save_load(self) -> None:
        """
        Test that masks and their scores survive the PGM files.

        :return: None

        """

        paths = self.masks.save(directory=self.directory.name)
        self.assertEqual([os.path.basename(p) for p in paths], ["frame_000_front_mask_0.pgm", "frame_002_front_mask_0.pgm"])

        with open(os.path.join(self.directory.name, "notes.txt"), "w") as handle:
            handle.write("ignored")

        loaded = labeling.MaskSet.load(directory=self.directory.name)
        self.assertEqual(loaded.keys(), self.masks.keys())
        mask, score = loaded.get(t=2, camera="front")[0]
        np.testing.assert_array_equal(mask, self.masks.get(t=2, camera="front")[0][0])
        self.assertAlmostEqual(score, 0.9, places=2)

    def test_from_oracle(self) -> None:
        """
        Test one mask per frame for a camera facing the ball.

        :return: None

        """

        scene = tiny_scene()
        camera = scene.cameras[0]
        camera.yaw, camera.pitch = 90.0, 0.0
        masks = labeling.MaskSet.from_oracle(
            oracle=SceneOracle(scene=scene), cameras=[camera], frames=range(3), params=LabelingParams(), seed=0
        )
        self.assertEqual(masks.keys(), [(0, "front"), (1, "front"), (2, "front")])
        self.assertEqual(masks.get(t=1, camera="front")[0][1], 0.9)


class TestClusters(unittest.TestCase):
    """
    Test Clusters Class

    """

    def test_connectivity(self) -> None:
        """
        Test that voxels touching at a corner belong to one component.

        :return: None

        """

        occupied = np.zeros((4, 4, 4), dtype=bool)
        occupied[0, 0, 0] = occupied[1, 1, 1] = True
        self.assertEqual(labeling.connected_components_3d(occupied).count, 1)

        occupied[1, 1, 1] = False
        occupied[2, 0, 0] = True
        self.assertEqual(labeling.connected_components_3d(occupied).count, 2)

    def test_largest(self) -> None:
        """
        Test the largest component and the tie rule.

        :return: None

        """

        occupied = np.zeros((6, 2, 2), dtype=bool)
        occupied[0, 0, 0] = True
        occupied[3:5, 0, 0] = True
        clusters = labeling.connected_components_3d(occupied)
        self.assertEqual(clusters.sizes.tolist(), [1, 2])
        self.assertEqual(clusters.largest(), 2)

        occupied[0, 1, 0] = True
        self.assertEqual(labeling.connected_components_3d(occupied).largest(), 1)
        self.assertEqual(labeling.connected_components_3d(np.zeros((2, 2, 2), dtype=bool)).largest(), 0)

    def test_flood_fill(self) -> None:
        """
        Test the components against a breadth-first flood fill on random volumes.

        :return: None

        """

        rng = np.random.default_rng(11)
        steps = [d for d in itertools.product((-1, 0, 1), repeat=3) if d != (0, 0, 0)]

        for k in range(100):
            occupied = rng.random((16, 16, 16)) < [0.05, 0.2, 0.5][k % 3]
            expected = np.zeros(occupied.shape, dtype=np.int64)
            count = 0

            for start in zip(*np.nonzero(occupied)):
                if expected[start] > 0:
                    continue

                count += 1
                expected[start] = count
                queue = collections.deque([start])

                while queue:
                    cell = queue.popleft()

                    for step in steps:
                        other = tuple(c + s for c, s in zip(cell, step))

                        if all(0 <= c < 16 for c in other) and occupied[other] and expected[other] == 0:
                            expected[other] = count
                            queue.append(other)

            clusters = labeling.connected_components_3d(occupied)
            self.assertEqual(clusters.count, count)
            np.testing.assert_array_equal(clusters.labels > 0, occupied)
            pairs = np.unique(np.stack([expected[occupied], clusters.labels[occupied]]), axis=1)
            self.assertEqual(pairs.shape[1], count)

    def test_partition_stable(self) -> None:
        """
        Test that repeated runs, relabeled inputs and transposed or mirrored volumes give
        the same partition, numbered in scan order.

        :return: None

        """

        rng = np.random.default_rng(12)

        for k in range(30):
            occupied = rng.random((12, 10, 8)) < [0.1, 0.25, 0.4][k % 3]
            clusters = labeling.connected_components_3d(occupied)
            np.testing.assert_array_equal(labeling.connected_components_3d(occupied).labels, clusters.labels)
            np.testing.assert_array_equal(labeling.connected_components_3d(clusters.labels > 0).labels, clusters.labels)

            _, first = np.unique(clusters.labels.reshape(-1), return_index=True)
            self.assertTrue(np.all(np.diff(first[1:]) > 0))

            axes, mirror = tuple(rng.permutation(3)), int(rng.integers(3))
            turned = np.flip(np.transpose(occupied, axes), axis=mirror)
            moved = np.flip(np.transpose(clusters.labels, axes), axis=mirror)
            other = labeling.connected_components_3d(turned)
            self.assertEqual(other.count, clusters.count)
            self.assertEqual(sorted(other.sizes.tolist()), sorted(clusters.sizes.tolist()))
            pairs = np.unique(np.stack([moved[turned], other.labels[turned]]), axis=1)
            self.assertEqual(pairs.shape[1], other.count)

    def test_voxelize(self) -> None:
        """
        Test voxel indices and the inside flags.

        :return: None

        """

        points = np.array([[0.05, 1.05, 0.3], [0.0, 1.7, 0.3], [np.nan, np.nan, np.nan]])
        cells, inside = labeling.voxelize(points, tiny_grid())
        self.assertEqual(inside.tolist(), [True, False, False])
        self.assertEqual(cells[0].tolist(), [8, 13, 3])


class TestClassifyRays(unittest.TestCase):
    """
    Test Classify Rays Class

    Test class for turning instance masks into static, dynamic and discard labels.

    """

    def setUp(self) -> None:
        """
        Set up a camera facing +y and endpoints forming a cluster of three voxels,
        a lone voxel, a point behind the camera and a point outside the volume.

        :return: None

        """

        self.camera = tiny_scene().cameras[0]
        self.camera.yaw, self.camera.pitch = 90.0, 0.0
        self.spec = tiny_grid()
        self.params = LabelingParams()
        self.batch = batch_to(np.array([
            [0.05, 1.05, 0.3],
            [0.25, 1.05, 0.3],
            [-0.15, 1.05, 0.3],
            [0.85, 1.25, 0.3],
            [0.05, -1.05, 0.3],
            [0.05, 1.7, 0.3],
        ]), misses=1)

    def classify(self, score: float) -> list:
        masks = labeling.MaskSet()
        masks.add(t=1, camera="front", mask=np.ones((12, 16), dtype=bool), score=score)
        labels = labeling.classify_rays(
            batch=self.batch, masks=masks, cameras=[self.camera], spec=self.spec, params=self.params
        )
        return [RayLabel(v) for v in labels]

    def test_dynamic(self) -> None:
        """
        Test that only the largest cluster of a confident mask stays dynamic.

        :return: None

        """

        self.assertEqual(self.classify(score=0.9), [
            RayLabel.DYNAMIC, RayLabel.DYNAMIC, RayLabel.DYNAMIC, RayLabel.STATIC,
            RayLabel.DISCARD, RayLabel.DISCARD, RayLabel.STATIC,
        ])

    def test_uncertain(self) -> None:
        """
        Test that endpoints in a weak mask are discarded.

        :return: None

        """

        self.assertEqual(self.classify(score=0.4)[:4], [RayLabel.DISCARD] * 4)
        self.assertEqual(self.classify(score=0.1)[:4], [RayLabel.STATIC] * 4)

    def test_mask_shape(self) -> None:
        """
        Test that masks of the wrong size are rejected.

        :return: None

        """

        masks = labeling.MaskSet()
        masks.add(t=1, camera="front", mask=np.ones((4, 4), dtype=bool), score=0.9)
        self.assertRaises(ValueError, labeling.classify_rays, **{
            "batch": self.batch, "masks": masks, "cameras": [self.camera], "spec": self.spec, "params": self.params
        })

    def test_label_batches(self) -> None:
        """
        Test that only LiDAR batches are relabeled.

        :return: None

        """

        camera = RayBatch(origins=np.zeros((2, 3)), t=1, kind=SensorKind.CAMERA, camera="front", labels=[1, 1])
        masks = labeling.MaskSet()
        out = labeling.label_batches(
            batches=[self.batch, camera], masks=masks, cameras=[self.camera], spec=self.spec, params=self.params
        )
        self.assertEqual(out[0].labels.tolist(), [0, 0, 0, 0, 2, 2, 0])
        self.assertEqual(out[1].labels.tolist(), [1, 1])

        unchanged = labeling.label_batches(
            batches=[camera], masks=None, cameras=[self.camera], spec=self.spec, params=self.params
        )
        self.assertIs(unchanged[0], camera)


if __name__ == "__main__":
    unittest.main()
