import math
import os
import tempfile
import unittest
import numpy as np
import torch
from occflow import grids
from occflow.exceptions import GridFormatError
from occflow.models import GridSpec


def linear(points: np.ndarray) -> np.ndarray:
    return 1.0 + 2.0 * points[..., 0] - points[..., 1] + 0.5 * points[..., 2]


class TestGrid3(unittest.TestCase):
    """
    Test Grid3 Class

    Test class for the dense grid storage and its trilinear sampling.

    """

    def setUp(self) -> None:
        """
        Set up a small grid holding a linear field.

        :return: None

        """

        self.spec = GridSpec(origin=[0.0, 0.0, 0.0], extent=[1.0, 0.8, 0.6], resolution=0.2)
        self.grid = grids.ScalarGrid3.from_function(spec=self.spec, fn=linear)

    def test_shape(self) -> None:
        """
        Test the value layout and shape checks.

        :return: None

        """

        self.assertEqual(tuple(self.grid.values.shape), (5, 4, 3, 1))
        self.assertEqual(self.grid.values.dtype, torch.float64)
        self.assertRaises(ValueError, grids.ScalarGrid3, **{"spec": self.spec, "values": torch.zeros(4, 4, 3)})
        self.assertRaises(ValueError, grids.VectorGrid3, **{"spec": self.spec, "values": torch.zeros(5, 4, 3, 2)})

        flow = grids.VectorGrid3.full(spec=self.spec, fill=(0.1, 0.0, -0.1), requires_grad=True)
        self.assertEqual(tuple(flow.values.shape), (5, 4, 3, 3))
        self.assertTrue(flow.values.is_leaf and flow.values.requires_grad)

    def test_cell_centers(self) -> None:
        """
        Test that sampling at a cell center returns the stored value.

        :return: None

        """

        centers = torch.from_numpy(self.spec.centers())
        np.testing.assert_allclose(self.grid.sample(centers).numpy(), self.grid.numpy()[..., 0], atol=1e-12)

    def test_linear_exact(self) -> None:
        """
        Test that a linear field is reproduced between cell centers.

        :return: None

        """

        rng = np.random.default_rng(0)
        points = np.array([0.1, 0.1, 0.1]) + rng.random((64, 3)) * np.array([0.8, 0.6, 0.4])
        values = grids.sample_trilinear(grid=self.grid, x=points)
        self.assertEqual(tuple(values.shape), (64,))
        np.testing.assert_allclose(values.numpy(), linear(points), atol=1e-10)

    def test_clamp(self) -> None:
        """
        Test that points outside the volume take the boundary value.

        :return: None

        """

        outside = grids.sample_trilinear(grid=self.grid, x=[2.0, 0.3, -5.0])
        self.assertAlmostEqual(float(outside), float(linear(np.array([0.9, 0.3, 0.1]))), places=10)

    def test_gradient(self) -> None:
        """
        Test that gradients flow to the grid values.

        :return: None

        """

        grid = self.grid.clone(requires_grad=True)
        grid.sample(torch.tensor([[0.3, 0.3, 0.3]], dtype=torch.float64)).sum().backward()
        self.assertAlmostEqual(float(grid.values.grad.sum()), 1.0, places=12)


class TestBlending(unittest.TestCase):
    """
    Test Blending Class

    """

    def test_sigmoid(self) -> None:
        """
        Test both sigmoid orientations.

        :return: None

        """

        self.assertAlmostEqual(float(grids.sigmoid_occ(phi=0.0, a=10.0)), 0.5)
        self.assertGreater(float(grids.sigmoid_occ(phi=-0.2, a=10.0)), 0.5)
        self.assertLess(float(grids.sigmoid_occ(phi=-0.2, a=10.0, occupancy=False)), 0.5)
        self.assertAlmostEqual(
            float(grids.sigmoid_occ(phi=0.3, a=5.0) + grids.sigmoid_occ(phi=0.3, a=5.0, occupancy=False)), 1.0
        )
        self.assertRaises(ValueError, grids.sigmoid_occ, **{"phi": 0.0, "a": 0.0})

    def test_bounds(self) -> None:
        """
        Test that the smooth minimum stays within `ln 2 * tau / a` below the minimum.

        :return: None

        """

        rng = np.random.default_rng(1)
        phi_s = torch.from_numpy(rng.normal(size=10000) * 3.0)
        phi_d = torch.from_numpy(rng.normal(size=10000) * 3.0)

        for a, tau in [(1.0, 1.0), (20.0, 2.0), (200.0, 2.0), (1e4, 1.0)]:
            blended = grids.blend_sdf(phi_s=phi_s, phi_d=phi_d, a=a, tau=tau)
            low = torch.minimum(phi_s, phi_d)
            self.assertTrue(bool(torch.all(blended <= low)))
            self.assertTrue(bool(torch.all(blended >= low - math.log(2.0) * tau / a)))

        deviation = torch.minimum(phi_s, phi_d) - grids.blend_sdf(phi_s=phi_s, phi_d=phi_d, a=200.0, tau=2.0)
        self.assertLess(float(deviation.max()), 0.007)

        tie = grids.blend_sdf(phi_s=0.5, phi_d=0.5, a=10.0, tau=2.0)
        self.assertAlmostEqual(float(tie), 0.5 - 2.0 * math.log(2.0) / 10.0, places=12)

    def test_symmetric(self) -> None:
        """
        Test that swapping the two fields changes neither the blend nor its gradients.

        :return: None

        """

        rng = np.random.default_rng(2)

        for a, tau in [(1.0, 1.0), (10.0, 2.0), (500.0, 0.5)]:
            x = torch.from_numpy(rng.normal(size=2000) * 2.0).requires_grad_(True)
            y = torch.from_numpy(rng.normal(size=2000) * 2.0).requires_grad_(True)
            forward = grids.blend_sdf(phi_s=x, phi_d=y, a=a, tau=tau)
            backward = grids.blend_sdf(phi_s=y, phi_d=x, a=a, tau=tau)
            np.testing.assert_array_equal(forward.detach().numpy(), backward.detach().numpy())

            grad_x, grad_y = torch.autograd.grad(forward.sum(), (x, y))
            swapped_y, swapped_x = torch.autograd.grad(backward.sum(), (y, x))
            np.testing.assert_allclose(grad_x.numpy(), swapped_x.numpy(), atol=1e-15)
            np.testing.assert_allclose(grad_y.numpy(), swapped_y.numpy(), atol=1e-15)

    def test_weights(self) -> None:
        """
        Test the soft assignment of the smooth minimum.

        :return: None

        """

        w_s, w_d = grids.blend_weights(phi_s=torch.tensor([-1.0, 0.0, 1.0]), phi_d=0.0, a=10.0, tau=2.0)
        np.testing.assert_allclose((w_s + w_d).numpy(), 1.0)
        self.assertGreater(float(w_s[0]), 0.99)
        self.assertAlmostEqual(float(w_s[1]), 0.5)
        self.assertRaises(ValueError, grids.blend_rate, **{"a": 10.0, "tau": 0.0})

    def test_gradcheck(self) -> None:
        """
        Test the smooth minimum gradients against finite differences.

        :return: None

        """

        x = torch.tensor([-0.3, 0.0, 0.2, 1.0], dtype=torch.float64, requires_grad=True)
        y = torch.tensor([0.1, 0.0, -0.4, 1.5], dtype=torch.float64, requires_grad=True)
        a = torch.tensor(4.0, dtype=torch.float64, requires_grad=True)
        self.assertTrue(torch.autograd.gradcheck(lambda p, q, s: grids.blend_sdf(p, q, s, 2.0), (x, y, a)))


class TestReductions(unittest.TestCase):
    """
    Test Reductions Class

    """

    def test_tree_sum(self) -> None:
        """
        Test the pairwise sums, including odd lengths.

        :return: None

        """

        values = torch.arange(1, 12, dtype=torch.float64).reshape(1, 11)
        self.assertEqual(float(grids.tree_sum(values)[0]), 66.0)
        self.assertEqual(tuple(grids.tree_sum(torch.ones(3, 5, dtype=torch.float64), dim=0).shape), (5,))
        self.assertEqual(float(grids.tree_mean(torch.tensor([1.0, 2.0, 6.0], dtype=torch.float64))), 3.0)
        self.assertEqual(float(grids.tree_mean(torch.zeros(0, dtype=torch.float64))), 0.0)


class TestVolumeBounds(unittest.TestCase):
    """
    Test Volume Bounds Class

    """

    def test_bounds(self) -> None:
        """
        Test rays starting inside, outside and pointing away from the volume.

        :return: None

        """

        spec = GridSpec(origin=[0.0, 0.0, 0.0], extent=[1.0, 0.8, 0.6], resolution=0.2)
        origins = np.array([[0.5, 0.4, 0.3], [-1.0, 0.4, 0.3], [-1.0, 0.4, 0.3]])
        dirs = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
        entry, leave = grids.volume_bounds(spec=spec, origins=origins, dirs=dirs)
        np.testing.assert_allclose(entry[:2], [0.0, 1.0])
        np.testing.assert_allclose(leave[:2], [0.5, 2.0])
        self.assertLess(leave[2], entry[2])


class TestGridFile(unittest.TestCase):
    """
    Test Grid File Class

    """

    def setUp(self) -> None:
        """
        Set up a scratch directory and a grid.

        :return: None

        """

        self.directory = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.directory.name, "fields.grid")
        self.spec = GridSpec(origin=[0.0, 0.0, 0.0], extent=[1.0, 0.8, 0.6], resolution=0.2)

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_write_read(self) -> None:
        """
        Test that arrays and metadata are stored in float32.

        :return: None

        """

        phi = grids.ScalarGrid3.from_function(spec=self.spec, fn=linear).numpy()
        flow = np.random.default_rng(2).normal(size=(5, 4, 3, 3))
        grids.write_grid_file(path=self.path, spec=self.spec, arrays={"phi_s": phi, "flow": flow}, metadata={"a": 12.5})
        spec, arrays, metadata = grids.read_grid_file(path=self.path)

        self.assertEqual(spec, self.spec)
        self.assertEqual(list(arrays.keys()), ["phi_s", "flow"])
        self.assertEqual(arrays["flow"].dtype, np.float64)
        np.testing.assert_allclose(arrays["phi_s"], phi, rtol=1e-6)
        np.testing.assert_allclose(arrays["flow"], flow.astype(np.float32))
        self.assertEqual(metadata, {"a": 12.5})

    def test_save_load(self) -> None:
        """
        Test that single grids keep their kind.

        :return: None

        """

        grid = grids.VectorGrid3.full(spec=self.spec, fill=(0.5, 0.25, 0.0))
        grids.save_grid(path=self.path, grid=grid)
        loaded = grids.load_grid(path=self.path)
        self.assertIsInstance(loaded, grids.VectorGrid3)
        np.testing.assert_allclose(loaded.numpy(), grid.numpy())

    def test_errors(self) -> None:
        """
        Test that malformed files and non-finite arrays are rejected.

        :return: None

        """

        self.assertRaises(
            GridFormatError,
            grids.write_grid_file,
            **{"path": self.path, "spec": self.spec, "arrays": {"phi": np.full((5, 4, 3), np.nan)}}
        )

        with open(self.path, "wb") as handle:
            handle.write(b"not a header\n")

        self.assertRaises(GridFormatError, grids.read_grid_file, **{"path": self.path})

        grids.write_grid_file(path=self.path, spec=self.spec, arrays={"phi": np.zeros((5, 4, 3))})

        with open(self.path, "rb") as handle:
            content = handle.read()

        with open(self.path, "wb") as handle:
            handle.write(content[:-8])

        self.assertRaises(GridFormatError, grids.read_grid_file, **{"path": self.path})


if __name__ == "__main__":
    unittest.main()
