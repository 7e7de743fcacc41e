import os
import tempfile
import unittest
import numpy as np
from occflow import images


class TestImages(unittest.TestCase):
    """
    Test Images Class

    """

    def setUp(self) -> None:
        """
        Set up a scratch directory.

        :return: None

        """

        self.directory = tempfile.TemporaryDirectory()

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_to_bytes(self) -> None:
        """
        Test the 8-bit scaling.

        :return: None

        """

        levels = images.to_bytes(np.array([[0.0, 1.0], [2.0, np.nan]]))
        self.assertEqual(levels.dtype, np.uint8)
        self.assertEqual(levels.tolist(), [[0, 128], [255, 0]])
        self.assertEqual(images.to_bytes(np.array([5.0]), low=0.0, high=2.5).tolist(), [255])

    def test_pgm(self) -> None:
        """
        Test writing and reading a grayscale depth image.

        :return: None

        """

        path = os.path.join(self.directory.name, "depth", "frame_001.pgm")
        depth = np.tile(np.linspace(0.0, 4.0, 6), (3, 1))
        images.write_pgm(path=path, image=depth, high=4.0)
        image = images.read_pgm(path=path)
        self.assertEqual(image.shape, (3, 6))
        np.testing.assert_allclose(image * 4.0, depth, atol=4.0 / 255.0)

        with open(path, "rb") as handle:
            self.assertEqual(handle.read(2), b"P5")

    def test_ppm(self) -> None:
        """
        Test writing and reading a color image.

        :return: None

        """

        path = os.path.join(self.directory.name, "frame_001.ppm")
        color = np.zeros((2, 3, 3))
        color[0, :, 0] = 1.0
        color[1, :, 2] = 0.5
        images.write_ppm(path=path, image=color)
        image = images.read_ppm(path=path)
        self.assertEqual(image.shape, (2, 3, 3))
        np.testing.assert_allclose(image, color, atol=1.0 / 255.0)

        with open(path, "rb") as handle:
            self.assertEqual(handle.read(2), b"P6")


if __name__ == "__main__":
    unittest.main()
