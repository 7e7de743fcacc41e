import os
from typing import Optional
import numpy as np
from PIL import Image


def to_bytes(image: np.ndarray, low: float = 0.0, high: Optional[float] = None) -> np.ndarray:
    """
    Scale an image to 8-bit levels, mapping `low` to 0 and `high` to 255.

    NaN pixels become 0.

    :param image: np.ndarray, The image.
    :param low: float, Value drawn black.
    :param high: Optional[float], Value drawn white (defaults to the image maximum).
    :return: np.ndarray

    """

    image = np.asarray(image, dtype=np.float64)
    finite = np.isfinite(image)

    if high is None:
        high = float(np.max(image[finite])) if finite.any() else 1.0

    span = high - low if high > low else 1.0
    scaled = np.where(finite, (image - low) / span, 0.0)
    return np.round(np.clip(scaled, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pgm(path: str, image: np.ndarray, low: float = 0.0, high: Optional[float] = None) -> None:
    """
    Write a grayscale (H, W) image as binary PGM.

    :param path: str, The destination file.
    :param image: np.ndarray, The image (any range, see `to_bytes`).
    :param low: float, Value drawn black.
    :param high: Optional[float], Value drawn white.
    :return: None

    """

    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    Image.fromarray(to_bytes(image, low=low, high=high)).save(path, format="PPM")


def write_ppm(path: str, image: np.ndarray) -> None:
    """
    Write an RGB (H, W, 3) image with values in [0, 1] as binary PPM.

    :param path: str, The destination file.
    :param image: np.ndarray, The image.
    :return: None

    """

    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    Image.fromarray(to_bytes(image, low=0.0, high=1.0)).save(path, format="PPM")


def read_pgm(path: str) -> np.ndarray:
    """
    Read a grayscale image into [0, 1] floats.

    :param path: str, The source file.
    :return: np.ndarray

    """

    with Image.open(path) as image:
        return np.asarray(image.convert("L"), dtype=np.float64) / 255.0


def read_ppm(path: str) -> np.ndarray:
    with Image.open(path) as image:
        return np.asarray(image.convert("RGB"), dtype=np.float64) / 255.0
